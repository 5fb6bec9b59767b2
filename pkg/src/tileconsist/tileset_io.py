"""Tileset file parsing/writing and assembly rendering (ASCII + SVG).

File grammar (UTF-8, line oriented, '#' comments):

    alphabet a b c ...
    glue <label> <label>
    tile <name> n=<label>:<0|1|2> s=... e=... w=... color=<token>
    seed <x> <y> <name>
    temperature 2

Omitted tile sides default to the null glue (no label, strength 0).
The glue relation is closed under symmetry on load.
"""

from __future__ import annotations

from .tam import (
    Assembly,
    BindingRelation,
    Glue,
    NULL_GLUE,
    TileAssemblySystem,
    TileType,
    TilesetError,
)

_SIDE_KEYS = {"n": "north", "s": "south", "e": "east", "w": "west"}


def _parse_glue(token: str, line_no: int) -> Glue:
    if ":" not in token:
        raise TilesetError(f"line {line_no}: glue spec {token!r} must be label:strength")
    label, _, strength = token.rpartition(":")
    try:
        s = int(strength)
    except ValueError:
        raise TilesetError(f"line {line_no}: bad glue strength {strength!r}") from None
    if s not in (0, 1, 2):
        raise TilesetError(f"line {line_no}: glue strength must be 0, 1 or 2")
    return Glue(label, s)


def parse_tileset(text: str) -> TileAssemblySystem:
    """Parse and validate a tile system; raises TilesetError with a line number."""
    alphabet: set[str] = set()
    pairs: list[tuple[str, str]] = []
    tiles: dict[str, TileType] = {}
    seed_cells: list[tuple[int, int, str, int]] = []
    temperature = 2

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        kind, args = words[0], words[1:]
        if kind == "alphabet":
            alphabet.update(args)
        elif kind == "glue":
            if len(args) != 2:
                raise TilesetError(f"line {line_no}: glue takes two labels")
            pairs.append((args[0], args[1]))
        elif kind == "temperature":
            if len(args) != 1 or args[0] != "2":
                raise TilesetError(f"line {line_no}: only temperature 2 is supported")
            temperature = 2
        elif kind == "tile":
            if not args:
                raise TilesetError(f"line {line_no}: tile needs a name")
            name = args[0]
            if name in tiles:
                raise TilesetError(f"line {line_no}: duplicate tile name {name!r}")
            fields = {"color": "gray"}
            for item in args[1:]:
                if "=" not in item:
                    raise TilesetError(f"line {line_no}: bad tile field {item!r}")
                key, _, value = item.partition("=")
                if key in _SIDE_KEYS:
                    fields[_SIDE_KEYS[key]] = _parse_glue(value, line_no)
                elif key == "color":
                    fields["color"] = value
                else:
                    raise TilesetError(f"line {line_no}: unknown tile field {key!r}")
            tiles[name] = TileType(
                name,
                north=fields.get("north", NULL_GLUE),
                south=fields.get("south", NULL_GLUE),
                east=fields.get("east", NULL_GLUE),
                west=fields.get("west", NULL_GLUE),
                color=fields["color"],
            )
        elif kind == "seed":
            if len(args) != 3:
                raise TilesetError(f"line {line_no}: seed takes x y name")
            try:
                x, y = int(args[0]), int(args[1])
            except ValueError:
                raise TilesetError(f"line {line_no}: bad seed coordinates") from None
            seed_cells.append((x, y, args[2], line_no))
        else:
            raise TilesetError(f"line {line_no}: unknown directive {kind!r}")

    placements = {}
    for x, y, name, line_no in seed_cells:
        if name not in tiles:
            raise TilesetError(f"line {line_no}: seed tile {name!r} not declared")
        placements[(x, y)] = tiles[name]
    tas = TileAssemblySystem(
        tiles=tuple(tiles.values()),
        seed=Assembly(placements),
        alphabet=frozenset(alphabet),
        relation=BindingRelation(pairs),
        temperature=temperature,
    )
    tas.validate()
    return tas


def write_tileset(tas: TileAssemblySystem) -> str:
    """Serialize a tile system in the file grammar; round-trips through parse."""
    lines = []
    labels = sorted(tas.alphabet)
    lines.append("alphabet " + " ".join(labels))
    lines.append("temperature 2")
    seen = set()
    for a, b in sorted(tas.relation.pairs):
        if (b, a) in seen:
            continue
        seen.add((a, b))
        lines.append(f"glue {a} {b}")
    for t in tas.tiles:
        parts = [f"tile {t.name}"]
        for key, side in (("n", "north"), ("s", "south"), ("e", "east"), ("w", "west")):
            g = getattr(t, side)
            if g.strength > 0:
                parts.append(f"{key}={g.label}:{g.strength}")
        parts.append(f"color={t.color}")
        lines.append(" ".join(parts))
    for coord in sorted(tas.seed.placements, key=lambda c: (c[1], c[0])):
        lines.append(f"seed {coord[0]} {coord[1]} {tas.seed.placements[coord].name}")
    return "\n".join(lines) + "\n"


def render_ascii(assembly: Assembly, k: int) -> str:
    """One character per cell (first letter of the color token), y downward."""
    rows = []
    for y in range(k - 1, -1, -1):
        row = []
        for x in range(k):
            tile = assembly.placements.get((x, y))
            row.append(tile.color[0] if tile else ".")
        rows.append("".join(row))
    return "\n".join(rows) + "\n"


def render_svg(assembly: Assembly, k: int, cell: int = 16) -> str:
    """SVG with one rect per tile, fill = color token."""
    size = k * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for coord in sorted(assembly.placements, key=lambda c: (c[1], c[0])):
        tile = assembly.placements[coord]
        x = coord[0] * cell
        y = (k - 1 - coord[1]) * cell
        parts.append(
            f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
            f'fill="{tile.color}" stroke="black" stroke-width="1"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
