"""Block-scaled tilesets: proofreading and self-healing transforms.

Every (tile type, input-side set) pair that occurs in bounded growth of a
certified-deterministic source system becomes a c-by-c block of fresh tile
types, all colored like the source tile. Block boundaries carry one glue
per edge position: input sides keep the source glue identity (shared by
every variant expecting that glue), output sides carry the source tile's
identity. Output glues pair only with input glues of compatible source
bonds, never with other output glues, so a partly rebuilt block can only be
completed by the variant that fits all of its surviving neighbors — that
asymmetry is what makes hole repair deterministic. Interior glues are
unique per (variant, cell, axis), so foreign blocks cannot continue a
partial one.

Interior wiring by input profile: a single strength-2 input side wires the
block as parallel strength-2 chains along that axis; two adjacent
strength-1 input sides wire a strength-1 grid growing away from the input
corner; seed blocks (no input sides) get a rigid strength-2 grid. Opposite
input pairs (a tile bridging a gap) are rejected: a mirrored-strength block
cannot start growing from either strength-1 wall alone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .ktam import KineticParams, KtamResult, run_ktam
from .tam import (
    Assembly,
    BindingRelation,
    Coord,
    Glue,
    LDReport,
    N, E, S, W, SIDES,
    TileAssemblySystem,
    TileType,
    check_local_determinism,
    contribution,
    frontier,
    neighbor,
    reachable_variants,
    run_atam,
)


class TransformError(ValueError):
    """Transform input rejected (not certified, bad scale, or unsupported variant)."""


@dataclass
class ScaledShape:
    scale: int
    cells: dict[Coord, str] = field(default_factory=dict)


def scale_result(a: Assembly, c: int) -> ScaledShape:
    """Blow each placement up to a c-by-c block of its color."""
    if c < 1:
        raise ValueError("scale must be >= 1")
    cells = {}
    for (x, y), tile in a.placements.items():
        for u in range(c):
            for v in range(c):
                cells[(c * x + u, c * y + v)] = tile.color
    return ScaledShape(c, cells)


Variant = tuple[str, frozenset]


@dataclass
class ScaledTileSet:
    tas: TileAssemblySystem  # the block-scaled system, ready to run
    source: TileAssemblySystem
    scale: int
    variants: list[Variant]
    tile_count: int
    bound: int


def _variant_token(name: str, sides: frozenset) -> str:
    return f"{name}.{''.join(sorted(sides)) or 'o'}"


_EDGE_POS = {
    W: lambda c, pos: (0, pos),
    E: lambda c, pos: (c - 1, pos),
    S: lambda c, pos: (pos, 0),
    N: lambda c, pos: (pos, c - 1),
}


def _interior_plan(sides: frozenset, c: int) -> tuple[bool, bool, int]:
    """(horizontal wiring, vertical wiring, strength) for a variant's interior."""
    if not sides:
        return True, True, 2
    if len(sides) == 1:
        side = next(iter(sides))
        return (side in (E, W), side in (N, S), 2)
    if sides in (frozenset((W, E)), frozenset((N, S))):
        raise TransformError(
            f"opposite input sides {sorted(sides)} need cooperative gap filling; unsupported")
    return True, True, 1


def _seed_tree_variants(tas: TileAssemblySystem) -> dict[Coord, frozenset]:
    """Spanning orientation of the seed: each cell's side toward its parent."""
    cells = sorted(tas.seed.placements, key=lambda c: (c[1], c[0]))
    root = cells[0]
    parent_side: dict[Coord, frozenset] = {root: frozenset()}
    queue = [root]
    while queue:
        cur = queue.pop(0)
        for side in SIDES:
            nxt = neighbor(cur, side)
            if nxt in tas.seed.placements and nxt not in parent_side:
                w = contribution(tas.seed.placements[cur].glue(side),
                                 tas.seed.placements[nxt].glue({N: S, S: N, E: W, W: E}[side]),
                                 tas.relation)
                if w > 0:
                    parent_side[nxt] = frozenset(({N: S, S: N, E: W, W: E}[side],))
                    queue.append(nxt)
    return parent_side


def transform_proofreading(
    tas: TileAssemblySystem,
    c: int,
    k: int = 6,
    budget: int = 200_000,
    ld_report: LDReport | None = None,
) -> ScaledTileSet:
    """Emit the c-scaled block tileset of a certified-deterministic system."""
    if c < 2:
        raise TransformError("scale must be >= 2")
    report = ld_report or check_local_determinism(tas, k, budget)
    if not report.certified:
        raise TransformError(
            f"input is not certified locally deterministic: condition {report.condition} "
            f"at {report.location} (tiles {report.tiles})")

    grow_variants = {(name, sides) for name, sides in reachable_variants(tas, k, budget)}
    seed_tree = _seed_tree_variants(tas)
    all_variants: set[Variant] = set(grow_variants)
    for coord, sides in seed_tree.items():
        all_variants.add((tas.seed.placements[coord].name, sides))
    variants = sorted(all_variants, key=lambda v: (v[0], sorted(v[1])))

    tiles: list[TileType] = []
    pairs: list[tuple[str, str]] = []
    in_specs: set[tuple[str, str, int, int]] = set()  # (side, glue label, strength, pos)

    def in_label(side: str, g: Glue, pos: int) -> str:
        return f"bin.{side}.{g.label}.{g.strength}.{pos}"

    def out_label(name: str, side: str, pos: int) -> str:
        return f"bout.{name}.{side}.{pos}"

    for name, sides in variants:
        src = tas.tile(name)
        vtok = _variant_token(name, sides)
        seed_only = (name, sides) not in grow_variants
        if len(sides) == 1 and not seed_only:
            d = next(iter(sides))
            if src.glue(d).strength != 2:
                raise TransformError(f"single input side {d} of {name} is not strength 2")
        if len(sides) == 2 and not seed_only:
            strengths = sorted(src.glue(d).strength for d in sides)
            if strengths != [1, 1]:
                raise TransformError(f"paired input sides of {name} are not strength 1+1")
        if seed_only:
            horiz, vert, istrength = True, True, 2
        else:
            horiz, vert, istrength = _interior_plan(sides, c)
        cell_glues: dict[Coord, dict[str, Glue]] = {
            (u, v): {} for u in range(c) for v in range(c)
        }
        if horiz:
            for u in range(c - 1):
                for v in range(c):
                    lbl = f"i.{vtok}.{u}.{v}.h"
                    cell_glues[(u, v)][E] = Glue(lbl, istrength)
                    cell_glues[(u + 1, v)][W] = Glue(lbl, istrength)
                    pairs.append((lbl, lbl))
        if vert:
            for u in range(c):
                for v in range(c - 1):
                    lbl = f"i.{vtok}.{u}.{v}.v"
                    cell_glues[(u, v)][N] = Glue(lbl, istrength)
                    cell_glues[(u, v + 1)][S] = Glue(lbl, istrength)
                    pairs.append((lbl, lbl))
        for side in SIDES:
            g = src.glue(side)
            if g.strength == 0:
                continue
            for pos in range(c):
                cell = _EDGE_POS[side](c, pos)
                if side in sides:
                    cell_glues[cell][side] = Glue(in_label(side, g, pos), g.strength)
                    in_specs.add((side, g.label, g.strength, pos))
                else:
                    cell_glues[cell][side] = Glue(out_label(name, side, pos), g.strength)
        for (u, v), glues in sorted(cell_glues.items()):
            tiles.append(
                TileType(
                    f"{vtok}.{u}.{v}",
                    north=glues.get(N, Glue("", 0)),
                    south=glues.get(S, Glue("", 0)),
                    east=glues.get(E, Glue("", 0)),
                    west=glues.get(W, Glue("", 0)),
                    color=src.color,
                )
            )

    # output glues mate exactly the input glues of source-compatible bonds
    for name, _sides in variants:
        src = tas.tile(name)
        for side in SIDES:
            g = src.glue(side)
            if g.strength == 0:
                continue
            facing = {N: S, S: N, E: W, W: E}[side]
            for (in_side, in_lbl, in_str, pos) in sorted(in_specs):
                if in_side != facing:
                    continue
                if tas.relation.binds(g.label, in_lbl):
                    pairs.append((out_label(name, side, pos), in_label(in_side, Glue(in_lbl, in_str), pos)))

    by_name = {t.name: t for t in tiles}
    placements: dict[Coord, TileType] = {}
    for coord, sides in seed_tree.items():
        src_name = tas.seed.placements[coord].name
        vtok = _variant_token(src_name, sides)
        for u in range(c):
            for v in range(c):
                placements[(c * coord[0] + u, c * coord[1] + v)] = by_name[f"{vtok}.{u}.{v}"]

    labels = {g.label for t in tiles for g in (t.north, t.south, t.east, t.west) if g.strength > 0}
    scaled = TileAssemblySystem(
        tiles=tuple(tiles),
        seed=Assembly(placements),
        alphabet=frozenset(labels),
        relation=BindingRelation(pairs),
    )
    scaled.validate()
    bound = 16 * c * c * len(tas.tiles) ** 2
    if len(tiles) > bound:
        raise TransformError(f"tile count {len(tiles)} exceeds the bound {bound}")
    return ScaledTileSet(scaled, tas, c, variants, len(tiles), bound)


def scaled_terminal(ts: ScaledTileSet, k: int, seed_value: int = 0) -> Assembly:
    """Error-free terminal assembly of the scaled system on a (c*k) surface."""
    return run_atam(ts.tas, ts.scale * k, seed_value).result(ts.tas)


class HoleError(ValueError):
    """Rejected hole region (not interior, touches seed, or disconnects)."""


def inject_hole(a: Assembly, region: tuple[int, int, int, int],
                seed_coords: set[Coord], relation: BindingRelation) -> Assembly:
    """Remove a rectangle (x, y, w, h) of placements from inside the assembly."""
    x0, y0, w, h = region
    cells = {(x, y) for x in range(x0, x0 + w) for y in range(y0, y0 + h)}
    if not cells:
        return a.copy()
    for cell in cells:
        if cell not in a.placements:
            raise HoleError(f"hole cell {cell} is not inside the assembly footprint")
        if cell in seed_coords:
            raise HoleError(f"hole cell {cell} touches the seed")
    damaged = a.copy()
    for cell in cells:
        del damaged.placements[cell]
    if not damaged.placements or not damaged.is_connected(relation):
        raise HoleError("removal disconnects the assembly")
    return damaged


@dataclass
class HealResult:
    final: Assembly
    rounds: int
    converged: bool


_HEAL_PARAMS = KineticParams(k_f=1.0, g_mc=0.01, g_se=40.0, pi_e=0.0)


def heal(a: Assembly, ts: ScaledTileSet, seed_value: int, max_rounds: int,
         region: set[Coord] | None = None) -> HealResult:
    """Regrow a damaged scaled assembly with error-free kinetics in the hole."""
    k = 0
    if a.placements:
        _, _, mx, my = a.bounding_box()
        k = max(mx, my) + 1
    run_tas = TileAssemblySystem(
        tiles=ts.tas.tiles,
        seed=a.copy(),
        alphabet=ts.tas.alphabet,
        relation=ts.tas.relation,
    )
    result: KtamResult = run_ktam(run_tas, _HEAL_PARAMS, k, seed_value, max_rounds, region=region)
    converged = not [c for c, _ in frontier(result.final, run_tas, k)
                     if region is None or c in region]
    return HealResult(result.final, result.rounds, converged)


@dataclass
class ErrorRateStats:
    base_rate: float
    scaled_rate: float
    trials: int
    seeds: list[int]
    per_trial: list[tuple[float, float]]

    def to_json(self) -> dict:
        return {
            "base_rate": self.base_rate,
            "scaled_rate": self.scaled_rate,
            "trials": self.trials,
            "seeds": self.seeds,
            "per_trial": self.per_trial,
        }


def _mismatch_rate(final: Assembly, ref: dict[Coord, str]) -> float:
    bad = sum(1 for coord, color in ref.items()
              if final.placements.get(coord) is None or final.placements[coord].color != color)
    return bad / len(ref)


def _block_mismatch_rate(final: Assembly, ref: dict[Coord, str], c: int) -> float:
    """Majority block color against the source reference; ties count as wrong."""
    bad = 0
    for (x, y), color in ref.items():
        counts: dict[str, int] = {}
        for u in range(c):
            for v in range(c):
                t = final.placements.get((c * x + u, c * y + v))
                if t is not None:
                    counts[t.color] = counts.get(t.color, 0) + 1
        if not counts:
            bad += 1
            continue
        best = max(counts.values())
        winners = [col for col, n in counts.items() if n == best]
        if len(winners) != 1 or winners[0] != color or best * 2 <= c * c:
            bad += 1
    return bad / len(ref)


def measure_error_rate(
    tas: TileAssemblySystem,
    ts: ScaledTileSet,
    p: KineticParams,
    trials: int,
    seed_value: int,
    k: int,
    max_rounds: int,
) -> ErrorRateStats:
    """Kinetic mismatch rates of the source system and its scaled transform.

    Both systems run the same per-trial seeds against their error-free
    references (cell colors for the source, block-majority colors for the
    scaled system). The scaled run gets `scale` times the rounds, matching
    its longer growth distance.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ref = run_atam(tas, k, 0).result(tas).color_map()
    rng = random.Random(seed_value)
    seeds = [rng.randrange(2**31) for _ in range(trials)]
    per_trial = []
    for s in seeds:
        base = run_ktam(tas, p, k, s, max_rounds)
        scaled = run_ktam(ts.tas, p, ts.scale * k, s, ts.scale * max_rounds)
        per_trial.append((
            _mismatch_rate(base.final, ref),
            _block_mismatch_rate(scaled.final, ref, ts.scale),
        ))
    base_rate = sum(t[0] for t in per_trial) / trials
    scaled_rate = sum(t[1] for t in per_trial) / trials
    return ErrorRateStats(base_rate, scaled_rate, trials, seeds, per_trial)
