"""Temperature-2 tile assembly: tile systems, growth semantics, and
exhaustive desk-scale oracles (local determinism, terminal enumeration).

Coordinates are (x, y) pairs on the first quadrant; growth is clipped to a
k-by-k surface. Facing glues bond when their label pair is in the binding
relation; a matched pair contributes min of the two declared strengths.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import networkx as nx

N, S, E, W = "N", "S", "E", "W"
SIDES = (N, E, S, W)
DELTA = {N: (0, 1), S: (0, -1), E: (1, 0), W: (-1, 0)}
OPPOSITE = {N: S, S: N, E: W, W: E}

Coord = tuple[int, int]


def neighbor(coord: Coord, side: str) -> Coord:
    dx, dy = DELTA[side]
    return (coord[0] + dx, coord[1] + dy)


class TilesetError(ValueError):
    """Invalid tile system (bad glue, asymmetric relation, unstable seed...)."""


class BudgetExceededError(RuntimeError):
    """Exhaustive search hit its configuration budget; result undecided."""


class Glue(NamedTuple):
    label: str
    strength: int


NULL_GLUE = Glue("", 0)


@dataclass(frozen=True)
class TileType:
    name: str
    north: Glue = NULL_GLUE
    south: Glue = NULL_GLUE
    east: Glue = NULL_GLUE
    west: Glue = NULL_GLUE
    color: str = "gray"

    def glue(self, side: str) -> Glue:
        return {N: self.north, S: self.south, E: self.east, W: self.west}[side]


class BindingRelation:
    """Symmetric relation over glue labels; symmetry closure applied."""

    def __init__(self, pairs: Iterable[tuple[str, str]] = ()):
        closed = set()
        for a, b in pairs:
            closed.add((a, b))
            closed.add((b, a))
        self._pairs = frozenset(closed)

    @property
    def pairs(self) -> frozenset:
        return self._pairs

    def binds(self, a: str, b: str) -> bool:
        return (a, b) in self._pairs

    def __eq__(self, other):
        return isinstance(other, BindingRelation) and self._pairs == other._pairs


def contribution(own: Glue, facing: Glue, relation: BindingRelation) -> int:
    """Bond strength of one facing glue pair: min of strengths if labels bind."""
    if own.strength == 0 or facing.strength == 0:
        return 0
    if not relation.binds(own.label, facing.label):
        return 0
    return min(own.strength, facing.strength)


@dataclass
class Assembly:
    """Partial map from coordinates to tile types."""

    placements: dict[Coord, TileType] = field(default_factory=dict)

    def copy(self) -> "Assembly":
        return Assembly(dict(self.placements))

    def key(self) -> frozenset:
        return frozenset((c, t.name) for c, t in self.placements.items())

    def __contains__(self, coord: Coord) -> bool:
        return coord in self.placements

    def __len__(self) -> int:
        return len(self.placements)

    def __eq__(self, other):
        if not isinstance(other, Assembly):
            return NotImplemented
        return self.key() == other.key()

    def bounding_box(self) -> tuple[int, int, int, int]:
        """(min_x, min_y, max_x, max_y); raises on empty assembly."""
        xs = [c[0] for c in self.placements]
        ys = [c[1] for c in self.placements]
        return min(xs), min(ys), max(xs), max(ys)

    def bond_graph(self, relation: BindingRelation) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.placements)
        for coord, tile in self.placements.items():
            for side in (N, E):
                other = neighbor(coord, side)
                if other not in self.placements:
                    continue
                w = contribution(tile.glue(side), self.placements[other].glue(OPPOSITE[side]), relation)
                if w > 0:
                    g.add_edge(coord, other, weight=w)
        return g

    def is_connected(self, relation: BindingRelation) -> bool:
        if len(self.placements) <= 1:
            return True
        return nx.is_connected(self.bond_graph(relation))

    def is_stable(self, relation: BindingRelation, temperature: int = 2) -> bool:
        """Every cut of the bond graph has total crossing strength >= temperature."""
        if len(self.placements) <= 1:
            return True
        g = self.bond_graph(relation)
        if not nx.is_connected(g):
            return False
        cut, _ = nx.stoer_wagner(g)
        return cut >= temperature

    def color_map(self) -> dict[Coord, str]:
        return {c: t.color for c, t in self.placements.items()}


@dataclass
class TileAssemblySystem:
    tiles: tuple[TileType, ...]
    seed: Assembly
    alphabet: frozenset[str]
    relation: BindingRelation
    temperature: int = 2

    def __post_init__(self):
        self.tiles = tuple(sorted(self.tiles, key=lambda t: t.name))
        self._by_name = {t.name: t for t in self.tiles}

    def tile(self, name: str) -> TileType:
        return self._by_name[name]

    def validate(self) -> None:
        if self.temperature != 2:
            raise TilesetError(f"temperature must be 2, got {self.temperature}")
        names = [t.name for t in self.tiles]
        if len(names) != len(set(names)):
            raise TilesetError("duplicate tile type names")
        for t in self.tiles:
            for side in SIDES:
                g = t.glue(side)
                if g.strength not in (0, 1, 2):
                    raise TilesetError(f"tile {t.name}: glue strength {g.strength} not in 0/1/2")
                if g.strength > 0 and g.label not in self.alphabet:
                    raise TilesetError(f"tile {t.name}: undeclared glue label {g.label!r}")
        for a, b in self.relation.pairs:
            if a not in self.alphabet or b not in self.alphabet:
                raise TilesetError(f"relation pair ({a},{b}) uses undeclared label")
        for coord, tile in self.seed.placements.items():
            if tile.name not in self._by_name:
                raise TilesetError(f"seed uses unknown tile {tile.name}")
            if coord[0] < 0 or coord[1] < 0:
                raise TilesetError(f"seed coordinate {coord} outside first quadrant")
        if not self.seed.placements:
            raise TilesetError("empty seed assembly")
        if not self.seed.is_connected(self.relation):
            raise TilesetError("seed assembly is not connected")
        if not self.seed.is_stable(self.relation, self.temperature):
            raise TilesetError("seed assembly is not stable at temperature 2")


class AttachEvent(NamedTuple):
    coord: Coord
    tile: str
    kind: str  # "attach" | "detach"


@dataclass
class AssemblySequence:
    """Ordered single-tile events; seed placements come first as attaches."""

    events: list[AttachEvent] = field(default_factory=list)

    def result(self, tas: TileAssemblySystem) -> Assembly:
        a = Assembly()
        for ev in self.events:
            if ev.kind == "attach":
                a.placements[ev.coord] = tas.tile(ev.tile)
            elif ev.kind == "detach":
                a.placements.pop(ev.coord, None)
            else:
                raise ValueError(f"unknown event kind {ev.kind}")
        return a


def seed_events(tas: TileAssemblySystem) -> list[AttachEvent]:
    return [
        AttachEvent(coord, tas.seed.placements[coord].name, "attach")
        for coord in sorted(tas.seed.placements, key=lambda c: (c[1], c[0]))
    ]


def binding_strength(assembly: Assembly, tas: TileAssemblySystem, coord: Coord, tile: TileType) -> int:
    """Total bond strength tile would have at an unoccupied coordinate."""
    if coord in assembly:
        raise ValueError(f"coordinate {coord} is occupied")
    total = 0
    for side in SIDES:
        other = assembly.placements.get(neighbor(coord, side))
        if other is not None:
            total += contribution(tile.glue(side), other.glue(OPPOSITE[side]), tas.relation)
    return total


def input_sides(assembly: Assembly, tas: TileAssemblySystem, coord: Coord, tile: TileType) -> frozenset[str]:
    """Sides contributing nonzero bond strength at attachment time."""
    out = set()
    for side in SIDES:
        other = assembly.placements.get(neighbor(coord, side))
        if other is not None and contribution(tile.glue(side), other.glue(OPPOSITE[side]), tas.relation) > 0:
            out.add(side)
    return frozenset(out)


def in_bounds(coord: Coord, k: int) -> bool:
    return 0 <= coord[0] < k and 0 <= coord[1] < k


def frontier(assembly: Assembly, tas: TileAssemblySystem, k: int) -> list[tuple[Coord, TileType]]:
    """All legal attachments within the k-by-k surface, ordered by (y, x, name)."""
    sites = set()
    for coord in assembly.placements:
        for side in SIDES:
            c = neighbor(coord, side)
            if c not in assembly and in_bounds(c, k):
                sites.add(c)
    pairs = []
    for c in sites:
        for t in tas.tiles:
            if binding_strength(assembly, tas, c, t) >= tas.temperature:
                pairs.append((c, t))
    pairs.sort(key=lambda p: (p[0][1], p[0][0], p[1].name))
    return pairs


def run_atam(tas: TileAssemblySystem, k: int, seed_value: int) -> AssemblySequence:
    """Grow by uniformly random frontier picks until no attachment fits.

    Deterministic given seed_value: frontier pairs are ordered by
    (y, x, tile name) before each draw.
    """
    if tas.seed.placements:
        _, _, mx, my = tas.seed.bounding_box()
        if mx >= k or my >= k:
            raise ValueError(f"seed does not fit on a {k}x{k} surface")
    rng = random.Random(seed_value)
    assembly = tas.seed.copy()
    seq = AssemblySequence(seed_events(tas))
    while True:
        pairs = frontier(assembly, tas, k)
        if not pairs:
            return seq
        coord, tile = pairs[rng.randrange(len(pairs))]
        assembly.placements[coord] = tile
        seq.events.append(AttachEvent(coord, tile.name, "attach"))


def is_terminal(assembly: Assembly, tas: TileAssemblySystem, k: int) -> bool:
    return not frontier(assembly, tas, k)


class DagEdge(NamedTuple):
    parent: frozenset  # configuration key
    coord: Coord
    tile: str
    strength: int
    inputs: frozenset  # sides with nonzero contribution at attach time


@dataclass
class ConfigDag:
    """Reachable configurations of a bounded surface, one node per placement set."""

    edges: list[DagEdge]
    sinks: list[Assembly]
    configs: int
    complete: bool
    parents: dict  # config key -> (parent key, DagEdge) for witness paths

    def path_to(self, key: frozenset) -> list[AttachEvent]:
        """Attachment events of one sequence reaching the configuration."""
        out = []
        cur = key
        while cur in self.parents:
            cur, edge = self.parents[cur]
            out.append(AttachEvent(edge.coord, edge.tile, "attach"))
        out.reverse()
        return out


def explore_configs(tas: TileAssemblySystem, k: int, budget: int = 200_000) -> ConfigDag:
    """BFS over all producible configurations on the k-by-k surface."""
    seed = tas.seed.copy()
    start = seed.key()
    seen = {start: seed}
    parents: dict = {}
    edges: list[DagEdge] = []
    sinks: list[Assembly] = []
    queue = deque([start])
    complete = True
    while queue:
        key = queue.popleft()
        assembly = seen[key]
        pairs = frontier(assembly, tas, k)
        if not pairs:
            sinks.append(assembly)
            continue
        for coord, tile in pairs:
            strength = binding_strength(assembly, tas, coord, tile)
            edges.append(DagEdge(key, coord, tile.name, strength,
                                 input_sides(assembly, tas, coord, tile)))
            child = assembly.copy()
            child.placements[coord] = tile
            ckey = child.key()
            if ckey not in seen:
                if len(seen) >= budget:
                    complete = False
                    continue
                seen[ckey] = child
                parents[ckey] = (key, edges[-1])
                queue.append(ckey)
    return ConfigDag(edges, sinks, len(seen), complete, parents)


@dataclass
class LDReport:
    verdict: str  # "locally_deterministic" | "violation" | "undecided"
    condition: Optional[int] = None
    location: Optional[Coord] = None
    tiles: tuple[str, ...] = ()
    prefix: list[AttachEvent] = field(default_factory=list)
    configs: int = 0

    @property
    def certified(self) -> bool:
        return self.verdict == "locally_deterministic"


def check_local_determinism(tas: TileAssemblySystem, k: int, budget: int = 200_000) -> LDReport:
    """Exhaustive determinism check over the bounded configuration space.

    Three conditions, each checkable on the configuration DAG:
      1. every reachable attachment bonds with strength exactly 2;
      2. no reachable configuration admits two distinct tile types at one
         site (so input neighborhoods pin the type uniquely);
      3. every maximal growth ends terminal (true by construction on the
         clipped surface, asserted anyway).
    A search-budget overflow yields "undecided", distinct from a violation.
    """
    dag = explore_configs(tas, k, budget)
    per_site: dict[tuple[frozenset, Coord], set[str]] = {}
    for edge in dag.edges:
        if edge.strength != tas.temperature:
            return LDReport("violation", condition=1, location=edge.coord,
                            tiles=(edge.tile,), prefix=dag.path_to(edge.parent),
                            configs=dag.configs)
        per_site.setdefault((edge.parent, edge.coord), set()).add(edge.tile)
    for (parent, coord), tiles in per_site.items():
        if len(tiles) > 1:
            return LDReport("violation", condition=2, location=coord,
                            tiles=tuple(sorted(tiles)), prefix=dag.path_to(parent),
                            configs=dag.configs)
    for sink in dag.sinks:
        if not is_terminal(sink, tas, k):  # pragma: no cover - impossible by construction
            return LDReport("violation", condition=3, configs=dag.configs)
    if not dag.complete:
        return LDReport("undecided", configs=dag.configs)
    return LDReport("locally_deterministic", configs=dag.configs)


def unique_terminal_bruteforce(tas: TileAssemblySystem, k: int, budget: int = 200_000) -> list[Assembly]:
    """All terminal assemblies reachable on the bounded surface."""
    dag = explore_configs(tas, k, budget)
    if not dag.complete:
        raise BudgetExceededError(f"configuration budget {budget} exceeded")
    distinct: dict[frozenset, Assembly] = {}
    for sink in dag.sinks:
        distinct[sink.key()] = sink
    return [distinct[key] for key in sorted(distinct, key=sorted)]


def reachable_variants(tas: TileAssemblySystem, k: int, budget: int = 200_000) -> set[tuple[str, frozenset]]:
    """(tile name, input-side set) pairs occurring in any bounded growth."""
    dag = explore_configs(tas, k, budget)
    if not dag.complete:
        raise BudgetExceededError(f"configuration budget {budget} exceeded")
    return {(e.tile, e.inputs) for e in dag.edges}
