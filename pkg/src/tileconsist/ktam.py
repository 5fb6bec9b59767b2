"""Kinetic growth: stochastic attach/detach rounds with error probability.

Rates follow the usual two-parameter form: a flat forward rate
f = k_f * exp(-G_mc) for any attachment, and a strength-dependent reverse
rate r_b = k_f * exp(-b * G_se) for a tile held by total bond strength b.
Rates convert to per-round probabilities via p = 1 - exp(-rate / k_f), so
one round spans 1/k_f time units. The error probability pi_e is a free
parameter: with probability pi_e a site accepts a tile whose real bond
strength is below the temperature.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import NamedTuple

from .tam import (
    Assembly,
    Coord,
    SIDES,
    TileAssemblySystem,
    binding_strength,
    frontier,
    in_bounds,
    neighbor,
)


@dataclass(frozen=True)
class KineticParams:
    k_f: float = 1.0
    g_mc: float = 2.0
    g_se: float = 2.0
    pi_e: float = 0.0

    def __post_init__(self):
        if self.k_f <= 0:
            raise ValueError("k_f must be positive")
        if self.g_mc <= 0 or self.g_se <= 0:
            raise ValueError("G_mc and G_se must be positive")
        if not 0.0 <= self.pi_e < 1.0:
            raise ValueError("pi_e must lie in [0, 1)")


def forward_rate(p: KineticParams) -> float:
    return p.k_f * math.exp(-p.g_mc)


def reverse_rate(p: KineticParams, b: int) -> float:
    if b < 0:
        raise ValueError("bond strength must be nonnegative")
    return p.k_f * math.exp(-b * p.g_se)


def attach_probability(p: KineticParams) -> float:
    """Per-round attachment probability; one round lasts 1/k_f."""
    return 1.0 - math.exp(-forward_rate(p) / p.k_f)


def detach_probability(p: KineticParams, b: int) -> float:
    return 1.0 - math.exp(-reverse_rate(p, b) / p.k_f)


class KineticEvent(NamedTuple):
    kind: str  # "attach" | "erroneous-attach" | "detach"
    coord: Coord
    tile: str
    round: int


@dataclass
class KtamResult:
    events: list[KineticEvent]
    final: Assembly
    rounds: int
    truncated: bool
    suppressed_detaches: list[tuple[int, Coord]] = field(default_factory=list)


def _perimeter_sites(assembly: Assembly, k: int) -> list[Coord]:
    """Empty in-bounds cells adjacent to the assembly, in (y, x) order."""
    sites = set()
    for coord in assembly.placements:
        for side in SIDES:
            c = neighbor(coord, side)
            if c not in assembly and in_bounds(c, k):
                sites.add(c)
    return sorted(sites, key=lambda c: (c[1], c[0]))


def _perimeter_tiles(assembly: Assembly) -> list[Coord]:
    """Occupied cells with at least one empty 4-neighbor, in (y, x) order."""
    out = []
    for coord in assembly.placements:
        if any(neighbor(coord, side) not in assembly for side in SIDES):
            out.append(coord)
    return sorted(out, key=lambda c: (c[1], c[0]))


def _detach_keeps_assembly(assembly: Assembly, coord: Coord, tas: TileAssemblySystem) -> bool:
    remainder = assembly.copy()
    del remainder.placements[coord]
    if not remainder.placements:
        return False
    if not all(c in remainder.placements for c in tas.seed.placements):
        return True  # seed cells are filtered before this check
    return remainder.is_connected(tas.relation)


def run_ktam(
    tas: TileAssemblySystem,
    p: KineticParams,
    k: int,
    seed_value: int,
    max_rounds: int,
    region: set[Coord] | None = None,
) -> KtamResult:
    """Round-based kinetic growth, deterministic per seed_value.

    Each round, from the round-start state: every empty perimeter site draws
    once (erroneous attach with probability pi_e, else correct attach with
    the forward per-round probability), then every perimeter tile draws a
    detach with the reverse per-round probability for its current bond
    strength. Draws and applications run in (y, x) order; an event is
    skipped if an earlier one this round invalidated it. Detachments that
    would disconnect the assembly (or remove seed tiles) do not fire and are
    logged. If `region` is given, attachments are restricted to it.
    """
    rng = random.Random(seed_value)
    assembly = tas.seed.copy()
    events: list[KineticEvent] = []
    suppressed: list[tuple[int, Coord]] = []
    p_attach = attach_probability(p)
    rounds_run = 0
    for rnd in range(max_rounds):
        rounds_run = rnd + 1
        snapshot = assembly.copy()
        sites = _perimeter_sites(snapshot, k)
        if region is not None:
            sites = [c for c in sites if c in region]
        for coord in sites:
            if coord in assembly:
                continue
            u = rng.random()
            if u < p.pi_e:
                bad = [t for t in tas.tiles
                       if binding_strength(assembly, tas, coord, t) < tas.temperature]
                if bad:
                    tile = bad[rng.randrange(len(bad))]
                    assembly.placements[coord] = tile
                    events.append(KineticEvent("erroneous-attach", coord, tile.name, rnd))
            elif u < p.pi_e + (1.0 - p.pi_e) * p_attach:
                good = [t for t in tas.tiles
                        if binding_strength(assembly, tas, coord, t) >= tas.temperature]
                if good:
                    tile = good[rng.randrange(len(good))]
                    assembly.placements[coord] = tile
                    events.append(KineticEvent("attach", coord, tile.name, rnd))
        for coord in _perimeter_tiles(snapshot):
            if coord not in assembly or coord in tas.seed.placements:
                continue
            if region is not None and coord not in region:
                continue
            tile = assembly.placements[coord]
            probe = assembly.copy()
            del probe.placements[coord]
            b = binding_strength(probe, tas, coord, tile)
            if rng.random() < detach_probability(p, b):
                if _detach_keeps_assembly(assembly, coord, tas):
                    del assembly.placements[coord]
                    events.append(KineticEvent("detach", coord, tile.name, rnd))
                else:
                    suppressed.append((rnd, coord))
        if p.pi_e == 0.0 and not frontier(assembly, tas, k):
            quiet = all(
                detach_probability(p, _bond(assembly, tas, c)) == 0.0
                for c in _perimeter_tiles(assembly)
                if c not in tas.seed.placements
            )
            if quiet:
                break
    still_growing = bool(frontier(assembly, tas, k)) or p.pi_e > 0
    return KtamResult(events, assembly, rounds_run, truncated=rounds_run == max_rounds and still_growing,
                      suppressed_detaches=suppressed)


def _bond(assembly: Assembly, tas: TileAssemblySystem, coord: Coord) -> int:
    tile = assembly.placements[coord]
    probe = assembly.copy()
    del probe.placements[coord]
    return binding_strength(probe, tas, coord, tile)
