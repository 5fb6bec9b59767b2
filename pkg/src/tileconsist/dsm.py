"""Grid shared-memory machine that mirrors bounded tile growth.

Protocol summary (temperature 2, k-by-k grid of processors):

* Round 0 writes each seed processor's output register `rho`.
* At each later round, every processor that decided in the previous round
  sends its bondable glues to undecided neighbors. A send is one
  transaction per neighbor: a strength-2 glue goes into both message
  registers r1 and r2 and overwrites the neighbor's `index` with "2"; a
  strength-1 glue first reads `index` and is routed by its value (1 -> r1,
  2 -> r2, "both" -> both registers), then steps `index` forward
  (1 -> 2, 2 -> "both", "both" rewritten). Transactions are serialized;
  `index` reads return the most recent value. Registers of off-grid
  neighbors accept writes but are never read.
* Message registers keep every value ever written. A read of r1/r2 returns
  one of the written values; which one is a nondeterministic choice.
* One undecided processor whose sampled pair of messages justifies a tile
  at the binding threshold writes psi(tile) to its `rho` per round; every
  other undecided processor that has received messages also reads its two
  message registers that round (records of attempts that did not fire).
  All probe reads sample uniformly over written values.

The kinetic variant differs as described in `simulate_ktam_dsm`: every
decided processor re-sends each round, all growth sites act when they can,
`rho` is rewritable, and message-register reads are probabilistic with an
error channel and an EMPTY-returning dissociation mode.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .history import (
    EMPTY,
    ExecutionHistory,
    GlueMsg,
    IndexVal,
    Operation,
    RegisterId,
    TileVal,
    make_psi,
)
from .ktam import KineticParams, detach_probability
from .tam import (
    Assembly,
    AssemblySequence,
    AttachEvent,
    BudgetExceededError,
    Coord,
    Glue,
    N, E, S, W, SIDES, OPPOSITE,
    TileAssemblySystem,
    TileType,
    binding_strength,
    contribution,
    frontier,
    in_bounds,
    neighbor,
)


class _Machine:
    """Operation recorder with per-register write logs."""

    def __init__(self, model: str, k: int, psi: dict[str, str]):
        self.model = model
        self.k = k
        self.psi = psi
        self.ops: list[Operation] = []
        self.registers: dict[RegisterId, list[Operation]] = {}
        self._next = 0

    def clone(self) -> "_Machine":
        m = _Machine(self.model, self.k, self.psi)
        m.ops = list(self.ops)
        m.registers = {reg: list(ws) for reg, ws in self.registers.items()}
        m._next = self._next
        return m

    def write(self, proc: Coord, reg: RegisterId, value, stage: int) -> Operation:
        op = Operation(self._next, proc, "write", reg, value, stage)
        self._next += 1
        self.ops.append(op)
        self.registers.setdefault(reg, []).append(op)
        return op

    def record_read(self, proc: Coord, reg: RegisterId, value, stage: int,
                    src: Optional[int], err: bool = False) -> Operation:
        op = Operation(self._next, proc, "read", reg, value, stage, src=src, err=err)
        self._next += 1
        self.ops.append(op)
        return op

    def read_latest(self, proc: Coord, reg: RegisterId, stage: int):
        ws = self.registers.get(reg, [])
        if ws:
            self.record_read(proc, reg, ws[-1].value, stage, src=ws[-1].op_id)
            return ws[-1].value
        from .history import initial_value

        v = initial_value(reg)
        self.record_read(proc, reg, v, stage, src=None)
        return v

    def writes(self, reg: RegisterId) -> list[Operation]:
        return self.registers.get(reg, [])

    def history(self) -> ExecutionHistory:
        return ExecutionHistory(self.model, self.k, dict(self.psi), list(self.ops))


def bind_types(tas: TileAssemblySystem, msgs: list) -> list[TileType]:
    """Tile types reaching the binding threshold from the given messages.

    Messages are per-direction glue claims; if one direction carries several
    claims the strongest match counts (a direction has one physical
    neighbor, so extra claims are alternative readings, not extra bonds).
    """
    per_dir: dict[str, list[GlueMsg]] = {}
    for m in msgs:
        if isinstance(m, GlueMsg):
            per_dir.setdefault(m.direction, []).append(m)
    out = []
    for t in tas.tiles:
        total = 0
        for d, claims in per_dir.items():
            total += max(
                contribution(t.glue(d), Glue(m.glue, m.strength), tas.relation)
                for m in claims
            )
        if total >= tas.temperature:
            out.append(t)
    return out


def _send(machine: _Machine, tas: TileAssemblySystem, sender: Coord, tile: TileType,
          decided, stage: int) -> None:
    """One processor communicates its glues to undecided neighbors."""
    for side in SIDES:
        glue = tile.glue(side)
        if glue.strength == 0:
            continue
        target = neighbor(sender, side)
        if target in decided:
            continue  # the output register there is already settled
        msg = GlueMsg(OPPOSITE[side], glue.label, glue.strength)
        r1 = RegisterId(target, "r1")
        r2 = RegisterId(target, "r2")
        idx = RegisterId(target, "index")
        if not in_bounds(target, machine.k):
            # off-grid registers ack writes but are never read, so routing
            # proceeds as if the index register still held its initial value
            machine.write(sender, r1, msg, stage)
            if glue.strength == 2:
                machine.write(sender, r2, msg, stage)
            continue
        if glue.strength == 2:
            machine.write(sender, r1, msg, stage)
            machine.write(sender, r2, msg, stage)
            machine.write(sender, idx, IndexVal("2"), stage)
        else:
            v = machine.read_latest(sender, idx, stage)
            assert isinstance(v, IndexVal)
            if v.value == "1":
                machine.write(sender, r1, msg, stage)
                machine.write(sender, idx, IndexVal("2"), stage)
            elif v.value == "2":
                machine.write(sender, r2, msg, stage)
                machine.write(sender, idx, IndexVal("both"), stage)
            else:
                machine.write(sender, r1, msg, stage)
                machine.write(sender, r2, msg, stage)
                machine.write(sender, idx, IndexVal("both"), stage)


def _legal_triples(machine: _Machine, tas: TileAssemblySystem, site: Coord):
    """(r1 write, r2 write, tile) choices that justify a decision at site."""
    r1w = machine.writes(RegisterId(site, "r1")) or [None]
    r2w = machine.writes(RegisterId(site, "r2")) or [None]
    triples = []
    for w1 in r1w:
        for w2 in r2w:
            msgs = [w.value for w in (w1, w2) if w is not None]
            for t in bind_types(tas, msgs):
                triples.append((w1, w2, t))
    return triples


def _message_sites(machine: _Machine, decided, k: int) -> list[Coord]:
    """Undecided in-bounds processors holding at least one message."""
    sites = set()
    for reg, ws in machine.registers.items():
        if reg.kind in ("r1", "r2") and ws and reg.owner not in decided and in_bounds(reg.owner, k):
            sites.add(reg.owner)
    return sorted(sites, key=lambda c: (c[1], c[0]))


def _seed_stage(machine: _Machine, tas: TileAssemblySystem) -> list[Coord]:
    coords = sorted(tas.seed.placements, key=lambda c: (c[1], c[0]))
    for coord in coords:
        name = tas.seed.placements[coord].name
        machine.write(coord, RegisterId(coord, "rho"), TileVal(machine.psi[name]), 0)
    return coords


def simulate_atam_dsm(tas: TileAssemblySystem, k: int, seed_value: int) -> ExecutionHistory:
    """One recorded execution of the error-free growth protocol.

    Deterministic per seed_value. Draw order per round: sender shuffle,
    decider site, its r1 message, its r2 message, its tile, then the probe
    samples of the remaining message-holding processors in (y, x) order.
    """
    _, _, mx, my = tas.seed.bounding_box()
    if mx >= k or my >= k:
        raise ValueError(f"seed does not fit on a {k}x{k} surface")
    rng = random.Random(seed_value)
    machine = _Machine("atam", k, make_psi(t.name for t in tas.tiles))
    assembly = tas.seed.copy()
    senders = _seed_stage(machine, tas)
    stage = 0
    while True:
        pairs = frontier(assembly, tas, k)
        if not pairs:
            break
        stage += 1
        order = list(senders)
        rng.shuffle(order)
        for sc in order:
            _send(machine, tas, sc, assembly.placements[sc], assembly.placements, stage)
        sites = sorted({c for c, _ in pairs}, key=lambda c: (c[1], c[0]))
        decider = sites[rng.randrange(len(sites))]
        triples = _legal_triples(machine, tas, decider)
        if not triples:  # pragma: no cover - routing guarantees a legal pair
            raise RuntimeError(f"no legal message pair at frontier site {decider}")
        w1_choices = sorted({t[0].op_id if t[0] else -1 for t in triples})
        w1_id = w1_choices[rng.randrange(len(w1_choices))]
        rest = [t for t in triples if (t[0].op_id if t[0] else -1) == w1_id]
        w2_choices = sorted({t[1].op_id if t[1] else -1 for t in rest})
        w2_id = w2_choices[rng.randrange(len(w2_choices))]
        rest = [t for t in rest if (t[1].op_id if t[1] else -1) == w2_id]
        tiles = sorted({t[2].name for t in rest})
        tile = tas.tile(tiles[rng.randrange(len(tiles))])
        w1, w2, _ = rest[0]
        for site in _message_sites(machine, assembly.placements, k):
            if site == decider:
                machine.record_read(site, RegisterId(site, "r1"),
                                    w1.value if w1 else EMPTY, stage,
                                    src=w1.op_id if w1 else None)
                machine.record_read(site, RegisterId(site, "r2"),
                                    w2.value if w2 else EMPTY, stage,
                                    src=w2.op_id if w2 else None)
                machine.write(site, RegisterId(site, "rho"), TileVal(machine.psi[tile.name]), stage)
            else:
                for kind in ("r1", "r2"):
                    ws = machine.writes(RegisterId(site, kind))
                    if ws:
                        w = ws[rng.randrange(len(ws))]
                        machine.record_read(site, RegisterId(site, kind), w.value, stage, src=w.op_id)
                    else:
                        machine.record_read(site, RegisterId(site, kind), EMPTY, stage, src=None)
        assembly.placements[decider] = tile
        senders = [decider]
    return machine.history()


def enumerate_atam_histories(
    tas: TileAssemblySystem, k: int, max_histories: int = 100_000
) -> tuple[list[ExecutionHistory], bool]:
    """All protocol executions over the nondeterministic branch points.

    Branches per round: decider site, its r1/r2 message pair, its tile.
    Probe reads of non-deciding processors are omitted here: reads only add
    causality edges, so leaving them out can only make two writes *less*
    ordered — the conservative direction for concurrent-write detection.
    Send transactions run in a fixed (y, x) order; reordering them permutes
    isomorphic chains without changing which write pairs are ordered.

    Returns (histories, complete); complete is False once the cap is hit.
    """
    base = _Machine("atam", k, make_psi(t.name for t in tas.tiles))
    assembly0 = tas.seed.copy()
    senders0 = _seed_stage(base, tas)
    results: list[ExecutionHistory] = []
    complete = True

    def recurse(machine: _Machine, assembly: Assembly, senders: list[Coord], stage: int):
        nonlocal complete
        if not complete:
            return
        pairs = frontier(assembly, tas, k)
        if not pairs:
            if len(results) >= max_histories:
                complete = False
                return
            results.append(machine.history())
            return
        sent = machine.clone()
        for sc in sorted(senders, key=lambda c: (c[1], c[0])):
            _send(sent, tas, sc, assembly.placements[sc], assembly.placements, stage + 1)
        for decider in sorted({c for c, _ in pairs}, key=lambda c: (c[1], c[0])):
            for w1, w2, tile in _legal_triples(sent, tas, decider):
                if not complete:
                    return
                m = sent.clone()
                m.record_read(decider, RegisterId(decider, "r1"),
                              w1.value if w1 else EMPTY, stage + 1,
                              src=w1.op_id if w1 else None)
                m.record_read(decider, RegisterId(decider, "r2"),
                              w2.value if w2 else EMPTY, stage + 1,
                              src=w2.op_id if w2 else None)
                m.write(decider, RegisterId(decider, "rho"), TileVal(m.psi[tile.name]), stage + 1)
                a = assembly.copy()
                a.placements[decider] = tile
                recurse(m, a, [decider], stage + 1)

    recurse(base, assembly0, senders0, 0)
    return results, complete


def simulate_ktam_dsm(
    tas: TileAssemblySystem,
    p: KineticParams,
    k: int,
    seed_value: int,
    max_rounds: int,
) -> ExecutionHistory:
    """Recorded kinetic execution with probabilistic message registers.

    Per round: every decided processor re-sends to undecided neighbors;
    then every in-bounds growth site reads r1 and r2 — each read returns an
    unwritten glue value with probability pi_e, otherwise a uniformly
    sampled written value (EMPTY when nothing was written) — and writes
    psi(tile) to `rho` when its samples reach the binding threshold.
    A register that returned an erroneous value enters a dissociation mode:
    subsequent reads return EMPTY with the per-round reverse probability for
    the held bond, after which the mode clears. A processor that attached
    erroneously re-reads r1 each round while on the assembly perimeter and
    writes EMPTY to `rho` (a detachment) when the mode fires.
    """
    _, _, mx, my = tas.seed.bounding_box()
    if mx >= k or my >= k:
        raise ValueError(f"seed does not fit on a {k}x{k} surface")
    rng = random.Random(seed_value)
    machine = _Machine("ktam", k, make_psi(t.name for t in tas.tiles))
    assembly = tas.seed.copy()
    _seed_stage(machine, tas)
    err_regs: set[RegisterId] = set()
    err_sites: set[Coord] = set()
    glue_pop = sorted({(t.glue(side).label, t.glue(side).strength)
                       for t in tas.tiles for side in SIDES if t.glue(side).strength > 0})

    def site_bond(coord: Coord) -> int:
        tile = assembly.placements[coord]
        probe = assembly.copy()
        del probe.placements[coord]
        return binding_strength(probe, tas, coord, tile)

    def prob_read(site: Coord, reg: RegisterId, stage: int):
        """Sample a message register; returns (value, erroneous?)."""
        if reg in err_regs:
            b = site_bond(site) if site in assembly.placements else 1
            if rng.random() < detach_probability(p, b):
                err_regs.discard(reg)
                machine.record_read(site, reg, EMPTY, stage, src=None)
                return EMPTY, False
        ws = machine.writes(reg)
        if rng.random() < p.pi_e:
            written = {(w.value.direction, w.value.glue, w.value.strength)
                       for w in ws if isinstance(w.value, GlueMsg)}
            pool = [(d, lbl, s) for d in SIDES for (lbl, s) in glue_pop
                    if (d, lbl, s) not in written]
            if pool:
                d, lbl, s = pool[rng.randrange(len(pool))]
                v = GlueMsg(d, lbl, s)
                machine.record_read(site, reg, v, stage, src=None, err=True)
                err_regs.add(reg)
                return v, True
        if ws:
            w = ws[rng.randrange(len(ws))]
            machine.record_read(site, reg, w.value, stage, src=w.op_id)
            return w.value, False
        machine.record_read(site, reg, EMPTY, stage, src=None)
        return EMPTY, False

    for rnd in range(1, max_rounds + 1):
        for sc in sorted(assembly.placements, key=lambda c: (c[1], c[0])):
            _send(machine, tas, sc, assembly.placements[sc], assembly.placements, rnd)
        growth = sorted(
            {neighbor(c, side) for c in assembly.placements for side in SIDES
             if neighbor(c, side) not in assembly.placements
             and in_bounds(neighbor(c, side), k)},
            key=lambda c: (c[1], c[0]))
        for site in growth:
            v1, e1 = prob_read(site, RegisterId(site, "r1"), rnd)
            v2, e2 = prob_read(site, RegisterId(site, "r2"), rnd)
            types = bind_types(tas, [v for v in (v1, v2) if v is not EMPTY])
            if not types:
                continue
            tile = types[rng.randrange(len(types))]
            machine.write(site, RegisterId(site, "rho"), TileVal(machine.psi[tile.name]), rnd)
            assembly.placements[site] = tile
            if e1 or e2 or site_bond(site) < tas.temperature:
                err_sites.add(site)
        for site in sorted(err_sites, key=lambda c: (c[1], c[0])):
            if site not in assembly.placements:
                err_sites.discard(site)
                continue
            if site in tas.seed.placements:
                continue
            if all(neighbor(site, side) in assembly.placements for side in SIDES):
                continue  # detachments happen on the perimeter only
            v, _ = prob_read(site, RegisterId(site, "r1"), rnd)
            if v is EMPTY:
                remainder = assembly.copy()
                del remainder.placements[site]
                if remainder.placements and remainder.is_connected(tas.relation):
                    machine.write(site, RegisterId(site, "rho"), EMPTY, rnd)
                    del assembly.placements[site]
                    err_sites.discard(site)
        if p.pi_e == 0.0 and not err_sites and not frontier(assembly, tas, k):
            break
    return machine.history()


def extract_assembly_sequence(h: ExecutionHistory) -> AssemblySequence:
    """Map the `rho` write order to tile attach/detach events."""
    inv = h.psi_inv()
    seq = AssemblySequence()
    occupied: dict[Coord, str] = {}
    for op in h.rho_writes():
        coord = op.reg.owner
        if isinstance(op.value, TileVal):
            if op.value.token not in inv:
                raise ValueError(f"op {op.op_id}: output token {op.value.token!r} outside the bijection")
            name = inv[op.value.token]
            seq.events.append(AttachEvent(coord, name, "attach"))
            occupied[coord] = name
        elif op.value is EMPTY:
            name = occupied.pop(coord, "?")
            seq.events.append(AttachEvent(coord, name, "detach"))
        else:
            raise ValueError(f"op {op.op_id}: bad output value {op.value!r}")
    return seq


@dataclass
class VerifyReport:
    valid: bool
    counterexample: Optional[int] = None
    reason: str = ""
    flagged: list[int] = field(default_factory=list)  # below-threshold kinetic attaches


_VALUE_KINDS = {
    "r1": (GlueMsg, type(None)),
    "r2": (GlueMsg, type(None)),
    "index": (IndexVal,),
    "rho": (TileVal, type(None)),
}


def verify_simulation(h: ExecutionHistory, tas: TileAssemblySystem) -> VerifyReport:
    """Check that a history is a faithful execution over the tile system.

    Confirms well-formedness (program order, value domains, off-grid
    registers never read, write-once `rho` in the error-free model, round-0
    seed image) and that the extracted event order is a legal growth: every
    error-free attachment meets the binding threshold against the assembly
    built so far. Kinetic attachments below threshold are flagged, not
    failed. The first offending operation id is returned otherwise.
    """
    if set(h.psi) != {t.name for t in tas.tiles}:
        return VerifyReport(False, None, "psi bijection does not cover the tile set")
    if len(set(h.psi.values())) != len(h.psi):
        return VerifyReport(False, None, "psi is not injective")
    last_per_proc: dict[Coord, int] = {}
    for op in h.ops:
        if op.proc in last_per_proc and op.op_id <= last_per_proc[op.proc]:
            return VerifyReport(False, op.op_id, "program order broken")
        last_per_proc[op.proc] = op.op_id
        if not isinstance(op.value, _VALUE_KINDS[op.reg.kind]):
            return VerifyReport(False, op.op_id, f"bad value domain for {op.reg.kind}")
        if op.kind == "read" and not in_bounds(op.reg.owner, h.k):
            return VerifyReport(False, op.op_id, "read of an off-grid register")

    inv = h.psi_inv()
    assembly = Assembly()
    rho_written: set[Coord] = set()
    seed_image: dict[Coord, str] = {}
    flagged: list[int] = []
    for op in h.rho_writes():
        coord = op.reg.owner
        if not in_bounds(coord, h.k):
            return VerifyReport(False, op.op_id, "rho write off grid")
        if op.stage == 0:
            if isinstance(op.value, TileVal) and op.value.token in inv:
                seed_image[coord] = inv[op.value.token]
            else:
                return VerifyReport(False, op.op_id, "bad seed write")
            if coord in rho_written:
                return VerifyReport(False, op.op_id, "seed cell written twice")
            rho_written.add(coord)
            assembly.placements[coord] = tas.tile(seed_image[coord])
            continue
        if h.model == "atam" and coord in rho_written:
            return VerifyReport(False, op.op_id, "rho is write-once in the error-free model")
        if op.value is EMPTY:
            if h.model == "atam":
                return VerifyReport(False, op.op_id, "EMPTY rho write in the error-free model")
            if coord not in assembly.placements:
                return VerifyReport(False, op.op_id, "detachment of an empty cell")
            del assembly.placements[coord]
            rho_written.add(coord)
            continue
        if op.value.token not in inv:
            return VerifyReport(False, op.op_id, "unknown output token")
        tile = tas.tile(inv[op.value.token])
        if coord in assembly.placements:
            return VerifyReport(False, op.op_id, "attachment onto an occupied cell")
        strength = binding_strength(assembly, tas, coord, tile)
        if strength < tas.temperature:
            if h.model == "atam":
                return VerifyReport(False, op.op_id,
                                    f"attachment below the binding threshold (strength {strength})")
            flagged.append(op.op_id)
        assembly.placements[coord] = tile
        rho_written.add(coord)
    expected_seed = {c: t.name for c, t in tas.seed.placements.items()}
    if seed_image != expected_seed:
        return VerifyReport(False, None, "round-0 writes do not match the seed assembly")
    return VerifyReport(True, flagged=flagged)
