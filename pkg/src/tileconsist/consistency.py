"""Causality orders and memory-consistency predicates over histories.

The causality order is the transitive closure of per-processor program
order and reads-from edges. Predicates decided here:

* slow        — every read returns the register's initial value or one
                previously written to that same register;
* gpo (PRAM)  — per reader, an interleaving of its operations with all
                writes exists that respects every writer's issue order and
                returns the latest prior write on each read;
* gwo         — the provable write order (write, read-by-w2's-issuer,
                write chains plus each writer's own order) is acyclic;
* gdo (cache) — per register, a total write order consistent with every
                reader's successive read attributions exists;
* causal      — gpo and gwo combined;
* sequential  — a single interleaving of all operations respects program
                order with latest-value reads (bounded search).

Reads carry exact provenance when produced by the simulators; imported
histories fall back to value matching, and predicates that need exact
attribution degrade to "undecided" when the match is ambiguous.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .dsm import bind_types, enumerate_atam_histories
from .history import EMPTY, ExecutionHistory, GlueMsg, Operation, RegisterId, initial_value
from .tam import (
    OPPOSITE,
    SIDES,
    TileAssemblySystem,
    binding_strength,
    in_bounds,
    neighbor,
)

HOLDS = "holds"
VIOLATED = "violated"
UNDECIDED = "undecided"

DEFAULT_BUDGET = 1_000_000


def search_budget(budget: Optional[int] = None) -> int:
    if budget is not None:
        return budget
    env = os.environ.get("TILECONSIST_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


@dataclass
class Verdict:
    status: str
    witness: list[int] = field(default_factory=list)
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    def to_json(self) -> dict:
        out = {"verdict": self.status, "witness": self.witness}
        if self.note:
            out["note"] = self.note
        return out


class CausalityOrder:
    """DAG over operation ids: program order plus reads-from, closed transitively."""

    def __init__(self, h: ExecutionHistory):
        self.ops = list(h.ops)
        self.index = {op.op_id: i for i, op in enumerate(self.ops)}
        self.edges: list[tuple[int, int]] = []  # positions, not op ids
        self.sources: dict[int, Optional[int]] = {}  # read op_id -> write op_id
        self.flagged: list[int] = []  # reads of never-written values
        self.ambiguous = False
        self.cycle: Optional[list[int]] = None
        self._build(h)
        self._reach: Optional[list[int]] = None

    def _build(self, h: ExecutionHistory) -> None:
        last_of_proc: dict = {}
        for i, op in enumerate(self.ops):
            if op.proc in last_of_proc:
                self.edges.append((last_of_proc[op.proc], i))
            last_of_proc[op.proc] = i
        writes_by_reg: dict[RegisterId, list[Operation]] = {}
        for op in self.ops:
            if op.kind == "write":
                writes_by_reg.setdefault(op.reg, []).append(op)
        for i, op in enumerate(self.ops):
            if op.kind != "read":
                continue
            src = None
            if op.src is not None:
                src = op.src if op.src in self.index else None
                if src is None:
                    self.flagged.append(op.op_id)
            elif op.err or op.value == initial_value(op.reg):
                src = None
                if op.err:
                    self.flagged.append(op.op_id)
            else:
                prior = [w for w in writes_by_reg.get(op.reg, [])
                         if self.index[w.op_id] < i and w.value == op.value]
                if not prior:
                    self.flagged.append(op.op_id)
                else:
                    if len(prior) > 1:
                        self.ambiguous = True
                    src = prior[0].op_id
            self.sources[op.op_id] = src
            if src is not None:
                self.edges.append((self.index[src], i))
        self._detect_cycle()

    def _detect_cycle(self) -> None:
        n = len(self.ops)
        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b in self.edges:
            adj[a].append(b)
        state = [0] * n  # 0 unseen, 1 on stack, 2 done
        stack: list[tuple[int, int]] = []
        path: list[int] = []
        for start in range(n):
            if state[start]:
                continue
            stack = [(start, 0)]
            path = [start]
            state[start] = 1
            while stack:
                node, ei = stack[-1]
                if ei < len(adj[node]):
                    stack[-1] = (node, ei + 1)
                    nxt = adj[node][ei]
                    if state[nxt] == 1:
                        cut = path.index(nxt)
                        self.cycle = [self.ops[i].op_id for i in path[cut:]]
                        return
                    if state[nxt] == 0:
                        state[nxt] = 1
                        stack.append((nxt, 0))
                        path.append(nxt)
                else:
                    state[node] = 2
                    stack.pop()
                    path.pop()

    def _closure(self) -> list[int]:
        if self._reach is None:
            n = len(self.ops)
            adj: list[list[int]] = [[] for _ in range(n)]
            for a, b in self.edges:
                adj[a].append(b)
            reach = [0] * n
            for i in range(n - 1, -1, -1):  # edges always point to later positions when acyclic
                mask = 0
                for j in adj[i]:
                    mask |= (1 << j) | reach[j]
                reach[i] = mask
            self._reach = reach
        return self._reach

    def precedes(self, a_op: int, b_op: int) -> bool:
        if self.cycle is not None:
            raise ValueError("causality order is cyclic")
        reach = self._closure()
        return bool(reach[self.index[a_op]] >> self.index[b_op] & 1)


def build_causality_order(h: ExecutionHistory) -> CausalityOrder:
    return CausalityOrder(h)


def check_slow(h: ExecutionHistory) -> Verdict:
    written: dict[RegisterId, set] = {}
    for op in h.ops:
        if op.kind == "write":
            written.setdefault(op.reg, set()).add(op.value)
        elif op.kind == "read":
            if op.value == initial_value(op.reg):
                continue
            if op.value not in written.get(op.reg, set()):
                return Verdict(VIOLATED, [op.op_id], "read of a never-written value")
    return Verdict(HOLDS)


class _Item:
    __slots__ = ("kind", "reg", "value", "gate")

    def __init__(self, kind, reg, value, gate=None):
        self.kind = kind  # "w" | "r"
        self.reg = reg
        self.value = value
        self.gate = gate  # writes: own op id; reads: ("src", id) | ("init",) | ("value",)


def _read_open(it: _Item, last) -> bool:
    """May this read be scheduled given the last write (id, value) to its register?"""
    if it.gate[0] == "src":
        return last is not None and last[0] == it.gate[1]
    if it.gate[0] == "init":
        return last is None
    if last is None:
        return it.value == initial_value(it.reg)
    return last[1] == it.value


def _feasible(sequences: list[list[_Item]], budget: int) -> Optional[bool]:
    """Does an interleaving exist where every read sees the latest prior write?

    Reads never change state, so every currently-satisfied read is taken
    greedily; branching happens on writes only. Returns None on budget
    exhaustion, else True/False (False is exhaustive).
    """
    regs = sorted({it.reg for seq in sequences for it in seq if it.kind == "r"})
    reg_pos = {r: i for i, r in enumerate(regs)}
    seqs = [seq for seq in sequences if seq]
    visited: set = set()
    states = 0

    def advance(indices: list[int], last: list) -> None:
        moved = True
        while moved:
            moved = False
            for pi, seq in enumerate(seqs):
                i = indices[pi]
                while i < len(seq):
                    it = seq[i]
                    if it.kind == "r":
                        if it.reg in reg_pos and not _read_open(it, last[reg_pos[it.reg]]):
                            break
                        i += 1
                        moved = True
                    else:
                        break
                indices[pi] = i

    def solve(indices: tuple[int, ...], last: tuple) -> Optional[bool]:
        nonlocal states
        states += 1
        if states > budget:
            return None
        work = list(indices)
        lastl = list(last)
        advance(work, lastl)
        if all(work[pi] == len(seq) for pi, seq in enumerate(seqs)):
            return True
        key = (tuple(work), tuple(lastl))
        if key in visited:
            return False
        visited.add(key)
        undecided = False
        for pi, seq in enumerate(seqs):
            i = work[pi]
            if i >= len(seq) or seq[i].kind != "w":
                continue
            it = seq[i]
            nxt = list(lastl)
            if it.reg in reg_pos:
                nxt[reg_pos[it.reg]] = (it.gate, it.value)
            work[pi] += 1
            res = solve(tuple(work), tuple(nxt))
            work[pi] -= 1
            if res is True:
                return True
            if res is None:
                undecided = True
        return None if undecided else False

    return solve(tuple(0 for _ in seqs), tuple(None for _ in regs))


def check_gpo(h: ExecutionHistory, budget: Optional[int] = None) -> Verdict:
    """Each writer's writes to a register are observed in issue order.

    For every reader, the subsequence of its reads attributed to one
    writer's writes on one register must be non-decreasing in that writer's
    program order: once a later write has been observed there, an earlier
    one must not come back.
    """
    slow = check_slow(h)
    if not slow.holds:
        return Verdict(VIOLATED, slow.witness, "read of a never-written value")
    order = build_causality_order(h)
    if order.cycle is not None:
        return Verdict(VIOLATED, order.cycle, "causality cycle")
    ops_by_id = {op.op_id: op for op in h.ops}
    write_rank: dict[int, int] = {}
    counters: dict[tuple, int] = {}
    for op in h.ops:
        if op.kind == "write":
            key = (op.proc, op.reg)
            write_rank[op.op_id] = counters.get(key, 0)
            counters[key] = counters.get(key, 0) + 1
    last_seen: dict[tuple, tuple[int, int, int]] = {}
    for op in h.ops:
        if op.kind != "read":
            continue
        src = order.sources.get(op.op_id)
        if src is None:
            continue
        w = ops_by_id[src]
        key = (op.proc, w.proc, op.reg)
        rank = write_rank[src]
        prev = last_seen.get(key)
        if prev is not None and rank < prev[0]:
            return Verdict(VIOLATED, [prev[2], prev[1], src, op.op_id],
                           f"reader {op.proc} saw writes of {w.proc} out of issue order")
        last_seen[key] = (rank, op.op_id, src)
    if order.ambiguous:
        return Verdict(UNDECIDED, note="ambiguous reads-from attribution")
    return Verdict(HOLDS)


def check_gwo(h: ExecutionHistory) -> Verdict:
    """Acyclicity of the provable write order.

    One write provably precedes another when the second write's issuer read
    the first (directly or through chains) before issuing, or when both come
    from one processor. All such edges embed in the causality order, so the
    check reduces to causality acyclicity; forged histories with circular
    attributions are the violating cases.
    """
    order = build_causality_order(h)
    if order.cycle is not None:
        return Verdict(VIOLATED, order.cycle, "provable write order is cyclic")
    if order.ambiguous:
        return Verdict(UNDECIDED, note="ambiguous reads-from attribution")
    return Verdict(HOLDS)


_INIT = ("__initial__",)


def check_gdo(h: ExecutionHistory, budget: Optional[int] = None) -> Verdict:
    """Per-register total write order consistent with successive reads."""
    order = build_causality_order(h)
    if order.cycle is not None:
        return Verdict(VIOLATED, order.cycle, "causality cycle")
    if order.ambiguous:
        return Verdict(UNDECIDED, note="ambiguous reads-from attribution")
    regs = sorted({op.reg for op in h.ops}, key=str)
    for reg in regs:
        nodes: dict = {_INIT: set()}
        writes = [op for op in h.ops if op.kind == "write" and op.reg == reg]
        per_writer: dict = {}
        for w in writes:
            nodes.setdefault(w.op_id, set())
            nodes[_INIT].add(w.op_id)
            if w.proc in per_writer:
                nodes[per_writer[w.proc]].add(w.op_id)
            per_writer[w.proc] = w.op_id
        per_reader_last: dict = {}
        for op in h.ops:
            if op.kind != "read" or op.reg != reg:
                continue
            if op.err:
                continue
            src = order.sources.get(op.op_id)
            node = _INIT if src is None else src
            if node not in nodes:
                continue
            prev = per_reader_last.get(op.proc)
            if prev is not None and prev != node:
                nodes[prev].add(node)
            per_reader_last[op.proc] = node
        cyc = _find_cycle(nodes)
        if cyc:
            witness = [n for n in cyc if n != _INIT]
            return Verdict(VIOLATED, witness, f"no per-register write order for {reg}")
    return Verdict(HOLDS)


def _find_cycle(adj: dict) -> Optional[list]:
    state = {n: 0 for n in adj}
    for start in adj:
        if state[start]:
            continue
        stack = [(start, iter(sorted(adj[start], key=str)))]
        path = [start]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                path.pop()
                continue
            if nxt not in adj:
                continue
            if state[nxt] == 1:
                return path[path.index(nxt):]
            if state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(sorted(adj[nxt], key=str))))
                path.append(nxt)
    return None


def check_causal(h: ExecutionHistory, budget: Optional[int] = None) -> Verdict:
    gpo = check_gpo(h, budget)
    gwo = check_gwo(h)
    if gpo.status == VIOLATED or gwo.status == VIOLATED:
        bad = gpo if gpo.status == VIOLATED else gwo
        return Verdict(VIOLATED, bad.witness, bad.note)
    if gpo.status == UNDECIDED or gwo.status == UNDECIDED:
        return Verdict(UNDECIDED, note="component predicate undecided")
    return Verdict(HOLDS)


def _read_gate(op: Operation, sources: dict) -> tuple:
    src = sources.get(op.op_id)
    if src is not None:
        return ("src", src)
    if op.src is None and not op.err and op.value == initial_value(op.reg):
        return ("init",)
    return ("value",)


def _proc_sequences(h: ExecutionHistory, sources: dict) -> list[list[_Item]]:
    read_regs = {op.reg for op in h.ops if op.kind == "read"}
    sequences = []
    for _, ops in sorted(h.per_proc().items()):
        seq = []
        for op in ops:
            if op.kind == "read":
                seq.append(_Item("r", op.reg, op.value, _read_gate(op, sources)))
            elif op.reg in read_regs:
                seq.append(_Item("w", op.reg, op.value, op.op_id))
        sequences.append(seq)
    return sequences


def check_sequential(h: ExecutionHistory, budget: Optional[int] = None) -> Verdict:
    """One global interleaving, program-ordered, latest-value reads.

    Reads produced by the simulators gate on their exact source write, so a
    stale sample pinned by routing-register chains is a genuine violation.
    """
    budget = search_budget(budget)
    slow = check_slow(h)
    if not slow.holds:
        return Verdict(VIOLATED, slow.witness, "read of a never-written value")
    order = build_causality_order(h)
    if order.cycle is not None:
        return Verdict(VIOLATED, order.cycle, "causality cycle")
    res = _feasible(_proc_sequences(h, order.sources), budget)
    if res is True:
        return Verdict(HOLDS)
    if res is None:
        return Verdict(UNDECIDED, note="search budget exhausted")
    return Verdict(VIOLATED, _minimize_sequential_witness(h, order.sources, budget),
                   "no sequential interleaving")


def _minimize_sequential_witness(h: ExecutionHistory, sources: dict, budget: int) -> list[int]:
    def violated(regs: set) -> bool:
        sub = h.subset({op.op_id for op in h.ops if op.reg in regs})
        return _feasible(_proc_sequences(sub, sources), budget) is False

    keep = {op.reg for op in h.ops}
    for reg in sorted(keep, key=str):
        trial = keep - {reg}
        if trial and violated(trial):
            keep = trial
    return [op.op_id for op in h.ops if op.reg in keep]


def check_concurrent_write_free(h: ExecutionHistory) -> Verdict:
    """Every pair of writes to one register must be causality-ordered."""
    order = build_causality_order(h)
    if order.cycle is not None:
        return Verdict(VIOLATED, order.cycle, "causality cycle")
    if order.ambiguous:
        return Verdict(UNDECIDED, note="ambiguous reads-from attribution")
    by_reg: dict[RegisterId, list[Operation]] = {}
    for op in h.ops:
        if op.kind == "write":
            by_reg.setdefault(op.reg, []).append(op)
    for reg in sorted(by_reg, key=str):
        ws = by_reg[reg]
        for a, b in itertools.combinations(ws, 2):
            if not order.precedes(a.op_id, b.op_id) and not order.precedes(b.op_id, a.op_id):
                return Verdict(VIOLATED, [a.op_id, b.op_id],
                               f"concurrent writes to {reg}")
    return Verdict(HOLDS)


@dataclass
class BRDReport:
    holds: bool
    messages: list[GlueMsg] = field(default_factory=list)
    tiles: list[str] = field(default_factory=list)
    complete: bool = True


def check_binding_rule_determined(tas: TileAssemblySystem, k: int = 4,
                                  budget: int = 200_000) -> BRDReport:
    """At most one tile type per deliverable glue-message combination.

    A message combination is deliverable when some producible bounded
    configuration places neighbors presenting those glues toward an empty
    site; the protocol can then hand any one or two of them (one per
    message register) to the deciding processor. A combination admitting
    two or more tile types at the binding threshold is a violation witness.
    Quantifying over deliverable sets matters: a glue that growth order can
    never present from a given direction must not count against the system.
    """
    from collections import deque

    seen_configs = {tas.seed.key()}
    queue = deque([tas.seed.copy()])
    seen_sets: set = set()
    complete = True
    while queue:
        assembly = queue.popleft()
        sites = {neighbor(c, d) for c in assembly.placements for d in SIDES
                 if neighbor(c, d) not in assembly and in_bounds(neighbor(c, d), k)}
        for site in sorted(sites):
            msgs = []
            for d in SIDES:
                other = assembly.placements.get(neighbor(site, d))
                if other is None:
                    continue
                g = other.glue(OPPOSITE[d])
                if g.strength > 0:
                    msgs.append(GlueMsg(d, g.label, g.strength))
            for r in (1, 2):
                for combo in itertools.combinations(sorted(msgs), r):
                    if combo in seen_sets:
                        continue
                    seen_sets.add(combo)
                    types = bind_types(tas, list(combo))
                    if len(types) > 1:
                        return BRDReport(False, list(combo), [t.name for t in types])
            for t in tas.tiles:
                if binding_strength(assembly, tas, site, t) >= tas.temperature:
                    child = assembly.copy()
                    child.placements[site] = t
                    ckey = child.key()
                    if ckey not in seen_configs:
                        if len(seen_configs) >= budget:
                            complete = False
                            continue
                        seen_configs.add(ckey)
                        queue.append(child)
    return BRDReport(True, complete=complete)


@dataclass
class ConsistencyReport:
    slow: Verdict
    gpo: Verdict
    gwo: Verdict
    gdo: Verdict
    causal: Verdict
    sequential: Verdict

    def verdicts(self) -> dict[str, Verdict]:
        return {"slow": self.slow, "gpo": self.gpo, "gwo": self.gwo,
                "gdo": self.gdo, "causal": self.causal, "sequential": self.sequential}

    def to_json(self) -> dict:
        return {name: v.to_json() for name, v in self.verdicts().items()}


def _implies(stronger: Verdict, weaker: Verdict) -> bool:
    return not (stronger.status == HOLDS and weaker.status == VIOLATED)


def classify(h: ExecutionHistory, budget: Optional[int] = None) -> ConsistencyReport:
    report = ConsistencyReport(
        slow=check_slow(h),
        gpo=check_gpo(h, budget),
        gwo=check_gwo(h),
        gdo=check_gdo(h, budget),
        causal=check_causal(h, budget),
        sequential=check_sequential(h, budget),
    )
    assert _implies(report.sequential, report.causal), "sequential must imply causal"
    assert _implies(report.causal, report.gpo), "causal must imply gpo"
    assert not (report.slow.status == VIOLATED and report.gpo.status == HOLDS), \
        "slow violation must carry to gpo"
    causal_both = report.gpo.status == HOLDS and report.gwo.status == HOLDS
    assert (report.causal.status == HOLDS) == causal_both or \
        UNDECIDED in (report.gpo.status, report.gwo.status, report.causal.status), \
        "causal must equal gpo and gwo"
    return report


@dataclass
class CwfCertificate:
    all_cwf: bool
    histories: int
    complete: bool
    witness_pair: list[int] = field(default_factory=list)
    witness_history: Optional[ExecutionHistory] = None


def certify_concurrent_write_freedom(
    tas: TileAssemblySystem, k: int, max_histories: int = 100_000
) -> CwfCertificate:
    """Concurrent-write freedom over every enumerated protocol execution."""
    histories, complete = enumerate_atam_histories(tas, k, max_histories)
    for h in histories:
        v = check_concurrent_write_free(h)
        if v.status == VIOLATED:
            return CwfCertificate(False, len(histories), complete, v.witness, h)
    return CwfCertificate(True, len(histories), complete)


def report_to_json_text(report: ConsistencyReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n"
