"""Read/write operation histories of the grid shared-memory machine.

Each grid processor owns four registers: two message registers r1/r2, a
three-valued routing register `index`, and an output register `rho`. A
history is the interleaved operation log, one global id per operation and a
round number stamped on each. Values written by the simulators carry exact
provenance (reads record the op id of the write they returned), so
reads-from attribution never guesses; imported histories without provenance
fall back to value matching.

File format: JSON lines. Header line
    {"model": "atam"|"ktam", "k": K, "psi": {tile name: token}}
then one operation per line
    {"op": N, "proc": [i, j], "kind": "read"|"write",
     "reg": {"owner": [i, j], "kind": "r1"|"r2"|"index"|"rho"},
     "value": ..., "stage": S, "src": M|null, "err": bool}
with "src"/"err" present on reads only. Values encode as: null (EMPTY),
{"dir", "glue", "strength"} for glue messages, {"index": "1"|"2"|"both"}
for routing values, {"tile": token} for output values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

Proc = tuple[int, int]

EMPTY = None  # register value for "nothing written yet"

INDEX_INITIAL = "1"


class GlueMsg(NamedTuple):
    direction: str  # side of the receiver facing the sender
    glue: str
    strength: int


class IndexVal(NamedTuple):
    value: str  # "1" | "2" | "both"


class TileVal(NamedTuple):
    token: str


class RegisterId(NamedTuple):
    owner: Proc
    kind: str  # "r1" | "r2" | "index" | "rho"


def initial_value(reg: RegisterId):
    return IndexVal(INDEX_INITIAL) if reg.kind == "index" else EMPTY


@dataclass
class Operation:
    op_id: int
    proc: Proc
    kind: str  # "read" | "write"
    reg: RegisterId
    value: object
    stage: int
    src: Optional[int] = None  # reads: op id of the source write, None = initial
    err: bool = False  # reads: value was never written (error injection)


@dataclass
class ExecutionHistory:
    model: str  # "atam" | "ktam"
    k: int
    psi: dict[str, str]  # tile name -> output token
    ops: list[Operation] = field(default_factory=list)

    def psi_inv(self) -> dict[str, str]:
        return {tok: name for name, tok in self.psi.items()}

    def writes(self, reg: RegisterId) -> list[Operation]:
        return [o for o in self.ops if o.kind == "write" and o.reg == reg]

    def rho_writes(self) -> list[Operation]:
        return [o for o in self.ops if o.kind == "write" and o.reg.kind == "rho"]

    def per_proc(self) -> dict[Proc, list[Operation]]:
        out: dict[Proc, list[Operation]] = {}
        for op in self.ops:
            out.setdefault(op.proc, []).append(op)
        return out

    def subset(self, op_ids: set[int]) -> "ExecutionHistory":
        """Sub-history keeping only the given operations (order preserved)."""
        return ExecutionHistory(self.model, self.k, dict(self.psi),
                                [o for o in self.ops if o.op_id in op_ids])


def make_psi(tile_names) -> dict[str, str]:
    """Bijection from tile names to output tokens T0, T1, ..."""
    return {name: f"T{i}" for i, name in enumerate(sorted(tile_names))}


def _value_to_json(value):
    if value is EMPTY:
        return None
    if isinstance(value, GlueMsg):
        return {"dir": value.direction, "glue": value.glue, "strength": value.strength}
    if isinstance(value, IndexVal):
        return {"index": value.value}
    if isinstance(value, TileVal):
        return {"tile": value.token}
    raise TypeError(f"unknown register value {value!r}")


def _value_from_json(data):
    if data is None:
        return EMPTY
    if "glue" in data:
        return GlueMsg(data["dir"], data["glue"], data["strength"])
    if "index" in data:
        return IndexVal(data["index"])
    if "tile" in data:
        return TileVal(data["tile"])
    raise ValueError(f"unknown value encoding {data!r}")


def dump_history(h: ExecutionHistory) -> str:
    lines = [json.dumps({"model": h.model, "k": h.k, "psi": h.psi}, sort_keys=True)]
    for op in h.ops:
        rec = {
            "op": op.op_id,
            "proc": list(op.proc),
            "kind": op.kind,
            "reg": {"owner": list(op.reg.owner), "kind": op.reg.kind},
            "value": _value_to_json(op.value),
            "stage": op.stage,
        }
        if op.kind == "read":
            rec["src"] = op.src
            rec["err"] = op.err
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + "\n"


def load_history(text: str) -> ExecutionHistory:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty history file")
    header = json.loads(lines[0])
    h = ExecutionHistory(header["model"], header["k"], dict(header["psi"]))
    for ln in lines[1:]:
        rec = json.loads(ln)
        h.ops.append(
            Operation(
                op_id=rec["op"],
                proc=tuple(rec["proc"]),
                kind=rec["kind"],
                reg=RegisterId(tuple(rec["reg"]["owner"]), rec["reg"]["kind"]),
                value=_value_from_json(rec["value"]),
                stage=rec["stage"],
                src=rec.get("src"),
                err=rec.get("err", False),
            )
        )
    return h
