"""Command-line surface: reproducible runs, history checks, transforms.

Every command writes a manifest next to its primary output recording the
command line, input digests, parameters, seed, tool version, and output
digests; re-running a manifest's command reproduces the outputs byte for
byte. Exit codes: 0 success / all predicates hold, 1 input error,
2 parameter error, 3 violation found, 4 undecided, 5 precondition failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .consistency import (
    UNDECIDED,
    VIOLATED,
    certify_concurrent_write_freedom,
    check_binding_rule_determined,
    classify,
    search_budget,
)
from .dsm import extract_assembly_sequence, simulate_atam_dsm, simulate_ktam_dsm, verify_simulation
from .history import dump_history, load_history
from .ktam import KineticParams
from .stabilize import (
    HoleError,
    TransformError,
    heal,
    inject_hole,
    measure_error_rate,
    scaled_terminal,
    transform_proofreading,
)
from .tam import TilesetError, check_local_determinism, run_atam
from .tileset_io import parse_tileset, render_ascii, render_svg, write_tileset

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PARAMS = 2
EXIT_VIOLATION = 3
EXIT_UNDECIDED = 4
EXIT_PRECONDITION = 5


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(command: str, args: argparse.Namespace, inputs: list[Path],
                    outputs: list[Path], out_base: Path) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "params": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    path = out_base.with_suffix(out_base.suffix + ".manifest.json")
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _load_tileset(path: str):
    try:
        return parse_tileset(Path(path).read_text())
    except FileNotFoundError:
        print(f"error: no such file {path}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    except TilesetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _kinetic_params(args) -> KineticParams:
    try:
        return KineticParams(k_f=args.kf, g_mc=args.gmc, g_se=args.gse, pi_e=args.pie)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARAMS)


def cmd_run_atam(args) -> int:
    tas = _load_tileset(args.tileset)
    if args.k < 1:
        print("error: k must be positive", file=sys.stderr)
        return EXIT_PARAMS
    try:
        seq = run_atam(tas, args.k, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    out = Path(args.out)
    lines = [json.dumps({"tileset": args.tileset, "k": args.k, "seed": args.seed}, sort_keys=True)]
    for i, ev in enumerate(seq.events):
        lines.append(json.dumps(
            {"event": i, "kind": ev.kind, "x": ev.coord[0], "y": ev.coord[1], "tile": ev.tile},
            sort_keys=True))
    out.write_text("\n".join(lines) + "\n")
    outputs = [out]
    if args.render:
        final = seq.result(tas)
        ascii_path = out.with_suffix(".txt")
        svg_path = out.with_suffix(".svg")
        ascii_path.write_text(render_ascii(final, args.k))
        svg_path.write_text(render_svg(final, args.k))
        outputs += [ascii_path, svg_path]
    _write_manifest("run-atam", args, [Path(args.tileset)], outputs, out)
    return EXIT_OK


def cmd_simulate_dsm(args) -> int:
    tas = _load_tileset(args.tileset)
    if args.k < 1:
        print("error: k must be positive", file=sys.stderr)
        return EXIT_PARAMS
    try:
        if args.model == "atam":
            h = simulate_atam_dsm(tas, args.k, args.seed)
        else:
            p = _kinetic_params(args)
            h = simulate_ktam_dsm(tas, p, args.k, args.seed, args.max_rounds)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    out = Path(args.out)
    out.write_text(dump_history(h))
    _write_manifest("simulate-dsm", args, [Path(args.tileset)], [out], out)
    report = verify_simulation(h, tas)
    if not report.valid:
        print(f"warning: history fails self-verification at op {report.counterexample}: {report.reason}",
              file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


PREDICATES = ("slow", "gpo", "gwo", "gdo", "causal", "sequential")


def cmd_check(args) -> int:
    try:
        h = load_history(Path(args.history).read_text())
    except FileNotFoundError:
        print(f"error: no such file {args.history}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"error: malformed history: {exc}", file=sys.stderr)
        return EXIT_INPUT
    wanted = PREDICATES if args.predicates == "all" else tuple(args.predicates.split(","))
    for name in wanted:
        if name not in PREDICATES:
            print(f"error: unknown predicate {name}", file=sys.stderr)
            return EXIT_PARAMS
    report = classify(h, budget=args.budget)
    verdicts = report.to_json()
    selected = {name: verdicts[name] for name in wanted}
    out = Path(args.out) if args.out else None
    text = json.dumps(selected, sort_keys=True, indent=2) + "\n"
    if out:
        out.write_text(text)
        _write_manifest("check", args, [Path(args.history)], [out], out)
    else:
        sys.stdout.write(text)
    statuses = [v["verdict"] for v in selected.values()]
    if VIOLATED in statuses:
        return EXIT_VIOLATION
    if UNDECIDED in statuses:
        return EXIT_UNDECIDED
    return EXIT_OK


def cmd_certify_ld(args) -> int:
    tas = _load_tileset(args.tileset)
    budget = search_budget(args.budget)
    report = check_local_determinism(tas, args.k, budget)
    cert = certify_concurrent_write_freedom(tas, min(args.k, 3), max_histories=budget)
    brd = check_binding_rule_determined(tas)
    dsm_certifies = cert.all_cwf and brd.holds
    agreement = report.certified == dsm_certifies
    out = {
        "tile_level": {
            "verdict": report.verdict,
            "condition": report.condition,
            "location": list(report.location) if report.location else None,
            "tiles": list(report.tiles),
        },
        "memory_level": {
            "concurrent_write_free": cert.all_cwf,
            "histories": cert.histories,
            "complete": cert.complete,
            "binding_rule_determined": brd.holds,
            "brd_witness_tiles": brd.tiles,
        },
        "agreement": agreement,
    }
    sys.stdout.write(json.dumps(out, sort_keys=True, indent=2) + "\n")
    if report.verdict == "undecided" or not cert.complete:
        return EXIT_UNDECIDED
    if report.certified and dsm_certifies:
        return EXIT_OK
    return EXIT_VIOLATION


def cmd_transform(args) -> int:
    tas = _load_tileset(args.tileset)
    if args.c < 2:
        print("error: scale must be >= 2", file=sys.stderr)
        return EXIT_PARAMS
    try:
        ts = transform_proofreading(tas, args.c, k=args.k)
    except TransformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    out = Path(args.out)
    out.write_text(write_tileset(ts.tas))
    bound_path = out.with_suffix(".bound.json")
    bound_path.write_text(json.dumps(
        {"c": ts.scale, "source_tiles": len(tas.tiles), "tiles": ts.tile_count,
         "bound": ts.bound, "variants": [[n, sorted(s)] for n, s in ts.variants]},
        sort_keys=True, indent=2) + "\n")
    _write_manifest("transform", args, [Path(args.tileset)], [out, bound_path], out)
    return EXIT_OK


def cmd_heal(args) -> int:
    tas = _load_tileset(args.tileset)
    try:
        ts = transform_proofreading(tas, args.c, k=args.k)
    except TransformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    reference = scaled_terminal(ts, args.k)
    block = (args.block_x, args.block_y)
    region = (args.c * block[0], args.c * block[1], args.c, args.c)
    try:
        damaged = inject_hole(reference, region,
                              set(ts.tas.seed.placements), ts.tas.relation)
    except HoleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    hole = {(x, y) for x in range(region[0], region[0] + region[2])
            for y in range(region[1], region[1] + region[3])}
    result = heal(damaged, ts, args.seed, args.max_rounds, region=hole)
    restored = result.final == reference
    out = Path(args.out)
    out.write_text(json.dumps(
        {"restored": restored, "rounds": result.rounds, "converged": result.converged,
         "block": list(block), "c": args.c}, sort_keys=True, indent=2) + "\n")
    _write_manifest("heal", args, [Path(args.tileset)], [out], out)
    return EXIT_OK if restored else EXIT_VIOLATION


def cmd_error_rate(args) -> int:
    tas = _load_tileset(args.tileset)
    p = _kinetic_params(args)
    try:
        ts = transform_proofreading(tas, args.c, k=args.k)
    except TransformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    stats = measure_error_rate(tas, ts, p, args.trials, args.seed, args.k, args.max_rounds)
    out = Path(args.out)
    payload = stats.to_json()
    payload["c"] = args.c
    out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _write_manifest("error-rate", args, [Path(args.tileset)], [out], out)
    return EXIT_OK


def cmd_extract(args) -> int:
    try:
        h = load_history(Path(args.history).read_text())
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    seq = extract_assembly_sequence(h)
    lines = [json.dumps({"model": h.model, "k": h.k}, sort_keys=True)]
    for i, ev in enumerate(seq.events):
        lines.append(json.dumps(
            {"event": i, "kind": ev.kind, "x": ev.coord[0], "y": ev.coord[1], "tile": ev.tile},
            sort_keys=True))
    out = Path(args.out)
    out.write_text("\n".join(lines) + "\n")
    _write_manifest("extract", args, [Path(args.history)], [out], out)
    return EXIT_OK


def _add_kinetic_flags(sub) -> None:
    sub.add_argument("--kf", type=float, default=1.0)
    sub.add_argument("--gmc", type=float, default=2.0)
    sub.add_argument("--gse", type=float, default=2.0)
    sub.add_argument("--pie", type=float, default=0.0)
    sub.add_argument("--max-rounds", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tileconsist")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("run-atam", help="grow a tileset and record the sequence")
    p.add_argument("tileset")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--render", action="store_true")
    p.set_defaults(func=cmd_run_atam)

    p = subs.add_parser("simulate-dsm", help="record a shared-memory execution")
    p.add_argument("tileset")
    p.add_argument("--model", choices=("atam", "ktam"), default="atam")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_kinetic_flags(p)
    p.set_defaults(func=cmd_simulate_dsm)

    p = subs.add_parser("check", help="classify a history against consistency predicates")
    p.add_argument("history")
    p.add_argument("--predicates", default="all")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check)

    p = subs.add_parser("certify-ld", help="certify determinism two ways and compare")
    p.add_argument("tileset")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=cmd_certify_ld)

    p = subs.add_parser("transform", help="emit the c-scaled proofreading tileset")
    p.add_argument("tileset")
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = subs.add_parser("heal", help="punch one block hole and regrow it")
    p.add_argument("tileset")
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--block-x", type=int, required=True)
    p.add_argument("--block-y", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=400)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heal)

    p = subs.add_parser("error-rate", help="compare kinetic mismatch rates, source vs scaled")
    p.add_argument("tileset")
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    _add_kinetic_flags(p)
    p.set_defaults(func=cmd_error_rate)
    p.add_argument("--out", required=True)

    p = subs.add_parser("extract", help="map a history to its tile event sequence")
    p.add_argument("history")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
