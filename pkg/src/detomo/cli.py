"""Command line pipeline: simulate, reconstruct, analyze, report.

Exit codes are part of the interface: 0 success, 2 usage or invalid flag
values, 3 input schema violations, 4 numerical failures.  Report files embed
a config hash and input-file hashes; the run timestamp sits in the metadata
object only, so reruns with identical inputs are byte-identical elsewhere.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import io as dio
from .crosstalk import FitConfig, Partition, analyze_povm
from .entanglement import PPT_TOL, classify_povm
from .operators import NumericalFailureError
from .simulator import NOISE_KINDS, NoiseSpec, make_noisy_povm, sample_counts
from .tomography import MleConfig, log_likelihood, mle_reconstruct, mub_preparations


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _sibling(path: str, tag: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + f".{tag}.json") if p.suffix else p.with_name(p.name + f".{tag}.json"))


def cmd_simulate(args: argparse.Namespace) -> int:
    pair = tuple(int(t) for t in args.pair.split(","))
    if len(pair) != 2:
        raise ValueError(f"--pair expects two comma-separated qubits, got {args.pair!r}")
    spec = NoiseSpec(kind=args.noise, p=args.p, w=args.w, pair=pair, seed=args.seed)
    povm = make_noisy_povm(args.n, spec)
    preps = mub_preparations(args.n, shots_per_state=args.shots)
    doc = sample_counts(povm, preps, shots=args.shots, seed=args.seed)
    dio.save_counts(doc, args.out)
    truth_out = args.truth_out or _sibling(args.out, "truth")
    dio.save_povm(povm, truth_out)
    print(
        f"simulated {preps.num_states} preparations x {args.shots} shots "
        f"({args.noise}) -> {args.out}, truth POVM -> {truth_out}"
    )
    return 0


def cmd_reconstruct(args: argparse.Namespace) -> int:
    doc = dio.load_counts(args.counts)
    preps, freq = dio.counts_to_tables(doc)
    cfg = MleConfig(epsilon=args.epsilon, max_iters=args.max_iters)
    povm, diag = mle_reconstruct(freq, preps, cfg)
    dio.save_povm(povm, args.out)
    diag_out = args.diagnostics_out or _sibling(args.out, "diag")
    payload = dio.diagnostics_to_dict(diag)
    payload["metadata"] = {
        "created_at": _timestamp(),
        "config": {"epsilon": args.epsilon, "max_iters": args.max_iters},
        "config_hash": dio.config_hash({"epsilon": args.epsilon, "max_iters": args.max_iters}),
        "inputs": {str(args.counts): dio.file_sha256(args.counts)},
    }
    dio._dump_json(payload, diag_out)
    status = "converged" if diag.converged else "hit max_iters"
    print(
        f"reconstructed {povm.n}-qubit POVM in {diag.iterations} iterations ({status}), "
        f"log-likelihood {log_likelihood(povm, freq, preps):.6f} -> {args.out}"
    )
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    povm = dio.load_povm(args.povm)
    partitions = None
    if args.partitions:
        partitions = tuple(Partition.parse(text) for text in args.partitions)
    cfg = FitConfig(restarts=args.restarts, seed=args.seed)
    report = analyze_povm(povm, partitions, cfg)
    ppt = classify_povm(povm, ppt_tol=args.ppt_tol)

    config = {
        "partitions": [p for p in (args.partitions or [])],
        "restarts": args.restarts,
        "seed": args.seed,
        "ppt_tol": args.ppt_tol,
    }
    metadata = {
        "created_at": _timestamp(),
        "config": config,
        "config_hash": dio.config_hash(config),
        "inputs": {str(args.povm): dio.file_sha256(args.povm)},
    }

    written = []
    base = args.out
    if args.format in ("json", "both"):
        dio.write_crosstalk_json(report, f"{base}.crosstalk.json", metadata)
        dio.write_ppt_json(ppt, f"{base}.ppt.json", metadata)
        written += [f"{base}.crosstalk.json", f"{base}.ppt.json"]
    if args.format in ("csv", "both"):
        dio.write_crosstalk_csv(report, f"{base}.crosstalk.csv")
        dio.write_ppt_csv(ppt, f"{base}.ppt.csv")
        written += [f"{base}.crosstalk.csv", f"{base}.ppt.csv"]

    worst = max((r.d_c for r in report.rows), default=0.0)
    n_verdicts = sum(1 for r in ppt.rows if r.verdict == "N")
    print(f"analyzed {len(report.rows)} (outcome, partition) pairs; max D_C = {worst:.4f}")
    if n_verdicts:
        print(f"{n_verdicts} NPPT bipartition(s) found")
    else:
        print("no NPPT entanglement detected")
    for path in written:
        print(f"wrote {path}")
    return 0


def _render_crosstalk(doc: dict) -> str:
    lines = [f"Crosstalk report, qubits {doc['qubits']}"]
    partitions = []
    for row in doc["rows"]:
        if row["partition"] not in partitions:
            partitions.append(row["partition"])
    for part in partitions:
        lines.append(f"\npartition {part}")
        lines.append(f"{'outcome':>8}  {'D_N':>8}  {'D_C':>8}  {'D_L*':>8}")
        for row in doc["rows"]:
            if row["partition"] != part:
                continue
            star = "" if row["resolved"] else "  (below resolution)"
            lines.append(
                f"{row['outcome']:>8}  {row['D_N']:8.4f}  {row['D_C']:8.4f}  "
                f"{row['D_L_star']:8.4f}{star}"
            )
    if doc.get("skipped_outcomes"):
        lines.append(f"\nskipped near-zero elements: {', '.join(doc['skipped_outcomes'])}")
    return "\n".join(lines)


def _render_ppt(doc: dict) -> str:
    lines = [f"Partial-transpose report, qubits {doc['qubits']} (tol {doc['ppt_tol']:g})"]
    bipartitions = []
    for row in doc["rows"]:
        if row["bipartition"] not in bipartitions:
            bipartitions.append(row["bipartition"])
    header = f"{'outcome':>8}  " + "  ".join(f"{bp:>12}" for bp in bipartitions)
    lines.append(header)
    outcomes = []
    for row in doc["rows"]:
        if row["outcome"] not in outcomes:
            outcomes.append(row["outcome"])
    by_key = {(r["outcome"], r["bipartition"]): r for r in doc["rows"]}
    for outcome in outcomes:
        cells = []
        for bp in bipartitions:
            r = by_key[(outcome, bp)]
            cells.append(f"{r['verdict']} {r['min_eigenvalue']:+8.4f}")
        lines.append(f"{outcome:>8}  " + "  ".join(f"{c:>12}" for c in cells))
    if any(r["verdict"] == "N" for r in doc["rows"]):
        bad = sorted({r["outcome"] for r in doc["rows"] if r["verdict"] == "N"})
        lines.append(f"NPPT entanglement detected in outcomes: {', '.join(bad)}")
    else:
        lines.append("no NPPT entanglement detected")
    return "\n".join(lines)


def cmd_report(args: argparse.Namespace) -> int:
    if not args.crosstalk and not args.ppt:
        raise ValueError("report needs --crosstalk and/or --ppt input files")
    chunks = []
    if args.crosstalk:
        chunks.append(_render_crosstalk(dio._load_json(args.crosstalk)))
    if args.ppt:
        chunks.append(_render_ppt(dio._load_json(args.ppt)))
    text = "\n\n".join(chunks)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detomo",
        description="Detector tomography, crosstalk measures, and entanglement tests",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sample counts from a synthetic noisy POVM")
    sim.add_argument("--n", type=int, required=True, help="number of qubits (1..4)")
    sim.add_argument("--noise", choices=NOISE_KINDS, required=True)
    sim.add_argument("--p", type=float, default=0.0, help="flip probability / Bell weight")
    sim.add_argument("--w", type=float, default=0.0, help="correlated-flip weight")
    sim.add_argument("--pair", default="0,1", help="designated qubit pair, e.g. 0,1")
    sim.add_argument("--shots", type=int, default=8192)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="counts JSON path")
    sim.add_argument("--truth-out", default=None, help="ground-truth POVM path")
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("reconstruct", help="maximum-likelihood POVM from counts")
    rec.add_argument("--counts", required=True)
    rec.add_argument("--out", required=True, help="POVM JSON path")
    rec.add_argument("--epsilon", type=float, default=1e-6)
    rec.add_argument("--max-iters", type=int, default=10000)
    rec.add_argument("--diagnostics-out", default=None)
    rec.set_defaults(func=cmd_reconstruct)

    ana = sub.add_parser("analyze", help="crosstalk and entanglement reports for a POVM")
    ana.add_argument("--povm", required=True)
    ana.add_argument("--out", required=True, help="output path prefix")
    ana.add_argument(
        "--partitions",
        action="append",
        default=None,
        help="partition like 0:1,2 (repeatable; default: full split plus bipartitions)",
    )
    ana.add_argument("--restarts", type=int, default=16)
    ana.add_argument("--seed", type=int, default=7)
    ana.add_argument("--ppt-tol", type=float, default=PPT_TOL)
    ana.add_argument("--format", choices=("json", "csv", "both"), default="both")
    ana.set_defaults(func=cmd_analyze)

    rep = sub.add_parser("report", help="render report files as tables")
    rep.add_argument("--crosstalk", default=None, help="crosstalk JSON from analyze")
    rep.add_argument("--ppt", default=None, help="PPT JSON from analyze")
    rep.add_argument("--out", default=None, help="write the rendered text here")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except dio.SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 3
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
