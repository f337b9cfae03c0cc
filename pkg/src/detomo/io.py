"""On-disk formats: operators, POVMs, counts documents, and report files.

All JSON writers are deterministic (fixed key order, trailing newline) so
that a repeated run with identical inputs produces byte-identical files;
run timestamps live only inside the report metadata object.
"""

from __future__ import annotations

import csv
import hashlib
import io as _stdio
import json
from pathlib import Path

import numpy as np

from .crosstalk import CrosstalkReport
from .entanglement import PptReport
from .operators import HermitianOperator, Povm
from .tomography import (
    FrequencyTable,
    MleDiagnostics,
    PreparationSet,
    preparations_from_labels,
)

CROSSTALK_CSV_COLUMNS = (
    "qubits",
    "outcome",
    "partition",
    "D_N",
    "D_C",
    "D_L_star",
    "converged",
    "restarts_used",
)
PPT_CSV_COLUMNS = ("outcome", "bipartition", "min_eigenvalue", "negativity", "verdict")


class SchemaError(ValueError):
    """An input file does not match its documented schema."""


def operator_to_dict(op: HermitianOperator) -> dict:
    return {
        "dim": op.dim,
        "labels": list(op.qubit_labels),
        "re": op.matrix.real.tolist(),
        "im": op.matrix.imag.tolist(),
    }


def operator_from_dict(doc: dict, where: str = "operator") -> HermitianOperator:
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected an object, got {type(doc).__name__}")
    for key in ("dim", "labels", "re", "im"):
        if key not in doc:
            raise SchemaError(f"{where}: missing key {key!r}")
    dim = doc["dim"]
    labels = doc["labels"]
    if not isinstance(dim, int) or dim < 2:
        raise SchemaError(f"{where}: dim must be an integer >= 2, got {dim!r}")
    try:
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc["im"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: matrix entries are not numeric: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise SchemaError(
            f"{where}: matrix shape {re.shape}/{im.shape} does not match dim {dim}"
        )
    if not isinstance(labels, list) or 2 ** len(labels) != dim:
        raise SchemaError(f"{where}: labels {labels!r} do not match dim {dim}")
    try:
        return HermitianOperator(re + 1j * im, tuple(labels))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def povm_to_dict(povm: Povm) -> dict:
    return {
        "n": povm.n,
        "elements": {
            outcome: operator_to_dict(povm.element(outcome)) for outcome in povm.outcomes
        },
    }


def povm_from_dict(doc: dict) -> Povm:
    if not isinstance(doc, dict) or "n" not in doc or "elements" not in doc:
        raise SchemaError("POVM document needs keys 'n' and 'elements'")
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise SchemaError(f"POVM qubit count must be a positive integer, got {n!r}")
    elements = doc["elements"]
    if not isinstance(elements, dict):
        raise SchemaError("POVM 'elements' must map outcome bitstrings to operators")
    ops = []
    for i in range(2**n):
        outcome = format(i, f"0{n}b")
        if outcome not in elements:
            raise SchemaError(f"POVM document is missing element for outcome {outcome!r}")
        ops.append(operator_from_dict(elements[outcome], where=f"element {outcome!r}"))
    return Povm(tuple(ops))


def _dump_json(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _load_json(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return doc


def save_povm(povm: Povm, path: str | Path) -> None:
    _dump_json(povm_to_dict(povm), path)


def load_povm(path: str | Path) -> Povm:
    return povm_from_dict(_load_json(path))


def validate_counts(doc: dict) -> None:
    """Raise SchemaError naming the offending record if the document is bad."""
    if doc.get("version") != 1:
        raise SchemaError(f"counts version must be 1, got {doc.get('version')!r}")
    qubits = doc.get("qubits")
    if (
        not isinstance(qubits, list)
        or not qubits
        or any(not isinstance(q, int) for q in qubits)
        or len(set(qubits)) != len(qubits)
    ):
        raise SchemaError(f"counts 'qubits' must be a list of distinct integers, got {qubits!r}")
    preps = doc.get("preparations")
    if not isinstance(preps, list) or not preps:
        raise SchemaError("counts 'preparations' must be a nonempty list")
    n = len(qubits)
    for k, rec in enumerate(preps):
        where = f"preparation {k}"
        if not isinstance(rec, dict):
            raise SchemaError(f"{where}: expected an object")
        labels = rec.get("labels")
        if not isinstance(labels, list) or len(labels) != n:
            raise SchemaError(f"{where}: 'labels' must list one state label per qubit")
        shots = rec.get("shots")
        if not isinstance(shots, int) or shots < 1:
            raise SchemaError(f"{where}: 'shots' must be a positive integer, got {shots!r}")
        counts = rec.get("counts")
        if not isinstance(counts, dict):
            raise SchemaError(f"{where}: 'counts' must map outcome bitstrings to counts")
        total = 0
        for key, value in counts.items():
            if len(key) != n or any(c not in "01" for c in key):
                raise SchemaError(f"{where}: outcome key {key!r} is not a {n}-bit string")
            if not isinstance(value, int) or value < 0:
                raise SchemaError(f"{where}: count for {key!r} must be a non-negative integer")
            total += value
        if total != shots:
            raise SchemaError(
                f"{where}: counts sum to {total} but 'shots' is {shots}"
            )


def counts_to_tables(doc: dict) -> tuple[PreparationSet, FrequencyTable]:
    """Validated counts document -> preparation states and frequencies.

    Outcome keys absent from a record are zero counts.
    """
    validate_counts(doc)
    qubits = doc["qubits"]
    n = len(qubits)
    records = doc["preparations"]
    try:
        preps = preparations_from_labels(
            [rec["labels"] for rec in records], qubits, shots_per_state=records[0]["shots"]
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    counts = np.zeros((2**n, len(records)), dtype=np.int64)
    shots = np.zeros(len(records), dtype=np.int64)
    for k, rec in enumerate(records):
        shots[k] = rec["shots"]
        for key, value in rec["counts"].items():
            counts[int(key, 2), k] = value
    return preps, FrequencyTable.from_counts(counts, shots)


def save_counts(doc: dict, path: str | Path) -> None:
    validate_counts(doc)
    _dump_json(doc, path)


def load_counts(path: str | Path) -> dict:
    doc = _load_json(path)
    validate_counts(doc)
    return doc


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def diagnostics_to_dict(diag: MleDiagnostics) -> dict:
    return {
        "iterations": diag.iterations,
        "converged": diag.converged,
        "final_delta": diag.final_delta,
        "log_likelihoods": diag.log_likelihoods.tolist(),
        "deltas": diag.deltas.tolist(),
        "completeness_residuals": diag.completeness_residuals.tolist(),
        "min_eigenvalues": diag.min_eigenvalues.tolist(),
    }


def crosstalk_report_to_dict(report: CrosstalkReport, metadata: dict | None = None) -> dict:
    qubits = ",".join(map(str, report.qubit_labels))
    return {
        "qubits": list(report.qubit_labels),
        "resolution": report.resolution,
        "rows": [
            {
                "qubits": qubits,
                "outcome": r.outcome,
                "partition": r.partition,
                "D_N": r.d_n,
                "D_C": r.d_c,
                "D_L_star": r.d_l_star,
                "converged": r.converged,
                "restarts_used": r.restarts_used,
                "triangle_residual": r.triangle_residual,
                "resolved": r.resolved,
            }
            for r in report.rows
        ],
        "skipped_outcomes": list(report.skipped_outcomes),
        "metadata": metadata or {},
    }


def write_crosstalk_json(
    report: CrosstalkReport, path: str | Path, metadata: dict | None = None
) -> None:
    _dump_json(crosstalk_report_to_dict(report, metadata), path)


def crosstalk_report_to_csv(report: CrosstalkReport) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CROSSTALK_CSV_COLUMNS)
    qubits = ",".join(map(str, report.qubit_labels))
    for r in report.rows:
        writer.writerow(
            [qubits, r.outcome, r.partition, r.d_n, r.d_c, r.d_l_star, r.converged, r.restarts_used]
        )
    return buf.getvalue()


def write_crosstalk_csv(report: CrosstalkReport, path: str | Path) -> None:
    Path(path).write_text(crosstalk_report_to_csv(report))


def ppt_report_to_dict(report: PptReport, metadata: dict | None = None) -> dict:
    return {
        "qubits": list(report.qubit_labels),
        "ppt_tol": report.ppt_tol,
        "rows": [
            {
                "outcome": r.outcome,
                "bipartition": r.bipartition,
                "min_eigenvalue": r.min_eigenvalue,
                "negativity": r.negativity,
                "verdict": r.verdict,
                "borderline": r.borderline,
            }
            for r in report.rows
        ],
        "skipped_outcomes": list(report.skipped_outcomes),
        "metadata": metadata or {},
    }


def write_ppt_json(report: PptReport, path: str | Path, metadata: dict | None = None) -> None:
    _dump_json(ppt_report_to_dict(report, metadata), path)


def ppt_report_to_csv(report: PptReport) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PPT_CSV_COLUMNS)
    for r in report.rows:
        writer.writerow([r.outcome, r.bipartition, r.min_eigenvalue, r.negativity, r.verdict])
    return buf.getvalue()


def write_ppt_csv(report: PptReport, path: str | Path) -> None:
    Path(path).write_text(ppt_report_to_csv(report))
