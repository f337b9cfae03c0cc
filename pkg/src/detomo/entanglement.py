"""Partial-transpose entanglement tests for measurement elements.

A normalized element with a negative partial transpose across a bipartition
cannot be written as a mixture of products across that cut.  For two qubits
(4x4) a positive partial transpose also certifies separability; for larger
registers a PPT result only means no NPPT entanglement was detected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import HermitianOperator, NormalizedElement, Povm, normalize
from .crosstalk import Partition, bipartitions

PPT_TOL = 1e-7

_SKIP_TRACE = 1e-10


def partial_transpose(op: HermitianOperator, block: Sequence[int]) -> HermitianOperator:
    """Transpose the tensor indices of the given qubits; trace is untouched."""
    labels = op.qubit_labels
    qubits = tuple(int(q) for q in block)
    if len(set(qubits)) != len(qubits) or any(q not in labels for q in qubits):
        raise ValueError(f"block {qubits} is not a set of labels from {labels}")
    n = len(labels)
    t = op.matrix.reshape((2,) * (2 * n))
    perm = list(range(2 * n))
    for q in qubits:
        p = labels.index(q)
        perm[p], perm[n + p] = perm[n + p], perm[p]
    return HermitianOperator(t.transpose(perm).reshape(op.dim, op.dim), labels)


@dataclass(frozen=True)
class PptVerdict:
    """Partial-transpose spectrum summary for one bipartition.

    negativity sums eigenvalues below -ppt_tol, so it is zero exactly when
    the verdict is PPT; min eigenvalues in [-ppt_tol, 0) are flagged
    borderline rather than called entangled.
    """

    bipartition: Partition
    min_eigenvalue: float
    negativity: float
    nppt: bool
    borderline: bool
    ppt_tol: float

    @property
    def verdict(self) -> str:
        return "N" if self.nppt else "P"


def nppt_test(
    elem: NormalizedElement, bipartition: Partition, ppt_tol: float = PPT_TOL
) -> PptVerdict:
    """Partial transpose over the first block, then eigenvalue classification."""
    if len(bipartition.blocks) != 2:
        raise ValueError(f"need a two-block partition, got {bipartition.label()}")
    if bipartition.covered != frozenset(elem.qubit_labels):
        raise ValueError(
            f"bipartition {bipartition.label()} does not cover qubits {elem.qubit_labels}"
        )
    if ppt_tol <= 0.0:
        raise ValueError("ppt_tol must be positive")
    pt = partial_transpose(elem.op, bipartition.blocks[0])
    evals = pt.eigenvalues()
    lo = float(evals[0])
    negativity = float(-evals[evals < -ppt_tol].sum())
    return PptVerdict(
        bipartition=bipartition,
        min_eigenvalue=lo,
        negativity=negativity,
        nppt=lo < -ppt_tol,
        borderline=-ppt_tol <= lo < 0.0,
        ppt_tol=ppt_tol,
    )


def classify_bipartitions(
    elem: NormalizedElement, ppt_tol: float = PPT_TOL
) -> tuple[PptVerdict, ...]:
    """NPPT test across every bipartition, singleton-first lexicographic order."""
    return tuple(nppt_test(elem, bp, ppt_tol) for bp in bipartitions(elem.qubit_labels))


@dataclass(frozen=True)
class PptRow:
    outcome: str
    bipartition: str
    min_eigenvalue: float
    negativity: float
    verdict: str
    borderline: bool


@dataclass(frozen=True)
class PptReport:
    """Bipartition verdicts for every usable element of a POVM."""

    qubit_labels: tuple[int, ...]
    rows: tuple[PptRow, ...]
    skipped_outcomes: tuple[str, ...]
    ppt_tol: float

    @property
    def any_nppt(self) -> bool:
        return any(r.verdict == "N" for r in self.rows)


def classify_povm(povm: Povm, ppt_tol: float = PPT_TOL) -> PptReport:
    """Classify every element; elements with trace < 1e-10 are skipped."""
    rows = []
    skipped = []
    for outcome in povm.outcomes:
        element = povm.element(outcome)
        if element.trace() < _SKIP_TRACE:
            skipped.append(outcome)
            continue
        elem = normalize(element)
        for v in classify_bipartitions(elem, ppt_tol):
            rows.append(
                PptRow(
                    outcome=outcome,
                    bipartition=v.bipartition.label(),
                    min_eigenvalue=v.min_eigenvalue,
                    negativity=v.negativity,
                    verdict=v.verdict,
                    borderline=v.borderline,
                )
            )
    return PptReport(
        qubit_labels=povm.qubit_labels,
        rows=tuple(rows),
        skipped_outcomes=tuple(skipped),
        ppt_tol=ppt_tol,
    )
