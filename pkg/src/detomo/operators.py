"""Operator algebra for multi-qubit measurement elements.

Conventions used throughout the package: qubits carry integer labels; an
outcome bitstring a1...an assigns a1 to the first label, and the leftmost bit
is the most significant Kronecker index; POVM elements are kept in
lexicographic outcome order (index i <-> bitstring format(i, "0nb")).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PSD_TOL = 1e-9
COMPLETENESS_TOL = 1e-8
TRACE_ONE_TOL = 1e-10
DEGENERATE_TRACE = 1e-12


class LabelConflictError(ValueError):
    """Tensor factors share a qubit label."""


class DimensionMismatchError(ValueError):
    """Operands act on incompatible spaces."""


class DegenerateElementError(ValueError):
    """Element trace is too small to normalize."""


class NumericalFailureError(RuntimeError):
    """A solver produced non-finite or unusable intermediates."""


def _hermitize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix on a register of labeled qubits.

    The matrix is symmetrized to (M + M^dag)/2 at construction and stored
    read-only, so Hermiticity holds exactly from then on.
    """

    matrix: np.ndarray
    qubit_labels: tuple[int, ...]

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
        labels = tuple(int(q) for q in self.qubit_labels)
        if len(set(labels)) != len(labels):
            raise LabelConflictError(f"duplicate qubit labels: {labels}")
        if m.shape[0] != 2 ** len(labels):
            raise DimensionMismatchError(
                f"matrix dim {m.shape[0]} does not match {len(labels)} qubit labels"
            )
        m = _hermitize(m)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "qubit_labels", labels)

    @property
    def n(self) -> int:
        return len(self.qubit_labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(self.matrix.trace().real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])


@dataclass(frozen=True)
class NormalizedElement:
    """POVM element rescaled to unit trace, the object distance measures act on."""

    op: HermitianOperator

    def __post_init__(self) -> None:
        tr = self.op.trace()
        if abs(tr - 1.0) > TRACE_ONE_TOL:
            raise ValueError(f"normalized element must have unit trace, got {tr!r}")
        lo = self.op.min_eigenvalue()
        if lo < -PSD_TOL:
            raise ValueError(f"normalized element must be PSD, min eigenvalue {lo:.3e}")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def qubit_labels(self) -> tuple[int, ...]:
        return self.op.qubit_labels

    @property
    def n(self) -> int:
        return self.op.n

    @property
    def dim(self) -> int:
        return self.op.dim


@dataclass(frozen=True)
class Povm:
    """POVM elements in lexicographic outcome order.

    Construction checks structure only (one element per bitstring, shared
    labels); physical validity is reported by validate_povm so that broken
    inputs can still be inspected.
    """

    elements: tuple[HermitianOperator, ...]

    def __post_init__(self) -> None:
        elems = tuple(self.elements)
        if not elems:
            raise ValueError("a POVM needs at least one element")
        labels = elems[0].qubit_labels
        for e in elems:
            if e.qubit_labels != labels:
                raise LabelConflictError("all POVM elements must share the same qubit labels")
        if len(elems) != 2 ** len(labels):
            raise DimensionMismatchError(
                f"expected {2 ** len(labels)} elements for {len(labels)} qubits, got {len(elems)}"
            )
        object.__setattr__(self, "elements", elems)

    @property
    def n(self) -> int:
        return self.elements[0].n

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    @property
    def qubit_labels(self) -> tuple[int, ...]:
        return self.elements[0].qubit_labels

    @property
    def outcomes(self) -> tuple[str, ...]:
        n = self.n
        return tuple(format(i, f"0{n}b") for i in range(2**n))

    def element(self, outcome: str) -> HermitianOperator:
        return self.elements[outcome_index(outcome, self.n)]


@dataclass(frozen=True)
class PovmValidation:
    """Positivity and completeness report for a candidate POVM."""

    min_eigenvalues: tuple[float, ...]
    completeness_residual: float
    psd_tol: float
    completeness_tol: float

    @property
    def psd_ok(self) -> bool:
        return min(self.min_eigenvalues) >= -self.psd_tol

    @property
    def completeness_ok(self) -> bool:
        return self.completeness_residual <= self.completeness_tol

    @property
    def ok(self) -> bool:
        return self.psd_ok and self.completeness_ok


def outcome_index(outcome: str, n: int) -> int:
    """Index of an outcome bitstring in lexicographic order."""
    if len(outcome) != n or any(c not in "01" for c in outcome):
        raise ValueError(f"outcome {outcome!r} is not a {n}-bit string")
    return int(outcome, 2)


def tensor(ops: Sequence[HermitianOperator]) -> HermitianOperator:
    """Kronecker product of operators on disjoint qubit registers.

    Labels concatenate in argument order; the first argument supplies the most
    significant bits.
    """
    if not ops:
        raise ValueError("tensor of zero operators is undefined")
    labels: list[int] = []
    for op in ops:
        labels.extend(op.qubit_labels)
    if len(set(labels)) != len(labels):
        raise LabelConflictError(f"tensor factors share qubit labels: {labels}")
    m = ops[0].matrix
    for op in ops[1:]:
        m = np.kron(m, op.matrix)
    return HermitianOperator(m, tuple(labels))


def trace_norm(matrix: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.abs(np.linalg.eigvalsh(_hermitize(matrix))).sum())


def trace_distance(a, b) -> float:
    """Trace distance (1/2)||a - b||_1 between Hermitian operands.

    Accepts NormalizedElement or HermitianOperator; operands must share the
    same dimension.
    """
    ma, mb = a.matrix, b.matrix
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"operands have shapes {ma.shape} and {mb.shape}")
    return 0.5 * trace_norm(ma - mb)


def normalize(op: HermitianOperator) -> NormalizedElement:
    """Rescale an element to unit trace; traces <= 1e-12 are rejected."""
    tr = op.trace()
    if tr <= DEGENERATE_TRACE:
        raise DegenerateElementError(f"cannot normalize element with trace {tr:.3e}")
    return NormalizedElement(HermitianOperator(op.matrix / tr, op.qubit_labels))


def basis_projector(outcome: str, qubit_labels: Sequence[int]) -> HermitianOperator:
    """Projector |outcome><outcome| in the computational basis."""
    labels = tuple(int(q) for q in qubit_labels)
    n = len(labels)
    i = outcome_index(outcome, n)
    m = np.zeros((2**n, 2**n), dtype=complex)
    m[i, i] = 1.0
    return HermitianOperator(m, labels)


def ideal_povm(n: int, qubit_labels: Sequence[int] | None = None) -> Povm:
    """Projective computational-basis POVM on n qubits."""
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    labels = tuple(range(n)) if qubit_labels is None else tuple(int(q) for q in qubit_labels)
    if len(labels) != n:
        raise DimensionMismatchError(f"{len(labels)} labels given for n={n}")
    return Povm(tuple(basis_projector(format(i, f"0{n}b"), labels) for i in range(2**n)))


def born_probabilities(povm: Povm, state) -> np.ndarray:
    """Outcome probabilities tr[M_i rho] for a density matrix, in POVM order.

    Tiny negative values from roundoff are clamped to zero.
    """
    rho = state.matrix if hasattr(state, "matrix") else np.asarray(state, dtype=complex)
    if rho.shape != (povm.dim, povm.dim):
        raise DimensionMismatchError(f"state shape {rho.shape} does not match POVM dim {povm.dim}")
    stacked = np.stack([e.matrix for e in povm.elements])
    p = np.einsum("ist,ts->i", stacked, rho).real
    return np.clip(p, 0.0, None)


def validate_povm(
    povm: Povm, psd_tol: float = PSD_TOL, completeness_tol: float = COMPLETENESS_TOL
) -> PovmValidation:
    """Report positivity and completeness; never raises on physics violations."""
    mins = tuple(e.min_eigenvalue() for e in povm.elements)
    total = sum(e.matrix for e in povm.elements)
    residual = float(np.abs(total - np.eye(povm.dim)).max())
    return PovmValidation(mins, residual, psd_tol, completeness_tol)


def partial_trace(op: HermitianOperator, keep: Iterable[int]) -> HermitianOperator:
    """Trace out every qubit not listed in keep; kept labels follow keep order."""
    labels = op.qubit_labels
    kept = tuple(int(q) for q in keep)
    if len(set(kept)) != len(kept) or any(q not in labels for q in kept):
        raise ValueError(f"keep={kept} is not a set of labels from {labels}")
    n = len(labels)
    pos = [labels.index(q) for q in kept]
    rest = [i for i in range(n) if i not in pos]
    t = op.matrix.reshape((2,) * (2 * n))
    order = pos + rest
    t = np.transpose(t, order + [n + i for i in order])
    dk, dr = 2 ** len(pos), 2 ** len(rest)
    t = t.reshape(dk, dr, dk, dr)
    return HermitianOperator(np.einsum("ajbj->ab", t), kept)


def permute_qubits(op: HermitianOperator, new_labels: Sequence[int]) -> HermitianOperator:
    """Reorder tensor factors so the labels appear in new_labels order."""
    labels = op.qubit_labels
    new = tuple(int(q) for q in new_labels)
    if sorted(new) != sorted(labels):
        raise ValueError(f"{new} is not a permutation of {labels}")
    n = len(labels)
    pos = [labels.index(q) for q in new]
    t = op.matrix.reshape((2,) * (2 * n))
    t = np.transpose(t, pos + [n + i for i in pos])
    return HermitianOperator(t.reshape(op.dim, op.dim), new)
