"""Measurement crosstalk measures built on nearest-product fits.

For a normalized POVM element three trace distances are reported: D_N to the
ideal outcome projector (total error), D_C to the nearest product element
across a qubit partition (crosstalk error), and D_L* from that nearest
product to the ideal projector (local error).  The triangle inequality
D_N <= D_C + D_L* holds for any fitted product, so the decomposition never
over-explains the total error.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .operators import (
    HermitianOperator,
    NormalizedElement,
    Povm,
    basis_projector,
    normalize,
    permute_qubits,
    tensor,
    trace_distance,
)

# D_C values at or below this sit inside the optimizer's own tolerance and do
# not certify crosstalk.
DC_RESOLUTION = 1e-3

_SKIP_TRACE = 1e-10
_TIE_TOL = 1e-9
_DEDUPE_TOL = 1e-8

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Partition:
    """Ordered disjoint blocks of qubit labels; order fixes factor order."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        blocks = tuple(tuple(int(q) for q in b) for b in self.blocks)
        if not blocks or any(not b for b in blocks):
            raise ValueError("partition blocks must be nonempty")
        flat = [q for b in blocks for q in b]
        if len(set(flat)) != len(flat):
            raise ValueError(f"partition blocks overlap: {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def covered(self) -> frozenset[int]:
        return frozenset(q for b in self.blocks for q in b)

    def label(self) -> str:
        parts = []
        for b in self.blocks:
            parts.append(str(b[0]) if len(b) == 1 else "(" + ",".join(map(str, b)) + ")")
        return ":".join(parts)

    @classmethod
    def parse(cls, text: str) -> "Partition":
        """Parse "0:1,2" or "0:(1,2)" into blocks."""
        blocks = []
        for part in text.split(":"):
            part = part.strip().strip("()")
            if not part:
                raise ValueError(f"empty block in partition {text!r}")
            blocks.append(tuple(int(tok) for tok in part.split(",")))
        return cls(tuple(blocks))

    def relabeled(self, mapping: dict[int, int]) -> "Partition":
        return Partition(tuple(tuple(mapping[q] for q in b) for b in self.blocks))


def full_split(qubit_labels: Sequence[int]) -> Partition:
    """One block per qubit."""
    return Partition(tuple((int(q),) for q in qubit_labels))


def bipartitions(qubit_labels: Sequence[int]) -> tuple[Partition, ...]:
    """All 2**(n-1) - 1 two-block partitions, singleton-first lexicographic."""
    labels = sorted(int(q) for q in qubit_labels)
    n = len(labels)
    if n < 2:
        raise ValueError("bipartitions need at least two qubits")
    firsts = []
    for mask in range(1, 2**n - 1):
        first = tuple(labels[i] for i in range(n) if mask >> i & 1)
        rest = tuple(labels[i] for i in range(n) if not mask >> i & 1)
        if len(first) > len(rest):
            continue
        if len(first) == len(rest) and labels[0] not in first:
            continue
        firsts.append((first, rest))
    firsts.sort(key=lambda fr: (len(fr[0]), fr[0]))
    return tuple(Partition((f, r)) for f, r in firsts)


def default_partitions(qubit_labels: Sequence[int]) -> tuple[Partition, ...]:
    """Full split plus every bipartition (just the bipartition for n=2)."""
    labels = tuple(int(q) for q in qubit_labels)
    if len(labels) < 2:
        raise ValueError("crosstalk analysis needs at least two qubits")
    if len(labels) == 2:
        return (full_split(labels),)
    return (full_split(labels),) + bipartitions(labels)


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 16
    seed: int = 7
    als_tol: float = 1e-10
    als_max_sweeps: int = 500
    polish_max_fev: int = 2000
    early_stop: float = 1e-10

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        if self.als_max_sweeps < 1 or self.polish_max_fev < 0:
            raise ValueError("iteration budgets must be positive")


@dataclass(frozen=True)
class ProductFit:
    """Best product approximation found for one element and partition."""

    partition: Partition
    factors: tuple[NormalizedElement, ...]
    distance: float
    restarts_used: int
    converged: bool
    qubit_labels: tuple[int, ...]

    @property
    def product(self) -> NormalizedElement:
        prod = tensor([f.op for f in self.factors])
        return NormalizedElement(permute_qubits(prod, self.qubit_labels))


def _psd_unit_trace(matrix: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix by eigenvalue clipping, rescaled to unit trace."""
    h = 0.5 * (matrix + matrix.conj().T)
    evals, vecs = np.linalg.eigh(h)
    evals = np.clip(evals, 0.0, None)
    s = evals.sum()
    if s < 1e-300:
        d = h.shape[0]
        return np.eye(d, dtype=complex) / d
    return (vecs * (evals / s)) @ vecs.conj().T


def _kron_chain(factors: Sequence[np.ndarray]) -> np.ndarray:
    m = factors[0]
    for f in factors[1:]:
        m = np.kron(m, f)
    return m


def _distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def _block_partial_traces(tensor_target: np.ndarray, dims: Sequence[int]) -> list[np.ndarray]:
    nb = len(dims)
    rows, cols = _LETTERS[:nb], _LETTERS[nb : 2 * nb]
    out = []
    for b in range(nb):
        # trace all other blocks: repeat their row letter in the column slot
        spec = rows + "".join(cols[i] if i == b else rows[i] for i in range(nb))
        out.append(np.einsum(f"{spec}->{rows[b]}{cols[b]}", tensor_target))
    return out


def _als_update_subscript(nb: int, b: int) -> str:
    rows, cols = _LETTERS[:nb], _LETTERS[nb : 2 * nb]
    operands = [rows + cols]
    for i in range(nb):
        if i != b:
            operands.append(rows[i] + cols[i])
    return ",".join(operands) + "->" + rows[b] + cols[b]


def _als(
    tensor_target: np.ndarray,
    dims: Sequence[int],
    factors: list[np.ndarray],
    tol: float,
    max_sweeps: int,
) -> tuple[list[np.ndarray], np.ndarray, bool]:
    """Alternating closed-form updates of each block factor.

    Each factor minimizes the squared Frobenius distance given the others,
    then is projected back to the PSD unit-trace set.
    """
    nb = len(dims)
    prev = _kron_chain(factors)
    for _ in range(max_sweeps):
        for b in range(nb):
            others = [factors[i].conj() for i in range(nb) if i != b]
            w = np.einsum(_als_update_subscript(nb, b), tensor_target, *others, optimize=True)
            scale = 1.0
            for i in range(nb):
                if i != b:
                    scale *= float(np.vdot(factors[i], factors[i]).real)
            factors[b] = _psd_unit_trace(w / max(scale, 1e-300))
        prod = _kron_chain(factors)
        change = float(np.linalg.norm(prod - prev))
        prev = prod
        if change < tol:
            return factors, prod, True
    return factors, prod, False


def _pack(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate lower-triangular square-root parameters of each factor."""
    params: list[float] = []
    for f in factors:
        d = f.shape[0]
        low = np.linalg.cholesky(f + 1e-10 * np.eye(d))
        params.extend(low[i, i].real for i in range(d))
        for i in range(d):
            for j in range(i):
                params.append(low[i, j].real)
                params.append(low[i, j].imag)
    return np.array(params)


def _unpack(x: np.ndarray, dims: Sequence[int]) -> list[np.ndarray]:
    factors = []
    k = 0
    for d in dims:
        low = np.zeros((d, d), dtype=complex)
        for i in range(d):
            low[i, i] = x[k]
            k += 1
        for i in range(d):
            for j in range(i):
                low[i, j] = x[k] + 1j * x[k + 1]
                k += 2
        f = low @ low.conj().T
        tr = f.trace().real
        if tr < 1e-30:
            f = np.eye(d, dtype=complex) / d
        else:
            f = f / tr
        factors.append(f)
    return factors


def _polish(
    canon: np.ndarray,
    dims: Sequence[int],
    factors: list[np.ndarray],
    start_distance: float,
    max_fev: int,
) -> tuple[list[np.ndarray], float]:
    if max_fev == 0:
        return factors, start_distance

    def objective(x: np.ndarray) -> float:
        return _distance(canon, _kron_chain(_unpack(x, dims)))

    res = minimize(
        objective,
        _pack(factors),
        method="Nelder-Mead",
        options={"maxfev": max_fev, "xatol": 1e-5, "fatol": 1e-10, "adaptive": True},
    )
    cand = _unpack(res.x, dims)
    dist = _distance(canon, _kron_chain(cand))
    if dist < start_distance:
        return cand, dist
    return factors, start_distance


def _seed_factors(
    index: int,
    tensor_target: np.ndarray,
    dims: Sequence[int],
    outcome_bits: list[str] | None,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    if index == 0:
        return [_psd_unit_trace(pt) for pt in _block_partial_traces(tensor_target, dims)]
    if index == 1:
        factors = []
        if outcome_bits is None:
            traces = _block_partial_traces(tensor_target, dims)
            picks = [int(np.argmax(np.real(np.diag(pt)))) for pt in traces]
        else:
            picks = [int(bits, 2) for bits in outcome_bits]
        for d, i in zip(dims, picks):
            f = np.zeros((d, d), dtype=complex)
            f[i, i] = 1.0
            factors.append(f)
        return factors
    if index == 2:
        return [np.eye(d, dtype=complex) / d for d in dims]
    factors = []
    for d in dims:
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        f = x @ x.conj().T
        factors.append(f / f.trace().real)
    return factors


def fit_product(
    elem: NormalizedElement,
    partition: Partition,
    config: FitConfig | None = None,
    outcome: str | None = None,
) -> ProductFit:
    """Nearest product element across a partition, by two-stage local search.

    Stage one runs alternating closed-form Frobenius updates from each seed;
    stage two polishes the trace distance itself with a Nelder-Mead search
    over square-root factor parameters.  Seeds are the block partial traces,
    a basis projector (the outcome's when given, else the dominant diagonal),
    maximally mixed factors, and seeded random factors.  The fit is carried
    out with the partition blocks permuted to contiguous axes, so a
    consistent relabeling of qubits and partition sees an identical problem
    and returns identical distances.

    Ties across restarts within 1e-9 keep the earliest restart; the loop
    exits early once a distance at the configured floor is found.
    """
    cfg = config or FitConfig()
    labels = elem.qubit_labels
    if partition.covered != frozenset(labels):
        raise ValueError(f"partition {partition.label()} does not cover qubits {labels}")
    if len(partition.blocks) < 2:
        raise ValueError("crosstalk queries need at least two blocks")

    concat = [q for b in partition.blocks for q in b]
    canon = permute_qubits(elem.op, concat).matrix
    dims = [2 ** len(b) for b in partition.blocks]
    tensor_target = canon.reshape(tuple(dims) * 2)

    outcome_bits = None
    if outcome is not None:
        by_label = dict(zip(labels, outcome))
        outcome_bits = ["".join(by_label[q] for q in b) for b in partition.blocks]

    rng = np.random.default_rng(cfg.seed)
    best_distance = np.inf
    best_factors: list[np.ndarray] | None = None
    best_ok = False
    restarts_used = 0
    cache: list[tuple[np.ndarray, float, list[np.ndarray]]] = []

    for r in range(cfg.restarts):
        factors0 = _seed_factors(r, tensor_target, dims, outcome_bits, rng)
        factors1, prod1, als_ok = _als(
            tensor_target, dims, list(factors0), cfg.als_tol, cfg.als_max_sweeps
        )
        restarts_used = r + 1

        hit = next(
            (c for c in cache if float(np.abs(c[0] - prod1).max()) < _DEDUPE_TOL), None
        )
        if hit is not None:
            dist, factors = hit[1], hit[2]
        else:
            dist = _distance(canon, prod1)
            factors = factors1
            if dist > _TIE_TOL:
                factors, dist = _polish(canon, dims, factors1, dist, cfg.polish_max_fev)
            cache.append((prod1, dist, factors))

        if dist < best_distance - _TIE_TOL:
            best_distance = dist
            best_factors = factors
            best_ok = als_ok
        if best_distance <= cfg.early_stop:
            break

    assert best_factors is not None
    normalized = tuple(
        NormalizedElement(HermitianOperator(f, block))
        for f, block in zip(best_factors, partition.blocks)
    )
    return ProductFit(
        partition=partition,
        factors=normalized,
        distance=float(best_distance),
        restarts_used=restarts_used,
        converged=best_ok,
        qubit_labels=labels,
    )


def total_error(elem: NormalizedElement, outcome: str) -> float:
    """Trace distance from the element to its ideal outcome projector."""
    return trace_distance(elem, basis_projector(outcome, elem.qubit_labels))


def crosstalk_error(
    elem: NormalizedElement,
    partition: Partition,
    config: FitConfig | None = None,
    outcome: str | None = None,
) -> float:
    """Distance to the nearest product element across the partition."""
    return fit_product(elem, partition, config, outcome).distance


def local_error(fit: ProductFit, outcome: str) -> float:
    """Distance from the fitted product to the ideal outcome projector."""
    return trace_distance(fit.product, basis_projector(outcome, fit.qubit_labels))


@dataclass(frozen=True)
class CrosstalkRow:
    outcome: str
    partition: str
    d_n: float
    d_c: float
    d_l_star: float
    converged: bool
    restarts_used: int
    triangle_residual: float
    resolved: bool


@dataclass(frozen=True)
class CrosstalkReport:
    """Per-outcome, per-partition error decomposition for one POVM."""

    qubit_labels: tuple[int, ...]
    rows: tuple[CrosstalkRow, ...]
    skipped_outcomes: tuple[str, ...]
    resolution: float = DC_RESOLUTION

    @property
    def max_triangle_residual(self) -> float:
        return max((r.triangle_residual for r in self.rows), default=0.0)


def _clip01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def analyze_povm(
    povm: Povm,
    partitions: Sequence[Partition] | None = None,
    config: FitConfig | None = None,
    workers: int | None = None,
) -> CrosstalkReport:
    """Total/crosstalk/local error decomposition for every element.

    Elements with trace below 1e-10 carry no usable signal and are listed in
    skipped_outcomes instead of being normalized.  Fits fan out over
    (outcome, partition) tasks when QDT_THREADS (or workers) exceeds one;
    results merge by task index, so the report does not depend on scheduling.
    """
    cfg = config or FitConfig()
    parts = tuple(partitions) if partitions is not None else default_partitions(povm.qubit_labels)
    for p in parts:
        if p.covered != frozenset(povm.qubit_labels):
            raise ValueError(f"partition {p.label()} does not cover qubits {povm.qubit_labels}")

    if workers is None:
        workers = max(1, int(os.environ.get("QDT_THREADS", "1") or "1"))

    tasks = []
    skipped = []
    for outcome in povm.outcomes:
        element = povm.element(outcome)
        if element.trace() < _SKIP_TRACE:
            skipped.append(outcome)
            continue
        elem = normalize(element)
        d_n = total_error(elem, outcome)
        for partition in parts:
            tasks.append((outcome, elem, d_n, partition))

    def run(task) -> CrosstalkRow:
        outcome, elem, d_n, partition = task
        fit = fit_product(elem, partition, cfg, outcome)
        d_c = fit.distance
        d_l = local_error(fit, outcome)
        return CrosstalkRow(
            outcome=outcome,
            partition=partition.label(),
            d_n=_clip01(d_n),
            d_c=_clip01(d_c),
            d_l_star=_clip01(d_l),
            converged=fit.converged,
            restarts_used=fit.restarts_used,
            triangle_residual=d_n - (d_c + d_l),
            resolved=d_c > DC_RESOLUTION,
        )

    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(run, tasks))
    else:
        rows = tuple(run(t) for t in tasks)

    return CrosstalkReport(
        qubit_labels=povm.qubit_labels,
        rows=rows,
        skipped_outcomes=tuple(skipped),
    )


def assignment_matrix(povm: Povm) -> np.ndarray:
    """Column-stochastic confusion matrix A[i, j] = tr[M_i |j><j|]."""
    return np.stack([np.diag(e.matrix).real for e in povm.elements])


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    mask = u - (css - 1.0) / idx > 0.0
    rho = idx[mask][-1]
    theta = (css[mask][-1] - 1.0) / rho
    return np.clip(v - theta, 0.0, None)


def mitigate_histogram(assignment: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """Invert readout errors on an observed outcome distribution.

    Solves the full assignment system in one least-squares step (per-qubit
    factorized inversion is deliberately not used; it cannot represent
    correlated readout errors) and projects the solution onto the probability
    simplex.  A numerically singular assignment matrix falls back to the
    pseudo-inverse with a warning.
    """
    a = np.asarray(assignment, dtype=float)
    b = np.asarray(observed, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"assignment matrix must be square, got shape {a.shape}")
    if b.shape != (a.shape[0],):
        raise ValueError(f"histogram length {b.shape} does not match matrix {a.shape}")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        warnings.warn(
            f"assignment matrix is ill-conditioned (cond={cond:.3e}); using pseudo-inverse",
            RuntimeWarning,
            stacklevel=2,
        )
        x = np.linalg.pinv(a) @ b
    else:
        x = np.linalg.lstsq(a, b, rcond=None)[0]
    return _project_simplex(x)
