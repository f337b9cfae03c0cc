"""Synthetic noisy readout POVMs and deterministic shot sampling.

Three noise families cover the interesting crosstalk regimes:

* local_flip: independent per-qubit assignment flips; the POVM stays an
  exact tensor product, so every crosstalk measure should vanish.
* classical_corr: a weight-w mixture with a channel that flips both qubits
  of a designated pair together (balanced, so at w=1 the all-zeros element
  becomes the even mixture of |a><a| and |flip(a)><flip(a)|).  Elements stay
  diagonal: classically correlated but never entangled.
* entangled: the all-zeros element is mixed with a Bell projector on the
  designated pair at weight p, and the residual p(P0 - Bell) is moved onto
  the element whose outcome flips the pair bits, which keeps the sum exactly
  at identity and every element PSD for p in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import (
    HermitianOperator,
    Povm,
    basis_projector,
    born_probabilities,
    validate_povm,
)
from .tomography import PreparationSet

NOISE_KINDS = ("local_flip", "classical_corr", "entangled")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model parameters.

    p is the per-qubit flip probability for local_flip (flip_probs overrides
    it per qubit) and the Bell mixing weight for entangled; w is the
    correlated-flip weight for classical_corr, whose local part also uses p.
    """

    kind: str
    p: float = 0.0
    w: float = 0.0
    flip_probs: tuple[float, ...] | None = None
    pair: tuple[int, int] = (0, 1)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}, expected one of {NOISE_KINDS}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"w must lie in [0, 1], got {self.w}")
        if self.flip_probs is not None:
            fp = tuple(float(x) for x in self.flip_probs)
            if any(not 0.0 <= x <= 1.0 for x in fp):
                raise ValueError(f"flip probabilities must lie in [0, 1], got {fp}")
            object.__setattr__(self, "flip_probs", fp)
        pair = (int(self.pair[0]), int(self.pair[1]))
        if pair[0] == pair[1]:
            raise ValueError("pair must name two distinct qubits")
        object.__setattr__(self, "pair", pair)
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _local_flip_elements(n: int, flip: Sequence[float]) -> np.ndarray:
    """Stacked product elements (2**n, D, D) for independent per-qubit flips."""
    singles = []
    for p in flip:
        m0 = np.diag([1.0 - p, p]).astype(complex)
        m1 = np.diag([p, 1.0 - p]).astype(complex)
        singles.append((m0, m1))
    elements = []
    for i in range(2**n):
        bits = format(i, f"0{n}b")
        m = np.ones((1, 1), dtype=complex)
        for q, b in enumerate(bits):
            m = np.kron(m, singles[q][int(b)])
        elements.append(m)
    return np.stack(elements)


def _pair_positions(n: int, pair: tuple[int, int]) -> tuple[int, int]:
    if not (0 <= pair[0] < n and 0 <= pair[1] < n):
        raise ValueError(f"pair {pair} is outside qubits 0..{n - 1}")
    return pair


def make_noisy_povm(n: int, spec: NoiseSpec) -> Povm:
    """Construct the noisy POVM for a register of n qubits (labels 0..n-1).

    The result is re-validated at tolerance 1e-10; parameters that leave the
    POVM cone are rejected.
    """
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    labels = tuple(range(n))
    flip = spec.flip_probs if spec.flip_probs is not None else (spec.p,) * n
    if len(flip) != n:
        raise ValueError(f"{len(flip)} flip probabilities given for n={n}")

    if spec.kind == "local_flip":
        stacked = _local_flip_elements(n, flip)
    elif spec.kind == "classical_corr":
        if n < 2:
            raise ValueError("classical_corr needs at least two qubits")
        a, b = _pair_positions(n, spec.pair)
        local = _local_flip_elements(n, flip)
        stacked = np.empty_like(local)
        for i in range(2**n):
            flipped = i ^ (1 << (n - 1 - a)) ^ (1 << (n - 1 - b))
            proj = np.zeros((2**n, 2**n), dtype=complex)
            proj[i, i] = 0.5
            proj[flipped, flipped] = 0.5
            stacked[i] = (1.0 - spec.w) * local[i] + spec.w * proj
    else:
        if n < 2:
            raise ValueError("entangled noise needs at least two qubits")
        a, b = _pair_positions(n, spec.pair)
        d = 2**n
        stacked = np.stack(
            [basis_projector(format(i, f"0{n}b"), labels).matrix for i in range(d)]
        )
        conj = (1 << (n - 1 - a)) | (1 << (n - 1 - b))
        bell = np.zeros(d, dtype=complex)
        bell[0] = 1.0 / np.sqrt(2.0)
        bell[conj] = 1.0 / np.sqrt(2.0)
        bell_proj = np.outer(bell, bell.conj())
        p0 = stacked[0].copy()
        stacked[0] = (1.0 - spec.p) * p0 + spec.p * bell_proj
        stacked[conj] = stacked[conj] + spec.p * (p0 - bell_proj)

    povm = Povm(tuple(HermitianOperator(m, labels) for m in stacked))
    report = validate_povm(povm, psd_tol=1e-10, completeness_tol=1e-10)
    if not report.ok:
        raise ValueError(
            f"noise parameters produce an invalid POVM: min eigenvalue "
            f"{min(report.min_eigenvalues):.3e}, completeness residual "
            f"{report.completeness_residual:.3e}"
        )
    return povm


def sample_counts(
    povm: Povm,
    preps: PreparationSet,
    shots: int | None = None,
    seed: int | None = None,
) -> dict:
    """Draw multinomial counts for every preparation; returns a counts document.

    Sampling is inverse-CDF on a counter-based generator keyed by
    (seed, preparation index), so any preparation's counts are reproducible
    independently of the others.  Zero counts are omitted from the document.
    """
    if povm.n != preps.n:
        raise ValueError(f"POVM acts on {povm.n} qubits, preparations on {preps.n}")
    shots = preps.shots_per_state if shots is None else int(shots)
    if shots < 1:
        raise ValueError("shots must be positive")
    seed = 0 if seed is None else int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")

    outcomes = povm.outcomes
    preparations = []
    for k in range(preps.num_states):
        p = born_probabilities(povm, preps.states[k])
        cdf = np.cumsum(p / p.sum())
        cdf[-1] = 1.0
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, k], dtype=np.uint64)))
        idx = np.searchsorted(cdf, rng.random(shots), side="right")
        counts = np.bincount(idx, minlength=len(outcomes))
        preparations.append(
            {
                "labels": list(preps.labels[k]),
                "shots": shots,
                "counts": {
                    outcomes[i]: int(c) for i, c in enumerate(counts) if c > 0
                },
            }
        )
    return {
        "version": 1,
        "qubits": list(povm.qubit_labels),
        "preparations": preparations,
    }
