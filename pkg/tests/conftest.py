"""Shared helpers for building random states, elements, and POVMs."""

import numpy as np

from detomo import (
    FrequencyTable,
    HermitianOperator,
    NormalizedElement,
    Povm,
    born_probabilities,
)


def random_density(n: int, rng: np.random.Generator) -> np.ndarray:
    d = 2**n
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = x @ x.conj().T
    return rho / rho.trace().real


def random_element(n: int, rng: np.random.Generator, labels=None) -> NormalizedElement:
    labels = tuple(range(n)) if labels is None else tuple(labels)
    return NormalizedElement(HermitianOperator(random_density(n, rng), labels))


def random_povm(n: int, rng: np.random.Generator) -> Povm:
    """Random full-rank POVM: Wishart pieces whitened by their sum."""
    d = 2**n
    raw = []
    for _ in range(2**n):
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        raw.append(x @ x.conj().T)
    total = sum(raw)
    evals, vecs = np.linalg.eigh(total)
    isq = (vecs * evals**-0.5) @ vecs.conj().T
    return Povm(tuple(HermitianOperator(isq @ a @ isq, tuple(range(n))) for a in raw))


def exact_frequency_table(povm: Povm, preps, shots: int = 8192) -> FrequencyTable:
    """Noise-free frequencies: the exact Born probabilities of each preparation."""
    cols = [born_probabilities(povm, preps.states[k]) for k in range(preps.num_states)]
    f = np.stack(cols).T
    f = f / f.sum(axis=0, keepdims=True)
    return FrequencyTable(f, np.full(preps.num_states, shots))
