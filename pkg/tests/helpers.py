"""Shared generators for the test suite."""
import numpy as np

from nmq.channel import RateProfile, RateTerm


def random_density(n, rng, rank=None):
    d = 2 ** n
    k = d if rank is None else rank
    A = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2


def wobble_term(c, w, phase, analytic=True):
    """c (1 + 0.5 sin(w t + phase)); positive and smooth."""
    def rate(t):
        return c * (1 + 0.5 * np.sin(w * np.asarray(t, dtype=float) + phase))

    def integral(t):
        t = np.asarray(t, dtype=float)
        return c * (t - 0.5 / w * (np.cos(w * t + phase) - np.cos(phase)))

    return RateTerm(rate, integral if analytic else None)


def random_profile(n, rng, active=None, analytic=None):
    """Sparse random smooth positive rate profile."""
    size = 4 ** n
    k = active or int(rng.integers(1, min(5, size - 1) + 1))
    idx = rng.choice(np.arange(1, size), size=k, replace=False)
    terms = {}
    for i in idx:
        use_analytic = bool(rng.integers(0, 2)) if analytic is None else analytic
        terms[int(i)] = wobble_term(rng.uniform(0.05, 0.6), rng.uniform(0.3, 3.0),
                                    rng.uniform(0, 2 * np.pi), use_analytic)
    return RateProfile(n, terms)


def dense_hadamard_apply(v):
    from nmq.pauli import hadamard_matrix, num_qubits
    v = np.asarray(v)
    return v @ hadamard_matrix(num_qubits(v.shape[-1])).T
