"""Time-convoluted (memory kernel) form of the Pauli master equation.

With kernels ``k_a(t)`` the spectral coefficients obey the Volterra equation
``dlambda_b/dt = int_0^t k_b(t - s) lambda_b(s) ds`` with
``k_b = sum_c H_bc k_c`` and ``k_0 = -sum_{a != 0} k_a``. That choice gives
``k_b = sum_{c != 0} (H_bc - 1) k_c``, so slot 0 has no kernel and
``lambda_0 = 1`` exactly. Kraus weights are ``p = H^{-1} lambda``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

import numpy as np

from . import _backend
from .errors import DimensionError
from .pauli import fast_transform, pauli

GRID_RTOL = 1e-9
SUM_TOL = 1e-8
NEG_TOL = 1e-8

KernelFn = Callable[[np.ndarray], np.ndarray]


def constant_kernel(c: float) -> KernelFn:
    return lambda t: np.full(np.shape(t), float(c))


def exponential_kernel(amp: float, decay: float) -> KernelFn:
    """amp * exp(-decay t)."""
    return lambda t: amp * np.exp(-decay * np.asarray(t, dtype=float))


def damped_cosine_kernel(amp: float, decay: float, freq: float) -> KernelFn:
    """amp * exp(-decay t) cos(freq t)."""
    return lambda t: amp * np.exp(-decay * np.asarray(t, dtype=float)) * np.cos(freq * np.asarray(t))


NAMED_KERNELS = {
    "constant": (constant_kernel, ("c",)),
    "exponential": (exponential_kernel, ("amp", "decay")),
    "damped-cosine": (damped_cosine_kernel, ("amp", "decay", "freq")),
}


def kernel_from_spec(spec: Mapping) -> KernelFn:
    """Build a named kernel from ``{"type": name, <params>}``."""
    kind = spec.get("type")
    if kind not in NAMED_KERNELS:
        raise ValueError(f"unknown kernel type {kind!r}; known: {sorted(NAMED_KERNELS)}")
    make, params = NAMED_KERNELS[kind]
    missing = [p for p in params if p not in spec]
    if missing:
        raise ValueError(f"kernel {kind!r} needs {missing}")
    return make(*(float(spec[p]) for p in params))


@dataclass(frozen=True)
class KernelVector:
    """Per-index kernels for a != 0; either callables or arrays sampled on the grid."""

    n: int
    kernels: Mapping  # flat index -> callable or 1-D array

    def __post_init__(self):
        clean = {}
        for key, k in self.kernels.items():
            idx = pauli(key, self.n).flat
            if idx == 0:
                raise ValueError("k_0 is derived from the other kernels; do not pass it")
            clean[idx] = k
        object.__setattr__(self, "kernels", clean)

    def _sample(self, k, grid):
        if callable(k):
            return np.broadcast_to(np.asarray(k(grid), dtype=float), grid.shape)
        arr = np.asarray(k, dtype=float)
        if arr.shape != grid.shape:
            raise DimensionError(f"sampled kernel of shape {arr.shape} on a grid of {grid.size}")
        return arr

    def index_values(self, grid) -> np.ndarray:
        """k_a on the grid, shape (4**N, T), with k_0 = -sum of the rest."""
        grid = np.asarray(grid, dtype=float)
        out = np.zeros((4 ** self.n, grid.size))
        for idx, k in self.kernels.items():
            out[idx] = self._sample(k, grid)
        out[0] = -out[1:].sum(axis=0)
        return out

    def spectral_values(self, grid) -> np.ndarray:
        """k_b = sum_c H_bc k_c, shape (4**N, T)."""
        return fast_transform(self.index_values(grid).T).T


@dataclass
class LambdaSolution:
    times: np.ndarray
    lam: np.ndarray    # (4**N, T)

    def probabilities(self) -> np.ndarray:
        return fast_transform(self.lam.T, inverse=True)


def uniform_step(grid) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid needs at least two points")
    if grid[0] != 0.0:
        raise ValueError("grid must start at t = 0")
    steps = np.diff(grid)
    dt = (grid[-1] - grid[0]) / (grid.size - 1)
    if dt <= 0 or np.max(np.abs(steps - dt)) > GRID_RTOL * dt:
        raise ValueError("Volterra solver needs a uniform grid")
    return float(dt)


def solve_lambda(k, grid) -> LambdaSolution:
    """Solve each spectral Volterra equation on a uniform grid starting at 0.

    ``k`` is an array of spectral kernel samples (B, T) or (T,), a callable,
    or a :class:`KernelVector`. Identical rows are solved once.
    """
    grid = np.asarray(grid, dtype=float)
    dt = uniform_step(grid)
    if isinstance(k, KernelVector):
        kvals = k.spectral_values(grid)
    elif callable(k):
        kvals = np.atleast_2d(np.asarray(k(grid), dtype=float))
    else:
        kvals = np.atleast_2d(np.asarray(k, dtype=float))
    if kvals.shape[-1] != grid.size:
        raise DimensionError("kernel samples do not match the grid")
    uniq, inverse = np.unique(kvals, axis=0, return_inverse=True)
    lam = _backend.volterra_heun(np.ascontiguousarray(uniq), dt)
    return LambdaSolution(grid, np.asarray(lam)[inverse.ravel()])


@dataclass
class KernelProbabilities:
    times: np.ndarray
    p: np.ndarray              # (T, 4**N)
    cp_violation: bool
    worst_value: float
    worst_index: Optional[int]
    worst_time: Optional[float]


def probabilities_from_kernels(k: KernelVector, grid) -> KernelProbabilities:
    """Kraus weights from kernels; negative weights are flagged, never clipped."""
    sol = solve_lambda(k, grid)
    lam0 = sol.lam[0]
    if np.max(np.abs(lam0 - 1.0)) > SUM_TOL:
        raise AssertionError("lambda_0 drifted from 1; kernel sum rule broken")
    p = sol.probabilities()
    if np.max(np.abs(p.sum(axis=1) - 1.0)) > SUM_TOL:
        raise AssertionError("Kraus weights do not sum to 1")
    i, a = np.unravel_index(np.argmin(p), p.shape)
    worst = float(p[i, a])
    bad = worst < -NEG_TOL
    return KernelProbabilities(sol.times, p, bad, worst,
                               int(a) if bad else None, float(sol.times[i]) if bad else None)


def kernel_from_lambda_laplace(num, den):
    """Laplace-domain kernel k(z) = (z lam(z) - 1)/lam(z) for rational lam = num/den.

    Polynomials use numpy's highest-power-first coefficient order; returns the
    (numerator, denominator) of k(z). Analytic helper only.
    """
    num = np.poly1d(num)
    den = np.poly1d(den)
    return (np.poly1d([1, 0]) * num - den), num
