"""Exact solution map of the Pauli-channel master equation.

Everything here works on the spectral side: rates are sent to damping-basis
eigenvalues by the Hadamard transform, integrated in time, exponentiated, and
sent back to Kraus weights. Vectors are plain ``numpy`` arrays of length
``4**N`` indexed by the little-endian flat Pauli index; slot 0 of a rate
vector always holds ``-sum`` of the others.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    CapacityError,
    DimensionError,
    InconsistentSpectrumError,
    IntegrationError,
    LogDomainError,
)
from .pauli import DENSE_LIMIT, PauliIndex, fast_transform, num_qubits, pauli, sandwich

CP_TOL = 1e-12
POS_TOL = 1e-14
QUAD_TOL = 1e-10


# -- rate and probability vectors -------------------------------------------

def complete_rates(g) -> np.ndarray:
    """Copy of ``g`` with the identity slot set to ``-sum(g[1:])``."""
    g = np.array(g, dtype=float)
    num_qubits(g.shape[-1])
    g[..., 0] = -g[..., 1:].sum(axis=-1)
    return g


def eigenvalues_from_rates(g) -> np.ndarray:
    """Damping-basis eigenvalues mu^a = sum_b H_ab gamma^b."""
    return fast_transform(complete_rates(g))


def rates_from_eigenvalues(mu, tol: float = 1e-10) -> np.ndarray:
    """Inverse of :func:`eigenvalues_from_rates`."""
    mu = np.asarray(mu, dtype=float)
    scale = max(1.0, float(np.max(np.abs(mu))))
    if np.any(np.abs(mu[..., 0]) > tol * scale):
        raise InconsistentSpectrumError(
            f"identity eigenvalue must vanish, got {mu[..., 0]!r}")
    return fast_transform(mu, inverse=True)


def point_mass(n: int) -> np.ndarray:
    p = np.zeros(4 ** n)
    p[0] = 1.0
    return p


# -- time profiles ----------------------------------------------------------

def adaptive_simpson(f, a: float, b: float, tol: float = QUAD_TOL,
                     max_depth: int = 50, labels: Optional[Sequence[int]] = None):
    """Vector-valued adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    Raises :class:`IntegrationError` naming the component (via ``labels``)
    with the largest error estimate when ``max_depth`` is exhausted.
    """
    fa, fb = np.asarray(f(a), dtype=float), np.asarray(f(b), dtype=float)
    m = 0.5 * (a + b)
    fm = np.asarray(f(m), dtype=float)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = np.asarray(f(lm), dtype=float), np.asarray(f(rm), dtype=float)
        left = (m - a) / 6.0 * (fa + 4 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4 * frm + fb)
        delta = left + right - whole
        err = np.abs(delta)
        if not np.all(np.isfinite(delta)) or (depth >= max_depth and np.any(err > 15 * tol)):
            worst = int(np.nanargmax(np.where(np.isfinite(err), err, np.inf)))
            index = labels[worst] if labels is not None else worst
            raise IntegrationError(
                f"adaptive Simpson did not converge on [{a:g}, {b:g}]", index=index)
        if np.all(err <= 15 * tol):
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth + 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth + 1))

    if a == b:
        return np.zeros_like(whole)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


@dataclass(frozen=True)
class RateTerm:
    """Time profile of one rate: ``rate(t)`` and optionally its integral from 0.

    Integrals may be complex-valued; branches of ``log`` encode sign changes of
    the spectral factors across rate poles (see the trigonometric preset).
    """

    rate: Callable
    integral: Optional[Callable] = None

    @classmethod
    def constant(cls, value: float) -> "RateTerm":
        value = float(value)
        return cls(lambda t: np.full(np.shape(t), value) if np.ndim(t) else value,
                   lambda t: value * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class RateProfile:
    """Sparse time-dependent rate vector ``{flat index -> RateTerm}``.

    Index 0 is never stored; it is derived.
    """

    n: int
    terms: Mapping[int, RateTerm] = field(default_factory=dict)

    def __post_init__(self):
        for key in self.terms:
            if not 0 < key < 4 ** self.n:
                raise DimensionError(f"rate index {key} invalid for N={self.n}")

    @classmethod
    def constant(cls, g) -> "RateProfile":
        g = np.asarray(g, dtype=float)
        n = num_qubits(g.size)
        return cls(n, {i: RateTerm.constant(g[i]) for i in range(1, g.size) if g[i] != 0.0})

    @classmethod
    def from_labels(cls, n: int, terms: Mapping) -> "RateProfile":
        """Build from ``{"301": RateTerm or float, ...}``."""
        out = {}
        for key, term in terms.items():
            idx = pauli(key, n).flat
            if not isinstance(term, RateTerm):
                term = RateTerm.constant(term)
            out[idx] = _add_terms(out[idx], term) if idx in out else term
        return cls(n, out)

    @property
    def size(self) -> int:
        return 4 ** self.n

    @property
    def support(self) -> list:
        return sorted(self.terms)

    def rates(self, t) -> np.ndarray:
        """Rate vector(s) at time(s) ``t``; shape ``(..., 4**N)``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.size,))
        for idx, term in self.terms.items():
            out[..., idx] = term.rate(t)
        out[..., 0] = -out[..., 1:].sum(axis=-1)
        return out

    def integrals(self, t) -> np.ndarray:
        """``int_0^t gamma^a`` for every slot; complex when a term says so."""
        t = np.asarray(t, dtype=float)
        values = {}
        numeric = [idx for idx, term in self.terms.items() if term.integral is None]
        for idx, term in self.terms.items():
            if term.integral is not None:
                values[idx] = np.asarray(term.integral(t))
        if numeric:
            def integrand(s):
                return np.array([self.terms[i].rate(s) for i in numeric], dtype=float)
            quad = np.array([adaptive_simpson(integrand, 0.0, float(ti), labels=numeric)
                             for ti in t.ravel()])
            quad = quad.reshape(t.shape + (len(numeric),))
            for k, idx in enumerate(numeric):
                values[idx] = quad[..., k]
        dtype = complex if any(np.iscomplexobj(v) for v in values.values()) else float
        out = np.zeros(t.shape + (self.size,), dtype=dtype)
        for idx, v in values.items():
            out[..., idx] = v
        out[..., 0] = -out[..., 1:].sum(axis=-1)
        return out

    def __add__(self, other: "RateProfile") -> "RateProfile":
        if not isinstance(other, RateProfile):
            return NotImplemented
        if other.n != self.n:
            raise DimensionError(f"cannot add rates on {self.n} and {other.n} qubits")
        merged = dict(self.terms)
        for idx, term in other.terms.items():
            merged[idx] = _add_terms(merged[idx], term) if idx in merged else term
        return RateProfile(self.n, merged)

    def marginal(self, keep: Sequence[int]) -> "RateProfile":
        keep = _check_keep(keep, self.n)
        grouped: dict = {}
        for idx, term in self.terms.items():
            digits = PauliIndex.from_flat(idx, self.n).digits
            sub = PauliIndex(tuple(digits[q] for q in keep)).flat
            if sub == 0:
                continue
            grouped[sub] = _add_terms(grouped[sub], term) if sub in grouped else term
        return RateProfile(len(keep), grouped)


def _add_terms(a: RateTerm, b: RateTerm) -> RateTerm:
    integral = None
    if a.integral is not None and b.integral is not None:
        integral = lambda t, fa=a.integral, fb=b.integral: fa(t) + fb(t)  # noqa: E731
    return RateTerm(lambda t, ra=a.rate, rb=b.rate: ra(t) + rb(t), integral)


@dataclass(frozen=True)
class ProbabilityProfile:
    """Kraus weights as a function of time, with an optional exact derivative."""

    n: int
    p: Callable
    dp: Optional[Callable] = None

    def __call__(self, t):
        return np.asarray(self.p(t), dtype=float)


def _as_rate_profile(g) -> RateProfile:
    if isinstance(g, RateProfile):
        return g
    return RateProfile.constant(g)


# -- the solution map -------------------------------------------------------

def spectral_factors(g, t) -> np.ndarray:
    """``exp(int_0^t mu^b)`` for every b; real even across rate poles."""
    Lam = _as_rate_profile(g).integrals(t)
    mu_int = fast_transform(Lam)
    lam = np.exp(mu_int)
    if np.iscomplexobj(lam):
        lam = lam.real
    return lam


def probabilities_from_rates(g, t) -> np.ndarray:
    """Kraus weights p_t^a = 4^-N sum_b H_ab exp(sum_c H_bc int_0^t gamma^c)."""
    return fast_transform(spectral_factors(g, t), inverse=True)


def markov_equivalent(g, t: float) -> np.ndarray:
    """Constant rates whose semigroup reproduces the map of ``g`` at time ``t``."""
    if t <= 0:
        raise ValueError("need t > 0")
    Lam = _as_rate_profile(g).integrals(t)
    if np.iscomplexobj(Lam):
        raise LogDomainError("map at this time has a negative spectral factor", t=t)
    return fast_transform(fast_transform(Lam) / t, inverse=True)


def rates_from_probabilities(p, t: float, pos_tol: float = POS_TOL,
                             h_fd: Optional[float] = None) -> np.ndarray:
    """Canonical rates gamma^a = 4^-N sum_b H_ab d/dt ln(sum_c H_bc p^c).

    ``p`` is a :class:`ProbabilityProfile` or any callable ``t -> p_t``. The
    exact derivative is used when the profile provides one, otherwise a
    central difference with step ``1e-5 * max(t, 1)``.
    """
    t = float(t)
    func = p if callable(p) else None
    if func is None:
        raise TypeError("rates_from_probabilities needs a time profile")
    pt = np.asarray(func(t), dtype=float)
    h = fast_transform(pt)
    bad = np.flatnonzero(h <= pos_tol)
    if bad.size:
        b = int(bad[np.argmin(h[bad])])
        raise LogDomainError(
            f"h_t^b = {h[b]:.3e} <= {pos_tol:g} for b={b} at t={t:g}: canonical rate diverges",
            index=b, value=float(h[b]), t=t)
    dp = getattr(func, "dp", None)
    if dp is not None:
        dpt = np.asarray(dp(t), dtype=float)
    else:
        step = 1e-5 * max(t, 1.0) if h_fd is None else h_fd
        if t - step >= 0:
            dpt = (np.asarray(func(t + step)) - np.asarray(func(t - step))) / (2 * step)
        else:
            f1, f2 = np.asarray(func(t + step)), np.asarray(func(t + 2 * step))
            dpt = (-3 * pt + 4 * f1 - f2) / (2 * step)
    dh = fast_transform(dpt)
    return fast_transform(dh / h, inverse=True)


def apply_kraus(p, rho0, dense_limit: int = DENSE_LIMIT, skip_tol: float = 0.0) -> np.ndarray:
    """rho_t = sum_a p^a S_a rho0 S_a."""
    p = np.asarray(p, dtype=float)
    rho0 = np.asarray(rho0, dtype=complex)
    n = num_qubits(p.size)
    if n > dense_limit:
        raise CapacityError(f"N={n} exceeds the dense limit {dense_limit}")
    if rho0.shape != (2 ** n, 2 ** n):
        raise DimensionError(f"state shape {rho0.shape} does not match N={n}")
    out = np.zeros_like(rho0)
    for idx in np.flatnonzero(np.abs(p) > skip_tol):
        out += p[idx] * sandwich(PauliIndex.from_flat(int(idx), n), rho0)
    return out


# -- complete positivity ----------------------------------------------------

@dataclass
class CpCertificate:
    """Grid-sampled certificate that every Kraus weight stays in [0, 1]."""

    verdict: str
    worst_index: str
    worst_value: float
    worst_time: float
    times_checked: dict
    sufficient_condition: bool
    cp_tol: float = CP_TOL

    @property
    def is_cp(self) -> bool:
        return self.verdict == "CP"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "worst_index": self.worst_index,
            "worst_value": self.worst_value,
            "worst_time": self.worst_time,
            "times_checked": self.times_checked,
            "sufficient_condition": self.sufficient_condition,
            "cp_tol": self.cp_tol,
        }


def certify_cp(g, grid, cp_tol: float = CP_TOL) -> CpCertificate:
    """Evaluate p_t on ``grid`` and check ``-cp_tol <= p <= 1 + cp_tol``.

    Also reports whether the sufficient condition ``int_0^t gamma^a >= 0`` for
    all a != 0 holds at every grid time. This is a sampling certificate,
    not a proof between grid points.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing and start at 0")
    profile = _as_rate_profile(g)
    n = profile.n
    P = probabilities_from_rates(profile, grid)
    Lam = profile.integrals(grid)
    sufficient = bool(not np.any(np.imag(Lam))
                      and np.all(np.real(Lam[:, 1:]) >= -cp_tol))

    return certify_probabilities(P, grid, n, cp_tol, sufficient)


def certify_probabilities(P, grid, n: int, cp_tol: float = CP_TOL,
                          sufficient: Optional[bool] = None) -> CpCertificate:
    """Certificate from sampled Kraus weights ``P`` of shape (T, 4**N)."""
    P = np.asarray(P, dtype=float)
    grid = np.asarray(grid, dtype=float)
    # normalized weights above 1 force a negative one; report the most negative
    ti, ai = np.unravel_index(np.argmin(P), P.shape)
    violated = bool(P[ti, ai] < -cp_tol or P.max() > 1.0 + cp_tol)
    return CpCertificate(
        verdict="violated" if violated else "CP",
        worst_index=PauliIndex.from_flat(int(ai), n).label,
        worst_value=float(P[ti, ai]),
        worst_time=float(grid[ti]),
        times_checked={"t_min": float(grid[0]), "t_max": float(grid[-1]), "points": int(grid.size)},
        sufficient_condition=sufficient,
        cp_tol=cp_tol,
    )


# -- subsystems and composition ---------------------------------------------

def _check_keep(keep, n):
    keep = sorted(set(int(q) for q in keep))
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep must be a nonempty subset of 0..{n - 1}, got {keep}")
    return keep


def marginal_rates(g, keep: Sequence[int]):
    """Subsystem rates gamma^{a_s} = sum over environment digits.

    Accepts a rate vector (any leading batch axes) or a :class:`RateProfile`.
    ``keep`` lists qubits; the result orders them ascending.
    """
    if isinstance(g, RateProfile):
        return g.marginal(keep)
    g = complete_rates(g)
    n = num_qubits(g.shape[-1])
    keep = _check_keep(keep, n)
    batch = g.shape[:-1]
    # C-order reshape: axis j <-> digit N-1-j
    t = g.reshape(batch + (4,) * n)
    drop = tuple(len(batch) + (n - 1 - q) for q in range(n) if q not in keep)
    red = t.sum(axis=drop) if drop else t
    return complete_rates(red.reshape(batch + (4 ** len(keep),)))


def add_rates(g1, g2):
    """Index-wise sum; the induced map is the composition of both maps."""
    if isinstance(g1, RateProfile) or isinstance(g2, RateProfile):
        return _as_rate_profile(g1) + _as_rate_profile(g2)
    g1, g2 = np.asarray(g1, dtype=float), np.asarray(g2, dtype=float)
    if g1.shape != g2.shape:
        raise DimensionError(f"shapes {g1.shape} and {g2.shape} differ")
    return complete_rates(g1 + g2)


def partial_trace(rho, keep: Sequence[int], n: int) -> np.ndarray:
    """Reduced state on ``keep`` (ascending), qubit 0 the leftmost factor."""
    keep = _check_keep(keep, n)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = [rows[q] if q not in keep else letters[n + q] for q in range(n)]
    out = [rows[q] for q in keep] + [cols[q] for q in keep]
    spec = "".join(rows) + "".join(cols) + "->" + "".join(out)
    m = len(keep)
    red = np.einsum(spec, np.asarray(rho).reshape((2,) * (2 * n)))
    return red.reshape(2 ** m, 2 ** m)
