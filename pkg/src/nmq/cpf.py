"""Conditional past-future correlation from three projective measurements.

A measurement of ``x`` at time 0, ``y`` after an interval ``t`` and ``z``
after a further ``tau``. For a hidden model the joint probability is

    P(z, y, x) = sum_{alpha, beta} Tr[Pi_z S_alpha Pi_y S_beta Pi_x rho0 Pi_x
                 S_beta Pi_y S_alpha] (1| F_alpha(tau) F_beta(t) |q0),

with projectors onto (possibly degenerate) eigenspaces. The correlation is
``sum_{z,x} z x [P(z,x|y) - P(z|y) P(x|y)]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConditioningError, DimensionError
from .incoherent import HiddenModel, PropagatorFamily, propagators
from .pauli import PauliIndex, hadamard_element, pauli, string_matrix

HERMITIAN_TOL = 1e-12
EIG_GROUP_TOL = 1e-9
NULL_EVENT = 1e-14


@dataclass(frozen=True)
class Observable:
    """A Hermitian observable split into eigenvalues and eigenprojectors."""

    matrix: np.ndarray
    values: tuple
    projectors: tuple
    string: Optional[PauliIndex] = None

    @classmethod
    def from_pauli(cls, a, n: Optional[int] = None) -> "Observable":
        a = pauli(a, n)
        if a.weight == 0:
            raise ValueError("the identity string is not a measurable observable")
        S = string_matrix(a)
        eye = np.eye(S.shape[0])
        return cls(np.array(S), (1.0, -1.0), ((eye + S) / 2, (eye - S) / 2), a)

    @classmethod
    def from_matrix(cls, m) -> "Observable":
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("observable must be a square matrix")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("observable is not Hermitian")
        w, v = np.linalg.eigh(m)
        values, projs = [], []
        start = 0
        for k in range(1, len(w) + 1):
            if k == len(w) or w[k] - w[start] > EIG_GROUP_TOL:
                vecs = v[:, start:k]
                values.append(float(np.mean(w[start:k])))
                projs.append(vecs @ vecs.conj().T)
                start = k
        return cls(m, tuple(values), tuple(projs))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def projector(self, value: float) -> np.ndarray:
        for v, p in zip(self.values, self.projectors):
            if abs(v - value) <= EIG_GROUP_TOL:
                return p
        raise ValueError(f"{value} is not an eigenvalue ({self.values})")


def as_observable(obs, n: Optional[int] = None) -> Observable:
    if isinstance(obs, Observable):
        return obs
    if isinstance(obs, np.ndarray) and obs.ndim == 2:
        return Observable.from_matrix(obs)
    return Observable.from_pauli(obs, n)


@dataclass(frozen=True)
class MeasurementTriple:
    x: Observable
    y: Observable
    z: Observable
    t: float
    tau: float
    rho0: np.ndarray
    y_value: float = 1.0

    def __post_init__(self):
        if self.t < 0 or self.tau < 0:
            raise ValueError("time intervals must be nonnegative")
        dims = {self.x.dim, self.y.dim, self.z.dim, self.rho0.shape[0]}
        if len(dims) != 1:
            raise DimensionError("observables and state act on different spaces")
        self.y.projector(self.y_value)

    @classmethod
    def pauli(cls, x, y, z, t, tau, rho0, y_value=1.0) -> "MeasurementTriple":
        rho0 = np.asarray(rho0, dtype=complex)
        n = int(np.log2(rho0.shape[0]))
        return cls(as_observable(x, n), as_observable(y, n), as_observable(z, n),
                   float(t), float(tau), rho0, float(y_value))

    @property
    def mean_x(self) -> float:
        return float(sum(v * np.real(np.trace(p @ self.rho0))
                         for v, p in zip(self.x.values, self.x.projectors)))


@dataclass(frozen=True)
class CpfResult:
    value: float
    P_y: float
    mean_x: float
    extras: dict = field(default_factory=dict)


def _propagator_pair(model: HiddenModel, t: float, tau: float):
    grid = sorted({float(t), float(tau)})
    fam = propagators(model, grid)
    return fam, fam.at(t), fam.at(tau)


def _chain_weights(model, triple, fam=None):
    """Matrices over strings: F2[alpha, beta] and f[beta] = (1|F_beta(t)|q0)."""
    if fam is None:
        fam, Ft, Ftau = _propagator_pair(model, triple.t, triple.tau)
    else:
        Ft, Ftau = fam.at(triple.t), fam.at(triple.tau)
    q0 = np.asarray(model.q0)
    Fq = Ft @ q0                                   # (K, M): F_beta(t) q0
    f = Fq.sum(axis=1)
    F2 = np.einsum("aij,bj->ab", Ftau, Fq)         # (1|F_alpha(tau) F_beta(t)|q0)
    tau_sum = Ftau.sum(axis=1)                     # (K, M): (1|F_alpha(tau)
    return fam, F2, f, tau_sum, Fq


def _sandwiches(strings, X):
    mats = [string_matrix(s) for s in strings]
    return np.array([S @ X @ S for S in mats])


def _tr(A, B):
    """Tr[A_i B_j] for stacks A (I, d, d) and B (J, d, d)."""
    return np.einsum("ixy,jyx->ij", A, B)


def joint_probability_table(model: HiddenModel, triple: MeasurementTriple,
                            fam: Optional[PropagatorFamily] = None) -> dict:
    """P(z, y, x) for every outcome triple, keyed by (z, y, x)."""
    fam, F2, _, _, _ = _chain_weights(model, triple, fam)
    Py = triple.y.projectors
    out = {}
    for x, Px in zip(triple.x.values, triple.x.projectors):
        rx = Px @ triple.rho0 @ Px
        beta_side = _sandwiches(fam.strings, rx)
        for y, Pyy in zip(triple.y.values, Py):
            A = np.einsum("xy,byz,zw->bxw", Pyy, beta_side, Pyy)
            for z, Pz in zip(triple.z.values, triple.z.projectors):
                Z = _sandwiches(fam.strings, Pz)
                out[(z, y, x)] = float(np.real(np.sum(_tr(Z, A) * F2)))
    return out


def joint_probability(model: HiddenModel, triple: MeasurementTriple, z, y, x) -> float:
    return joint_probability_table(model, triple)[(float(z), float(y), float(x))]


def cpf_bayes(model: HiddenModel, triple: MeasurementTriple,
              fam: Optional[PropagatorFamily] = None) -> CpfResult:
    """Correlation assembled directly from the joint probabilities."""
    table = joint_probability_table(model, triple, fam)
    y = triple.y_value
    rows = {k: v for k, v in table.items() if abs(k[1] - y) <= EIG_GROUP_TOL}
    Py = sum(rows.values())
    if Py < NULL_EVENT:
        raise ConditioningError(f"P(y={y}) = {Py:.3e}: conditioning on a null event")
    zx = sum(z * x * p for (z, _, x), p in rows.items()) / Py
    mz = sum(z * p for (z, _, _), p in rows.items()) / Py
    mx = sum(x * p for (_, _, x), p in rows.items()) / Py
    return CpfResult(float(zx - mz * mx), float(Py), triple.mean_x)


def cpf_general(model: HiddenModel, triple: MeasurementTriple,
                fam: Optional[PropagatorFamily] = None) -> CpfResult:
    """Theta/Lambda form for arbitrary observables.

    With rho_x = sum_x Pi_x rho0 Pi_x, X = sum_x x Pi_x rho0 Pi_x and Z the
    z observable,
      C P(y)^2 = sum_{alpha beta gamma} Theta1 F2(alpha,beta) f_gamma
                                     - Theta2 F2(alpha,gamma) f_beta
    where Theta1 = Tr[S_a Z S_a Pi_y S_b X S_b Pi_y] Tr[Pi_y S_g rho_x S_g]
    and   Theta2 = Tr[S_a Z S_a Pi_y S_g rho_x S_g Pi_y] Tr[Pi_y S_b X S_b].
    """
    fam, F2, f, _, _ = _chain_weights(model, triple, fam)
    strings = fam.strings
    Pi = triple.y.projector(triple.y_value)
    rho_x = sum(P @ triple.rho0 @ P for P in triple.x.projectors)
    X = sum(v * P @ triple.rho0 @ P for v, P in zip(triple.x.values, triple.x.projectors))
    Zs = _sandwiches(strings, triple.z.matrix)
    Xs = _sandwiches(strings, X)
    Rs = _sandwiches(strings, rho_x)
    y_rho = np.real(np.einsum("xy,gyx->g", Pi, Rs))            # Tr[Pi_y S_g rho_x S_g]
    y_X = np.real(np.einsum("xy,byx->b", Pi, Xs))              # Tr[Pi_y S_b X S_b]
    Py = float(y_rho @ f)
    if Py < NULL_EVENT:
        raise ConditioningError(f"P(y={triple.y_value}) = {Py:.3e}: conditioning on a null event")
    inner_X = np.einsum("xy,byz,zw->bxw", Pi, Xs, Pi)
    inner_R = np.einsum("xy,gyz,zw->gxw", Pi, Rs, Pi)
    lam1 = np.real(_tr(Zs, inner_X))                          # (alpha, beta)
    lam2 = np.real(_tr(Zs, inner_R))                          # (alpha, gamma)
    term1 = np.sum(lam1 * F2) * Py
    term2 = np.sum(lam2 * F2) * (y_X @ f)
    return CpfResult(float((term1 - term2) / Py ** 2), Py, triple.mean_x)


def cpf_pauli(model: HiddenModel, triple: MeasurementTriple,
              fam: Optional[PropagatorFamily] = None) -> CpfResult:
    """Single-string observables: zero unless all three strings coincide.

    For a common string m, with u = <x> and
    B = 1 + y u sum_b H_mb (1|F_b(t)|q0),
      C = (1 - u^2)/B^2 sum_{a,b} H_ma H_mb [(1|F_a(tau) F_b(t)|q0)
                                          - (1|F_a(tau)|q_t)(1|F_b(t)|q0)].
    The reported P_y is the projector probability B/2; the rank-1 value
    B/2^N differs by a factor 2^(N-1) that cancels inside C.
    """
    strings_in = [o.string for o in (triple.x, triple.y, triple.z)]
    if any(s is None for s in strings_in):
        raise TypeError("cpf_pauli needs single Pauli-string observables")
    u = triple.mean_x
    y = triple.y_value
    xs, ys, zs = strings_in
    if not (xs == ys == zs):
        Pi = triple.y.projector(y)
        fam, _, f, _, _ = _chain_weights(model, triple, fam)
        rho_x = sum(P @ triple.rho0 @ P for P in triple.x.projectors)
        Py = float(sum(fb * np.real(np.trace(Pi @ S @ rho_x @ S))
                       for fb, S in zip(f, (string_matrix(s) for s in fam.strings))))
        if Py < NULL_EVENT:
            raise ConditioningError(f"P(y={y}) = {Py:.3e}: conditioning on a null event")
        return CpfResult(0.0, Py, u)
    fam, F2, f, tau_sum, Fq = _chain_weights(model, triple, fam)
    m = ys
    h = np.array([hadamard_element(m, s) for s in fam.strings])
    qt = Fq.sum(axis=0)                                   # |q_t)
    g_tau = tau_sum @ qt                                  # (1|F_a(tau)|q_t)
    B = 1.0 + y * u * float(h @ f)
    Py = 0.5 * B
    if Py < NULL_EVENT:
        raise ConditioningError(f"P(y={y}) = {Py:.3e}: conditioning on a null event")
    s = h @ F2 @ h - (h @ g_tau) * (h @ f)
    return CpfResult(float((1.0 - u * u) / B ** 2 * s), Py, u,
                     {"P_y_rank1": B / 2 ** m.n})


def closed_form_trig(direction: str, gamma: float, phi: float, t, tau,
                     mean_x: float = 0.0, p_y: Optional[float] = None, n: int = 1):
    """Trigonometric-model correlation for measurements along a (or b) or c.

    ``p_y`` follows the rank-1 convention, P(y) = B / 2**N; it defaults to
    2**-N, which is exact when <x> = 0.
    """
    if p_y is None:
        if mean_x != 0:
            raise ValueError("pass p_y when <x> != 0")
        p_y = 2.0 ** -n
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    pref = (1 - mean_x ** 2) / (2 ** n * p_y) ** 2
    s = gamma + phi
    if direction in ("ab", "a", "b"):
        ups = np.sqrt(complex(phi * phi - 6 * phi * gamma + gamma * gamma))
        if abs(ups) < 1e-12:
            ratio = (t / 2) * (tau / 2)
        else:
            ratio = np.sinh(ups * t / 2) * np.sinh(ups * tau / 2) / ups ** 2
        val = -pref * np.exp(-(t + tau) * s / 2) * 16 * gamma ** 2 * phi ** 2 / s ** 2 * ratio
        return np.real(val)
    if direction == "c":
        return (pref * 4 * gamma * phi * (gamma - phi) ** 2 / s ** 4
                * (1 - np.exp(-tau * s)) * (1 - np.exp(-t * s)))
    raise ValueError(f"direction must be 'ab' or 'c', got {direction!r}")


def classify_bipartite_observables(a, b, probe) -> str:
    """'zero', 'ab-form' or 'c-form' from the signs of H(probe, a), H(probe, b)."""
    sa = hadamard_element(probe, a)
    sb = hadamard_element(probe, b)
    if sa > 0 and sb > 0:
        return "zero"
    if sa < 0 and sb < 0:
        return "c-form"
    return "ab-form"
