"""Dense brute-force references.

Slow on purpose. Nothing here goes through the Hadamard transform or the
hidden-state pair space; only the dense Pauli matrices are shared.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .cpf import CpfResult, MeasurementTriple, NULL_EVENT, EIG_GROUP_TOL
from .errors import CapacityError, ConditioningError, IntegrationError
from .incoherent import HiddenModel
from .pauli import PauliIndex, string_matrix

TRACE_DRIFT = 1e-6
MASTER_LIMIT = 3
EXTENDED_LIMIT = 2
HIDDEN_LIMIT = 8


def _superop(S: np.ndarray) -> np.ndarray:
    """Row-major vectorization of rho -> S rho S for Hermitian S."""
    return np.kron(S, S.conj())


def _rate_function(g) -> Callable:
    if hasattr(g, "rates"):
        return g.rates
    if callable(g):
        return g
    arr = np.asarray(g, dtype=float)
    return lambda t: np.broadcast_to(arr, np.shape(t) + arr.shape)


def evolve_master_rk4(g, rho0, grid, dt: float = 1e-4) -> np.ndarray:
    """RK4 on d rho/dt = sum_a gamma_a(t) (S_a rho S_a - rho).

    ``g`` is a RateProfile, a callable ``t -> (..., 4**N)``, or a constant
    vector. Returns the states at ``grid`` (which must be nondecreasing and
    start at or after 0).
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    n = int(round(np.log2(d)))
    if n > MASTER_LIMIT:
        raise CapacityError(f"dense oracle limited to N <= {MASTER_LIMIT}")
    rates = _rate_function(g)
    grid = np.asarray(grid, dtype=float)
    probe = np.asarray(rates(np.array([0.0, grid[-1]])), dtype=float)
    active = np.flatnonzero(np.any(probe != 0, axis=0))
    # time-dependent profiles may vanish at the probe times; keep every declared slot
    if hasattr(g, "support"):
        active = np.array(sorted(set(active) | set(g.support)), dtype=int)
    active = active[active > 0]
    eye = np.eye(d * d)
    D = np.array([_superop(string_matrix(PauliIndex.from_flat(int(a), n))) - eye for a in active])
    Dflat = D.reshape(len(active) * d * d, d * d)

    def deriv(v, gam):
        return gam @ (Dflat @ v).reshape(len(active), d * d)

    v = rho0.reshape(-1).copy()
    out = np.empty((grid.size, d, d), dtype=complex)
    t_now = 0.0
    for i, t_target in enumerate(grid):
        span = t_target - t_now
        if span < -1e-15:
            raise ValueError("grid must be nondecreasing and >= 0")
        steps = int(np.ceil(span / dt - 1e-9)) if span > 0 else 0
        if steps:
            h = span / steps
            ts = t_now + 0.5 * h * np.arange(2 * steps + 1)
            gam_all = np.asarray(rates(ts), dtype=float)[:, active]
            for s in range(steps):
                g0, gm, g1 = gam_all[2 * s], gam_all[2 * s + 1], gam_all[2 * s + 2]
                k1 = deriv(v, g0)
                k2 = deriv(v + 0.5 * h * k1, gm)
                k3 = deriv(v + 0.5 * h * k2, gm)
                k4 = deriv(v + h * k3, g1)
                v = v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            drift = abs(np.trace(v.reshape(d, d)) - np.trace(rho0))
            if not drift <= TRACE_DRIFT:   # also catches nan
                raise IntegrationError(f"trace drifted by {drift:.2e}", i)
        t_now = t_target
        out[i] = v.reshape(d, d)
    return out


def apply_kraus_dense(p, rho0) -> np.ndarray:
    """sum_a p_a S_a rho0 S_a with explicit matrices."""
    rho0 = np.asarray(rho0, dtype=complex)
    n = int(round(np.log2(rho0.shape[0])))
    out = np.zeros_like(rho0)
    for a, w in enumerate(np.asarray(p)):
        if w != 0:
            S = string_matrix(PauliIndex.from_flat(a, n))
            out += w * (S @ rho0 @ S)
    return out


@dataclass
class ExtendedState:
    """Unnormalized conditional states, one per hidden label."""

    branches: list   # [(rho_h, label)]

    def total(self) -> np.ndarray:
        return sum(r for r, _ in self.branches)

    def weights(self) -> np.ndarray:
        return np.array([np.real(np.trace(r)) for r, _ in self.branches])

    def array(self) -> np.ndarray:
        return np.array([r for r, _ in self.branches])


def extended_generator(model: HiddenModel) -> np.ndarray:
    """Dense generator on the stacked vectorized branches."""
    n, m = model.n, model.m
    if n > EXTENDED_LIMIT or m > HIDDEN_LIMIT:
        raise CapacityError(f"extended oracle limited to N <= {EXTENDED_LIMIT}, M <= {HIDDEN_LIMIT}")
    d2 = 4 ** n
    L = np.zeros((m * d2, m * d2), dtype=complex)
    eye = np.eye(d2)
    for tr in model.transitions:
        src, dst = model.states.index(tr.source), model.states.index(tr.target)
        L[dst * d2:(dst + 1) * d2, src * d2:(src + 1) * d2] += tr.rate * _superop(string_matrix(tr.string))
        L[src * d2:(src + 1) * d2, src * d2:(src + 1) * d2] -= tr.rate * eye
    return L


def _propagate(L, stack, t, method="expm", dt=1e-3):
    v = stack.reshape(-1)
    if t == 0:
        return stack.copy()
    if method == "expm":
        return (expm(L * t) @ v).reshape(stack.shape)
    steps = int(np.ceil(t / dt))
    h = t / steps
    for _ in range(steps):
        k1 = L @ v
        k2 = L @ (v + 0.5 * h * k1)
        k3 = L @ (v + 0.5 * h * k2)
        k4 = L @ (v + h * k3)
        v = v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return v.reshape(stack.shape)


def evolve_extended(model: HiddenModel, rho0, grid, method: str = "expm",
                    dt: float = 1e-3) -> list:
    """Branch states rho^h(t) starting from q0^h rho0, at every grid time."""
    rho0 = np.asarray(rho0, dtype=complex)
    L = extended_generator(model)
    stack = np.array([q * rho0 for q in model.q0])
    out = []
    t_prev = 0.0
    for t in np.asarray(grid, dtype=float):
        stack = _propagate(L, stack, t - t_prev, method, dt)
        t_prev = t
        out.append(ExtendedState([(r, h) for r, h in zip(stack, model.states)]))
    return out


def cpf_enumeration(model: HiddenModel, triple: MeasurementTriple) -> CpfResult:
    """Walk every outcome path x -> y -> z on the extended state.

    Projectors act on each branch without renormalizing it; the path
    probability is the summed trace at the end.
    """
    L = extended_generator(model)
    rho0 = triple.rho0
    Ut = expm(L * triple.t)
    Utau = expm(L * triple.tau)
    shape = (model.m,) + rho0.shape
    joint = {}
    for x, Px in zip(triple.x.values, triple.x.projectors):
        start = np.array([q * (Px @ rho0 @ Px) for q in model.q0])
        after_t = (Ut @ start.reshape(-1)).reshape(shape)
        for y, Py in zip(triple.y.values, triple.y.projectors):
            cut = np.array([Py @ r @ Py for r in after_t])
            after_tau = (Utau @ cut.reshape(-1)).reshape(shape)
            for z, Pz in zip(triple.z.values, triple.z.projectors):
                joint[(z, y, x)] = float(np.real(sum(np.trace(Pz @ r) for r in after_tau)))
    y = triple.y_value
    rows = {k: v for k, v in joint.items() if abs(k[1] - y) <= EIG_GROUP_TOL}
    Py_val = sum(rows.values())
    if Py_val < NULL_EVENT:
        raise ConditioningError(f"P(y={y}) = {Py_val:.3e}: conditioning on a null event")
    zx = sum(z * x * p for (z, _, x), p in rows.items()) / Py_val
    mz = sum(z * p for (z, _, _), p in rows.items()) / Py_val
    mx = sum(x * p for (_, _, x), p in rows.items()) / Py_val
    return CpfResult(float(zx - mz * mx), float(Py_val), triple.mean_x, {"joint": joint})
