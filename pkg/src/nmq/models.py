"""Closed-form preset channels.

Eternal pair models act with two strings ``a``, ``b`` and their product
``c = a*b``. The hyperbolic model mixes two dephasing branches; the
trigonometric model lets two hidden branches hand weight to each other.
Further presets: the hub-and-spoke classical master equation, stochastic
Hamiltonians with white or dichotomic noise, statistical mixtures of
Markovian maps, the bipartite/tripartite two-state mixtures, and the
translation-invariant nearest-neighbour composite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .channel import (
    ProbabilityProfile,
    RateProfile,
    RateTerm,
    complete_rates,
    eigenvalues_from_rates,
)
from .errors import DomainError, PoleError, UnsupportedClosedFormError
from .incoherent import HiddenModel, Transition
from .pauli import PauliIndex, fast_transform, multiply, pauli

POLE_TOL = 1e-10
SQRT8 = np.sqrt(8.0)
DIVERGENCE_INTERVAL = (3.0 - SQRT8, 3.0 + SQRT8)


def logcosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


# -- eternal pair models ----------------------------------------------------

@dataclass(frozen=True)
class EternalPairSpec:
    """Two distinct non-identity strings and the rates gamma, phi."""

    n: int
    a: PauliIndex
    b: PauliIndex
    gamma: float
    phi: float

    def __post_init__(self):
        a, b = pauli(self.a, self.n), pauli(self.b, self.n)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.weight == 0 or b.weight == 0:
            raise ValueError("strings a and b must differ from the identity")
        if a == b:
            raise ValueError("strings a and b must differ")
        if not (self.gamma > 0 and self.phi > 0):
            raise ValueError("gamma and phi must be positive")

    @classmethod
    def default(cls, gamma=1.0, phi=None, n=1) -> "EternalPairSpec":
        """a = X...X-ish single-qubit pair on qubit 0: a=X, b=Y, c=Z."""
        a = (1,) + (0,) * (n - 1)
        b = (2,) + (0,) * (n - 1)
        return cls(n, PauliIndex(a), PauliIndex(b), gamma, gamma if phi is None else phi)

    @property
    def c(self) -> PauliIndex:
        return multiply(self.a, self.b).index

    @property
    def ratio(self) -> float:
        return self.phi / self.gamma


@dataclass(frozen=True)
class TrigDerivedParams:
    upsilon: complex
    delta_plus: float
    delta_minus: float

    @property
    def upsilon_sq(self) -> float:
        # phi^2 - 6 phi gamma + gamma^2 = dm^2 - 4 phi gamma, with 4 phi gamma = dp^2 - dm^2
        return 2.0 * self.delta_minus ** 2 - self.delta_plus ** 2


def trig_params(gamma: float, phi: float) -> TrigDerivedParams:
    ups_sq = phi * phi - 6.0 * phi * gamma + gamma * gamma
    return TrigDerivedParams(np.sqrt(complex(ups_sq)), phi + gamma, phi - gamma)


def classify_divergence(phi_over_gamma: float) -> str:
    """``"divergent"`` inside the open interval (3 - sqrt 8, 3 + sqrt 8)."""
    r = float(phi_over_gamma)
    if r <= 0:
        raise ValueError("rate ratio must be positive")
    lo, hi = DIVERGENCE_INTERVAL
    return "divergent" if lo < r < hi else "positive"


def _support(spec: EternalPairSpec, values: Mapping) -> np.ndarray:
    """Place ``{"0"|"a"|"b"|"c": array}`` on the full index space."""
    first = next(iter(values.values()))
    out = np.zeros(np.shape(first) + (4 ** spec.n,))
    slots = {"0": 0, "a": spec.a.flat, "b": spec.b.flat, "c": spec.c.flat}
    for key, v in values.items():
        out[..., slots[key]] = v
    return out


def _require_equal_rates(spec, what):
    if not np.isclose(spec.phi, spec.gamma, rtol=1e-14, atol=0):
        raise UnsupportedClosedFormError(
            f"{what} closed form needs phi == gamma; use the incoherent engine instead")


def hyperbolic_profile(spec: EternalPairSpec) -> RateProfile:
    _require_equal_rates(spec, "hyperbolic")
    g = spec.gamma
    half = RateTerm.constant(g / 2)
    neg = RateTerm(lambda t: -0.5 * g * np.tanh(g * np.asarray(t, dtype=float)),
                   lambda t: -0.5 * logcosh(g * np.asarray(t, dtype=float)))
    return RateProfile(spec.n, {spec.a.flat: half, spec.b.flat: half, spec.c.flat: neg})


def hyperbolic_rates(spec: EternalPairSpec, t) -> np.ndarray:
    """gamma^a = gamma^b = gamma/2, gamma^c = -(gamma/2) tanh(gamma t)."""
    return hyperbolic_profile(spec).rates(t)


def hyperbolic_probabilities(spec: EternalPairSpec, t) -> np.ndarray:
    _require_equal_rates(spec, "hyperbolic")
    e = np.exp(-2.0 * spec.gamma * np.asarray(t, dtype=float))
    return _support(spec, {"0": 0.5 * (1 + e), "a": 0.25 * (1 - e), "b": 0.25 * (1 - e),
                           "c": 0.0 * e})


def hyperbolic_model(spec: EternalPairSpec) -> HiddenModel:
    """Two uncoupled dephasing branches (strings a and b), half weight each."""
    return HiddenModel(
        spec.n, ("1", "2"),
        (Transition("1", "1", spec.gamma, spec.a), Transition("2", "2", spec.phi, spec.b)),
        (0.5, 0.5), name="hyperbolic")


def trigonometric_model(spec: EternalPairSpec) -> HiddenModel:
    """Branches hand weight over: 1 -> 2 applies a (rate gamma), 2 -> 1 applies b (rate phi)."""
    s = spec.gamma + spec.phi
    return HiddenModel(
        spec.n, ("1", "2"),
        (Transition("2", "1", spec.phi, spec.b), Transition("1", "2", spec.gamma, spec.a)),
        (spec.phi / s, spec.gamma / s), name="trigonometric")


def _scaled_cosh_sinh(ups_sq: float, t):
    """cosh(tY/2) and sinh(tY/2)/Y for Y**2 = ups_sq, both times exp(-t Re(Y)/2).

    Both functions are even in Y, so real and imaginary Y share one path.
    """
    t = np.asarray(t, dtype=float)
    if ups_sq >= 0:
        y = np.sqrt(ups_sq)
        decay = np.exp(-t * y)
        C = 0.5 * (1.0 + decay)
        S = np.where(y * t > 1e-8, -np.expm1(-t * y) / (2.0 * y) if y > 0 else 0.5 * t, 0.5 * t)
        return C, S, 0.5 * t * y
    w = np.sqrt(-ups_sq)
    return np.cos(0.5 * w * t), 0.5 * t * np.sinc(w * t / (2.0 * np.pi)), 0.0 * t


def trig_pole_times(spec: EternalPairSpec, t_max: float) -> np.ndarray:
    """Analytic pole locations of gamma^c in (0, t_max]; empty outside the interval."""
    g, f = spec.gamma, spec.phi
    ups_sq = f * f - 6 * f * g + g * g
    if ups_sq >= 0:
        return np.array([])
    w = np.sqrt(-ups_sq)
    dp, dm2 = f + g, (f - g) ** 2
    theta = np.arctan2(w * dp, dm2)
    k_max = int(np.floor((0.5 * w * t_max + theta) / np.pi)) + 1
    times = [2.0 * (k * np.pi - theta) / w for k in range(1, k_max + 1)]
    return np.array([x for x in times if 0 < x <= t_max])


def first_pole(spec: EternalPairSpec) -> Optional[float]:
    """Time of the first divergence of gamma^c, or None when it never diverges."""
    g, f = spec.gamma, spec.phi
    ups_sq = f * f - 6 * f * g + g * g
    if ups_sq >= 0:
        return None
    w = np.sqrt(-ups_sq)
    theta = np.arctan2(w * (f + g), (f - g) ** 2)
    return 2.0 * (np.pi - theta) / w


def _nearest_pole(spec, t):
    g, f = spec.gamma, spec.phi
    ups_sq = f * f - 6 * f * g + g * g
    if ups_sq >= 0:
        return None
    w = np.sqrt(-ups_sq)
    theta = np.arctan2(w * (f + g), (f - g) ** 2)
    k = max(1, int(round((0.5 * w * t + theta) / np.pi)))
    return 2.0 * (k * np.pi - theta) / w


def trig_rates(spec: EternalPairSpec, t, pole_tol: float = POLE_TOL) -> np.ndarray:
    """Canonical rates of the trigonometric model for any gamma, phi.

    gamma^a = gamma^b is always positive; gamma^c diverges periodically when
    phi/gamma lies in the divergence interval. Raises :class:`PoleError`
    when the normalized pole factor drops below ``pole_tol``.
    """
    g, f = spec.gamma, spec.phi
    t = np.asarray(t, dtype=float)
    dp, dm2 = f + g, (f - g) ** 2
    ups_sq = f * f - 6 * f * g + g * g
    E = np.exp(-t * dp)
    rate_ab = f * g * dp * E / (dm2 + 4 * f * g * E)

    C, S, _ = _scaled_cosh_sinh(ups_sq, t)
    pole = C * dp + S * dm2
    if ups_sq < 0:
        scale = np.sqrt(dp ** 2 + dm2 ** 2 / (-ups_sq))
    else:
        scale = np.abs(C) * dp + np.abs(S) * dm2
    hit = np.abs(pole) < pole_tol * scale
    if np.any(hit):
        where = float(np.atleast_1d(t)[np.flatnonzero(np.atleast_1d(hit))[0]])
        near = _nearest_pole(spec, where)
        raise PoleError(f"gamma^c has a pole at t={near:.12g} (evaluated at t={where:.12g})",
                        nearest_pole=near)
    num = dp * ups_sq * S * E + dm2 * (C * E - (dp * S + C))
    rate_c = -f * g * num / ((dm2 + 4 * f * g * E) * pole)
    return _support(spec, {"0": -(2 * rate_ab + rate_c), "a": rate_ab, "b": rate_ab, "c": rate_c})


def trig_rate_c_as_printed(gamma: float, phi: float, t):
    """The gamma^c closed form evaluated literally with complex Upsilon.

    Kept as an independent check of :func:`trig_rates`; it overflows for
    large ``t (phi + gamma)`` and is 0/0 on the interval boundaries.
    """
    t = np.asarray(t, dtype=float)
    Y = np.sqrt(complex(phi * phi - 6 * phi * gamma + gamma * gamma))
    dp, dm = phi + gamma, phi - gamma
    eY = np.exp(t * Y)
    ep = np.exp(t * dp)
    num = phi * gamma * (dp * Y ** 2 * (1 - eY)
                         - dm ** 2 * (Y * (1 + eY) + ep * ((dp - Y) - eY * (dp + Y))))
    den = (ep * dm ** 2 + 4 * phi * gamma) * ((1 + eY) * Y * dp - (1 - eY) * dm ** 2)
    val = num / den
    if np.any(np.abs(np.imag(val)) > 1e-10 * np.maximum(1.0, np.abs(val))):
        raise DomainError("imaginary residue above 1e-10 in printed closed form")
    return np.real(val)


def trig_profile(spec: EternalPairSpec) -> RateProfile:
    """phi == gamma: gamma/2 on a and b, (gamma/2) tan(gamma t) on c.

    The integral of tan is carried as ``-log(cos)/gamma`` on the principal
    complex branch, so spectral factors change sign through the poles.
    """
    _require_equal_rates(spec, "trigonometric")
    g = spec.gamma
    half = RateTerm.constant(g / 2)

    def rate_c(t):
        t = np.asarray(t, dtype=float)
        c = np.cos(g * t)
        if np.any(np.abs(c) < POLE_TOL):
            bad = float(np.atleast_1d(t)[np.argmin(np.abs(np.atleast_1d(c)))])
            near = (np.floor(g * bad / np.pi) + 0.5) * np.pi / g
            raise PoleError(f"tan pole at t={near:.12g}", nearest_pole=near)
        return 0.5 * g * np.tan(g * t)

    def integral_c(t):
        return -0.5 * np.log(np.cos(g * np.asarray(t, dtype=float)) + 0j)

    return RateProfile(spec.n, {spec.a.flat: half, spec.b.flat: half,
                                spec.c.flat: RateTerm(rate_c, integral_c)})


def trig_probabilities(spec: EternalPairSpec, t) -> np.ndarray:
    """phi == gamma Kraus weights on the four active strings."""
    _require_equal_rates(spec, "trigonometric")
    g = spec.gamma
    x = g * np.asarray(t, dtype=float)
    e = np.exp(-x)
    ch, cs = np.cosh(x), np.cos(x)
    ab = 0.25 * (1 - np.exp(-2 * x))
    return _support(spec, {"0": 0.5 * e * (ch + cs), "a": ab, "b": ab,
                           "c": 0.5 * e * (ch - cs)})


def trig_probability_profile(spec: EternalPairSpec) -> ProbabilityProfile:
    _require_equal_rates(spec, "trigonometric")
    g = spec.gamma

    def dp(t):
        x = g * np.asarray(t, dtype=float)
        e = np.exp(-x)
        sh, ch, sn, cs = np.sinh(x), np.cosh(x), np.sin(x), np.cos(x)
        d0 = 0.5 * g * e * (sh - sn - ch - cs)
        dab = 0.5 * g * np.exp(-2 * x)
        dc = 0.5 * g * e * (sh + sn - ch + cs)
        return _support(spec, {"0": d0, "a": dab, "b": dab, "c": dc})

    return ProbabilityProfile(spec.n, lambda t: trig_probabilities(spec, t), dp)


# -- hub-and-spoke classical master equation --------------------------------

def _tanh_shift(x, h_inf):
    """tanh(x + zeta) - 1 with zeta = atanh(2 h_inf - 1), written without zeta.

    Limits: h_inf = 1 gives 0, h_inf = 0 gives -2.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h_inf, dtype=float)
    big = np.exp(np.minimum(2.0 * x, 700.0))
    return -2.0 * (1.0 - h) / ((1.0 - h) + h * big)


def _check_h_inf(h_inf, tol=1e-12):
    if np.any(h_inf < -tol) or np.any(h_inf > 1 + tol):
        raise DomainError(f"stationary spectrum outside [0, 1]: {h_inf}")
    return np.clip(h_inf, 0.0, 1.0)


def classical_me_rates(Phi: float, p_inf, t) -> np.ndarray:
    """Canonical rates of p_t = p_inf (1 - e^{-Phi t}) + delta_0 e^{-Phi t}."""
    p_inf = np.asarray(p_inf, dtype=float)
    h_inf = _check_h_inf(fast_transform(p_inf))
    t = np.asarray(t, dtype=float)
    inner = 0.5 * Phi * _tanh_shift(0.5 * Phi * t[..., None], h_inf)
    return fast_transform(inner, inverse=True)


def classical_me_probabilities(Phi: float, p_inf, t) -> np.ndarray:
    p_inf = np.asarray(p_inf, dtype=float)
    e = np.exp(-Phi * np.asarray(t, dtype=float))[..., None]
    delta = np.zeros_like(p_inf)
    delta[0] = 1.0
    return p_inf * (1 - e) + delta * e


def hub_stationary(n: int, phi_out: float, phi_back: float, weights) -> tuple:
    """(Phi, p_inf) for hidden jumps 0 -> a at x_a phi_out and a -> 0 at phi_back."""
    x = np.asarray(weights, dtype=float)
    Phi = phi_out + phi_back
    p_inf = x * phi_out / Phi
    p_inf[0] = phi_back / Phi
    return Phi, p_inf


# -- stochastic Hamiltonians ------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    """Slow noise along a random Pauli direction chosen with weights ``x``.

    kind ``"white"`` uses ``Phi``; kind ``"dichotomic"`` uses amplitude ``A``
    and switching rate ``eta``.
    """

    n: int
    kind: str
    weights: tuple
    Phi: float = 0.0
    A: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("white", "dichotomic"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        x = np.asarray(self.weights, dtype=float)
        if x.shape != (4 ** self.n,) or x[0] != 0 or np.any(x < 0) or abs(x.sum() - 1) > 1e-12:
            raise ValueError("direction weights must vanish at 0, be >= 0 and sum to 1")
        object.__setattr__(self, "weights", tuple(x))


def characteristic(noise: NoiseSpec, t):
    """G_t = <exp(i int xi)>; real for both implemented kinds."""
    t = np.asarray(t, dtype=float)
    if noise.kind == "white":
        return np.exp(-noise.Phi * t)
    eta, A = noise.eta, noise.A
    chi = np.sqrt(complex(eta * eta - A * A))
    if abs(chi) < 1e-12:
        val = np.exp(-eta * t) * (1 + eta * t)
    else:
        val = np.exp(-eta * t) * (np.cosh(chi * t) + eta / chi * np.sinh(chi * t))
    return np.real(val)


def characteristic_rate(noise: NoiseSpec, t):
    """d/dt ln(1/G_t)."""
    t = np.asarray(t, dtype=float)
    if noise.kind == "white":
        return np.full(t.shape, noise.Phi)
    eta, A = noise.eta, noise.A
    chi = np.sqrt(complex(eta * eta - A * A))
    with np.errstate(divide="ignore", invalid="ignore"):
        if abs(chi) < 1e-12:
            val = A * A * t / (1 + eta * t)
        else:
            val = np.where(t > 0, A * A / (eta + chi / np.tanh(chi * t + 0j)), 0.0)
    return np.real(val)


def stochastic_hamiltonian_probabilities(noise: NoiseSpec, t) -> np.ndarray:
    x = np.asarray(noise.weights)
    G = characteristic(noise, t)[..., None]
    p = 0.5 * x * (1 - G)
    p[..., 0] = 0.5 * (1 + G[..., 0])
    return p


def stochastic_hamiltonian_profile(noise: NoiseSpec) -> ProbabilityProfile:
    x = np.asarray(noise.weights)

    def dp(t):
        G = characteristic(noise, t)
        dG = -characteristic_rate(noise, t) * G
        out = -0.5 * x * dG[..., None]
        out[..., 0] = 0.5 * dG
        return out

    return ProbabilityProfile(noise.n, lambda t: stochastic_hamiltonian_probabilities(noise, t), dp)


def stochastic_hamiltonian_rates(noise: NoiseSpec, t) -> np.ndarray:
    """Closed form valid while G_t > 0; raises PoleError once G_t <= 0."""
    t = np.asarray(t, dtype=float)
    G = characteristic(noise, t)
    if np.any(G <= 0):
        raise PoleError("characteristic function reached zero: rates diverge")
    x = np.asarray(noise.weights)
    p_inf = 0.5 * x
    p_inf[0] = 0.5
    h_inf = _check_h_inf(fast_transform(p_inf))
    gt = -np.log(G)[..., None]
    gdot = characteristic_rate(noise, t)[..., None]
    inner = 0.5 * gdot * _tanh_shift(0.5 * gt, h_inf)
    return fast_transform(inner, inverse=True)


# -- statistical mixtures ---------------------------------------------------

@dataclass(frozen=True)
class MixtureSpec:
    """Weighted Markovian components ``[(q_k, constant rate vector), ...]``."""

    components: tuple

    def __post_init__(self):
        comps = []
        for q, g in self.components:
            g = complete_rates(g)
            if q <= 0:
                raise ValueError("mixture weights must be positive")
            if np.any(g[1:] < 0):
                raise ValueError("component rates must be nonnegative")
            comps.append((float(q), g))
        if abs(sum(q for q, _ in comps) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def n(self) -> int:
        from .pauli import num_qubits
        return num_qubits(self.components[0][1].size)


def mixture_rates(spec: MixtureSpec, t, closed_form: bool = True) -> np.ndarray:
    """Canonical rates of a mixture of semigroups.

    Two components use the tanh closed form unless ``closed_form`` is False;
    otherwise a softmax-weighted average of component eigenvalues.
    """
    t = np.asarray(t, dtype=float)
    q = np.array([c[0] for c in spec.components])
    mus = np.array([eigenvalues_from_rates(c[1]) for c in spec.components])
    if len(q) == 2 and closed_form:
        g1, g2 = spec.components[0][1], spec.components[1][1]
        delta = 0.5 * (mus[0] - mus[1])
        zeta = 0.5 * np.log(q[0] / q[1])
        inner = delta * np.tanh(t[..., None] * delta + zeta)
        return 0.5 * (g1 + g2) + fast_transform(inner, inverse=True)
    logw = np.log(q)[:, None] + t[..., None, None] * mus   # (..., k, 4^N)
    logw = logw - logw.max(axis=-2, keepdims=True)
    w = np.exp(logw)
    avg = (w * mus).sum(axis=-2) / w.sum(axis=-2)
    return fast_transform(avg, inverse=True)


def mixture_probabilities(spec: MixtureSpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = 0.0
    for q, g in spec.components:
        mu = eigenvalues_from_rates(g)
        out = out + q * fast_transform(np.exp(t[..., None] * mu), inverse=True)
    return out


def mixture_model(spec: MixtureSpec) -> HiddenModel:
    """One frozen hidden state per component, each running its own semigroup."""
    n = spec.n
    states = tuple(str(k + 1) for k in range(len(spec.components)))
    trans = []
    for label, (_, g) in zip(states, spec.components):
        for idx in np.flatnonzero(g[1:] > 0) + 1:
            trans.append(Transition(label, label, g[idx], PauliIndex.from_flat(int(idx), n)))
    return HiddenModel(n, states, tuple(trans), tuple(q for q, _ in spec.components),
                       name="mixture")


def markov_model(g) -> HiddenModel:
    """Single hidden state: a Markovian Pauli semigroup with rates ``g``."""
    g = complete_rates(g)
    if np.any(g[1:] < 0):
        raise ValueError("Markovian rates must be nonnegative")
    from .pauli import num_qubits
    n = num_qubits(g.size)
    trans = tuple(Transition("0", "0", g[i], PauliIndex.from_flat(int(i), n))
                  for i in np.flatnonzero(g[1:] > 0) + 1)
    return HiddenModel(n, ("0",), trans, (1.0,), name="markov")


@dataclass(frozen=True)
class ExponentialMixtureSpec:
    """Independent exponentially distributed rates, density tau e^{-gamma tau}.

    ``taus`` maps Pauli labels to tau_c; strings not listed carry no rate.
    """

    n: int
    taus: Mapping = field(default_factory=dict)

    def tau_vector(self) -> np.ndarray:
        tau = np.full(4 ** self.n, np.inf)
        for key, v in self.taus.items():
            if v <= 0:
                raise ValueError("tau must be positive")
            tau[pauli(key, self.n).flat] = float(v)
        return tau


def _exp_mixture_terms(spec, t):
    from .pauli import hadamard_matrix
    tau = spec.tau_vector()
    active = np.flatnonzero(np.isfinite(tau))
    active = active[active > 0]
    H = hadamard_matrix(spec.n)
    one_minus = 1.0 - H[:, active]                 # (b, c)
    t = np.asarray(t, dtype=float)[..., None, None]
    return tau[active], one_minus, t


def exponential_mixture_probabilities(spec: ExponentialMixtureSpec, t) -> np.ndarray:
    tau, om, tt = _exp_mixture_terms(spec, t)
    lam = np.prod(tau / (tau + om * tt), axis=-1)
    return fast_transform(lam, inverse=True)


def exponential_mixture_rates(spec: ExponentialMixtureSpec, t) -> np.ndarray:
    tau, om, tt = _exp_mixture_terms(spec, t)
    mu = -np.sum(om / (tau + om * tt), axis=-1)
    return fast_transform(mu, inverse=True)


# -- two-state mixtures on two and three qubits -----------------------------

BIPARTITE = {
    "a0": ("10", "01", "20", "02"),
    "a+": ("11", "22"),
    "a-": ("30", "03", "12", "21"),
    "33": ("33",),
}
TRIPARTITE = {
    "a+": ("110", "101", "011", "220", "202", "022"),
    "a-": ("330", "303", "033", "123", "132", "213", "231", "312", "321"),
}
BIPARTITE_COMPONENTS = (("10", "01"), ("20", "02"))
TRIPARTITE_COMPONENTS = (("110", "101", "011"), ("220", "202", "022"))


def _self_check_tables():
    # a- strings are products of one string from each component
    for table, comps, key in ((BIPARTITE, BIPARTITE_COMPONENTS, None),
                              (TRIPARTITE, TRIPARTITE_COMPONENTS, None)):
        prods = {multiply(x, y).index.label for x in comps[0] for y in comps[1]}
        minus = set(table["a-"]) | set(table.get("33", ()))
        if table is BIPARTITE:
            prods |= {multiply(multiply(comps[0][0], comps[0][1]).index,
                               multiply(comps[1][0], comps[1][1]).index).index.label}
        if prods != minus:
            raise AssertionError(f"string table inconsistent: {sorted(prods)} vs {sorted(minus)}")


_self_check_tables()


def mixture_preset_components(kind: str, gamma: float) -> MixtureSpec:
    """The two equal-weight Markovian components behind each preset."""
    n, comps = {"bipartite": (2, BIPARTITE_COMPONENTS),
                "tripartite": (3, TRIPARTITE_COMPONENTS)}[kind]
    vecs = []
    for strings in comps:
        g = np.zeros(4 ** n)
        for s in strings:
            g[pauli(s, n).flat] = gamma
        vecs.append(complete_rates(g))
    return MixtureSpec(((0.5, vecs[0]), (0.5, vecs[1])))


def mixture_preset_profile(kind: str, gamma: float) -> RateProfile:
    g = float(gamma)

    def th2(t):
        return np.tanh(2 * g * np.asarray(t, dtype=float))

    def lc2(t):
        return logcosh(2 * g * np.asarray(t, dtype=float))

    if kind == "bipartite":
        table = {
            "a0": RateTerm.constant(g / 2),
            "a+": RateTerm(lambda t: 0.25 * g * th2(t), lambda t: 0.125 * lc2(t)),
            "a-": RateTerm(lambda t: -0.25 * g * th2(t), lambda t: -0.125 * lc2(t)),
            "33": RateTerm(
                lambda t: -0.25 * g * (2 * np.tanh(g * np.asarray(t, dtype=float)) - th2(t)),
                lambda t: -0.5 * logcosh(g * np.asarray(t, dtype=float)) + 0.125 * lc2(t)),
        }
        strings, n = BIPARTITE, 2
    elif kind == "tripartite":
        table = {
            "a+": RateTerm(lambda t: 0.25 * g * (2 + th2(t)),
                           lambda t: 0.5 * g * np.asarray(t, dtype=float) + 0.125 * lc2(t)),
            "a-": RateTerm(lambda t: -0.25 * g * th2(t), lambda t: -0.125 * lc2(t)),
        }
        strings, n = TRIPARTITE, 3
    else:
        raise ValueError(f"unknown preset kind {kind!r}")
    terms = {}
    for group, labels in strings.items():
        for s in labels:
            terms[pauli(s, n).flat] = table[group]
    return RateProfile(n, terms)


def mixture_preset_rates(kind: str, gamma: float, t) -> np.ndarray:
    return mixture_preset_profile(kind, gamma).rates(t)


def gamma33_sinh_form(gamma: float, t):
    """The same rate written as -2 gamma sinh^4(gamma t) / sinh(4 gamma t)."""
    x = gamma * np.asarray(t, dtype=float)
    return -2.0 * gamma * np.sinh(x) ** 4 / np.sinh(4 * x)


# -- translation-invariant composite ----------------------------------------

def _bond(n, i, j, d):
    digits = [0] * n
    digits[i] = d
    digits[j] = d
    return PauliIndex(tuple(digits))


def translational_composite(n: int, gammas: Sequence[float], f: Sequence = "-tanh",
                            periodic: bool = True, f_const: float = 1.0) -> RateProfile:
    """Sum of nearest-neighbour xx/yy/zz pieces, one per bond.

    Bond i couples qubits i and i+1 (mod N when ``periodic``); its xx and yy
    rates are gamma_i/2 and its zz rate is (gamma_i/2) f_i(t) with f_i one of
    ``"-tanh"`` (-tanh(gamma_i t)), ``"tan"`` (tan(gamma_i t)) or ``"const"``
    (the constant ``f_const``). A string for ``f`` applies to every bond.
    """
    if n < 2:
        raise ValueError("the composite needs N >= 2")
    bonds = n if periodic else n - 1
    gammas = list(gammas) if np.ndim(gammas) else [float(gammas)] * bonds
    if len(gammas) != bonds:
        raise ValueError(f"need {bonds} bond rates, got {len(gammas)}")
    choices = [f] * bonds if isinstance(f, str) else list(f)
    total = RateProfile(n, {})
    for i, (gi, fi) in enumerate(zip(gammas, choices)):
        j = (i + 1) % n
        xx, yy, zz = (_bond(n, i, j, d) for d in (1, 2, 3))
        if fi in ("-tanh", "tan"):
            piece_spec = EternalPairSpec(n, xx, yy, gi, gi)
            piece = hyperbolic_profile(piece_spec) if fi == "-tanh" else trig_profile(piece_spec)
        elif fi == "const":
            piece = RateProfile(n, {xx.flat: RateTerm.constant(gi / 2),
                                    yy.flat: RateTerm.constant(gi / 2),
                                    zz.flat: RateTerm.constant(gi / 2 * f_const)})
        else:
            raise ValueError(f"unknown bond profile {fi!r}")
        total = total + piece
    return total
