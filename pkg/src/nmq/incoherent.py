"""Memory from hidden incoherent degrees of freedom.

The system state is split into conditional branches, one per hidden state
``h``. Each branch stays a mixture of Pauli sandwiches of the initial state,
``rho^h_t = sum_alpha g_alpha^h(t) S_alpha rho_0 S_alpha``, and the weights
``g`` obey a classical linear master equation on (string, hidden state)
pairs. A transition ``h' -> h`` with rate ``r`` and string ``s`` moves weight
from ``(alpha, h')`` to ``(s*alpha, h)``; every hidden state loses weight at
the sum of its outgoing rates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .channel import ProbabilityProfile
from .errors import CapacityError, DimensionError
from .pauli import PauliIndex, multiply, pauli

DENSE_THRESHOLD = 4096
RK4_STEP = 1e-3


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    rate: float
    string: PauliIndex

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"negative transition rate {self.rate}")


@dataclass(frozen=True)
class HiddenModel:
    """Hidden states, string-carrying transitions, and the initial distribution."""

    n: int
    states: tuple
    transitions: tuple
    q0: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        if len(set(self.states)) != len(self.states):
            raise ValueError("hidden state labels must be unique")
        q0 = tuple(float(x) for x in self.q0)
        if len(q0) != len(self.states):
            raise DimensionError("q0 must have one entry per hidden state")
        if any(x < 0 for x in q0) or abs(sum(q0) - 1.0) > 1e-12:
            raise ValueError(f"q0 must be a probability vector, got {q0}")
        object.__setattr__(self, "q0", q0)
        trans = []
        for tr in self.transitions:
            if not isinstance(tr, Transition):
                tr = Transition(*tr)
            tr = Transition(str(tr.source), str(tr.target), float(tr.rate), pauli(tr.string, self.n))
            if tr.source not in self.states or tr.target not in self.states:
                raise ValueError(f"transition {tr} references an unknown state")
            trans.append(tr)
        object.__setattr__(self, "transitions", tuple(trans))

    @property
    def m(self) -> int:
        return len(self.states)

    @property
    def out_rates(self) -> np.ndarray:
        out = np.zeros(self.m)
        for tr in self.transitions:
            out[self.states.index(tr.source)] += tr.rate
        return out

    @property
    def active_strings(self) -> list:
        """Closure of {0} under left multiplication by transition strings."""
        found = {PauliIndex((0,) * self.n)}
        frontier = list(found)
        strings = {tr.string for tr in self.transitions}
        while frontier:
            nxt = []
            for alpha in frontier:
                for s in strings:
                    c = multiply(s, alpha).index
                    if c not in found:
                        found.add(c)
                        nxt.append(c)
            frontier = nxt
        return sorted(found, key=lambda p: p.flat)


@dataclass
class _PairSpace:
    pairs: list            # (flat string, hidden index)
    generator: np.ndarray
    strings: list          # flat indices present, sorted
    string_pos: np.ndarray  # pair -> position in ``strings``
    hidden_pos: np.ndarray  # pair -> hidden index


def _pair_space(model: HiddenModel, initial_states: Sequence[int]) -> _PairSpace:
    zero = PauliIndex((0,) * model.n)
    index = {}
    pairs = []
    for h in initial_states:
        key = (zero, h)
        index[key] = len(pairs)
        pairs.append(key)
    by_source: dict = {}
    for tr in model.transitions:
        by_source.setdefault(model.states.index(tr.source), []).append(tr)
    edges = []
    k = 0
    while k < len(pairs):
        alpha, h = pairs[k]
        for tr in by_source.get(h, []):
            key = (multiply(tr.string, alpha).index, model.states.index(tr.target))
            if key not in index:
                index[key] = len(pairs)
                pairs.append(key)
                if len(pairs) > DENSE_THRESHOLD * 16:
                    raise CapacityError("hidden-state pair space too large")
            edges.append((index[key], k, tr.rate))
        k += 1
    size = len(pairs)
    G = np.zeros((size, size))
    out = model.out_rates
    for k, (_, h) in enumerate(pairs):
        G[k, k] -= out[h]
    for dst, src, rate in edges:
        G[dst, src] += rate
    strings = sorted({a.flat for a, _ in pairs})
    pos = {f: i for i, f in enumerate(strings)}
    return _PairSpace(
        pairs=[(a.flat, h) for a, h in pairs],
        generator=G,
        strings=strings,
        string_pos=np.array([pos[a.flat] for a, _ in pairs]),
        hidden_pos=np.array([h for _, h in pairs]),
    )


def _evolve(G: np.ndarray, x0: np.ndarray, times: np.ndarray, method: str,
            rk4_step: float = RK4_STEP) -> np.ndarray:
    """Columns of x0 evolved by dx/dt = G x; returns shape (T,) + x0.shape."""
    if method == "auto":
        method = "expm" if G.shape[0] <= DENSE_THRESHOLD else "rk4"
    out = np.empty((len(times),) + x0.shape)
    if method == "expm":
        for i, t in enumerate(times):
            out[i] = expm(G * t) @ x0
        return out
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")
    x = x0.astype(float).copy()
    t_now = 0.0
    for i, t in enumerate(times):
        span = t - t_now
        if span < 0:
            raise ValueError("times must be nondecreasing and >= 0")
        steps = int(np.ceil(span / rk4_step)) if span > 0 else 0
        if steps:
            h = span / steps
            for _ in range(steps):
                k1 = G @ x
                k2 = G @ (x + 0.5 * h * k1)
                k3 = G @ (x + 0.5 * h * k2)
                k4 = G @ (x + h * k3)
                x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t_now = t
        out[i] = x
    return out


@dataclass
class GFunctionTable:
    """``g[i, s, h]``: weight of string ``strings[s]`` in branch ``h`` at ``times[i]``."""

    n: int
    times: np.ndarray
    strings: list
    g: np.ndarray
    states: tuple = field(default=())

    def probabilities(self) -> np.ndarray:
        return induced_probabilities(self)


def solve(model: HiddenModel, grid, method: str = "auto",
          rk4_step: float = RK4_STEP) -> GFunctionTable:
    """g-functions on ``grid`` for the model's own initial distribution."""
    grid = np.asarray(grid, dtype=float)
    support = [h for h, q in enumerate(model.q0) if q > 0]
    space = _pair_space(model, support)
    x0 = np.zeros(len(space.pairs))
    x0[:len(support)] = [model.q0[h] for h in support]
    traj = _evolve(space.generator, x0, grid, method, rk4_step)
    g = np.zeros((grid.size, len(space.strings), model.m))
    np.add.at(g, (slice(None), space.string_pos, space.hidden_pos), traj)
    return GFunctionTable(model.n, grid, [PauliIndex.from_flat(f, model.n) for f in space.strings],
                          g, model.states)


@dataclass
class PropagatorFamily:
    """``F[i, s, h, h']`` so that ``g_s^h(t_i) = sum_h' F[i, s, h, h'] q0[h']``."""

    n: int
    times: np.ndarray
    strings: list
    F: np.ndarray

    def at(self, t: float) -> np.ndarray:
        hit = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-14))
        if not hit.size:
            raise KeyError(f"time {t} not on the propagator grid")
        return self.F[hit[0]]

    def position(self, alpha) -> int:
        alpha = pauli(alpha, self.n)
        return self.strings.index(alpha)


def propagators(model: HiddenModel, grid, method: str = "auto",
                rk4_step: float = RK4_STEP,
                strings: Optional[Sequence] = None) -> PropagatorFamily:
    """Propagator family on ``grid``; one evolution per hidden basis state.

    ``strings`` optionally fixes the string axis (e.g. to align two grids).
    """
    grid = np.asarray(grid, dtype=float)
    space = _pair_space(model, list(range(model.m)))
    x0 = np.zeros((len(space.pairs), model.m))
    x0[np.arange(model.m), np.arange(model.m)] = 1.0
    traj = _evolve(space.generator, x0, grid, method, rk4_step)
    if strings is None:
        flats = space.strings
    else:
        flats = sorted({pauli(s, model.n).flat for s in strings} | set(space.strings))
    pos = {f: i for i, f in enumerate(flats)}
    F = np.zeros((grid.size, len(flats), model.m, model.m))
    spos = np.array([pos[f] for f, _ in space.pairs])
    np.add.at(F, (slice(None), spos, space.hidden_pos), traj)
    return PropagatorFamily(model.n, grid, [PauliIndex.from_flat(f, model.n) for f in flats], F)


def induced_probabilities(table: GFunctionTable) -> np.ndarray:
    """p_t^alpha = sum_h g_alpha^h(t), embedded in the full 4**N index space."""
    p = np.zeros((table.times.size, 4 ** table.n))
    flats = [s.flat for s in table.strings]
    p[:, flats] = table.g.sum(axis=2)
    return p


def probability_profile(model: HiddenModel) -> ProbabilityProfile:
    """Continuous-time Kraus weights with the exact derivative ``G g``."""
    support = [h for h, q in enumerate(model.q0) if q > 0]
    space = _pair_space(model, support)
    G = space.generator
    x0 = np.zeros(len(space.pairs))
    x0[:len(support)] = [model.q0[h] for h in support]
    flats = np.array([f for f, _ in space.pairs])
    size = 4 ** model.n

    def embed(x):
        out = np.zeros(np.shape(x)[:-1] + (size,))
        np.add.at(out, (..., flats), x)
        return out

    def p(t):
        t = np.asarray(t, dtype=float)
        xs = np.array([expm(G * ti) @ x0 for ti in t.ravel()])
        return embed(xs).reshape(t.shape + (size,))

    def dp(t):
        t = np.asarray(t, dtype=float)
        xs = np.array([G @ (expm(G * ti) @ x0) for ti in t.ravel()])
        return embed(xs).reshape(t.shape + (size,))

    return ProbabilityProfile(model.n, p, dp)


def classical_me_embedding(phi, n: int) -> HiddenModel:
    """Hidden model whose hidden states are the 4**N Pauli indices.

    ``phi[a, b]`` is the rate of the hidden jump ``b -> a``; the jump applies
    the sandwich with ``S_a S_b`` to the system. Starts in hidden state 0.
    """
    if n > 3:
        raise CapacityError("classical master-equation embedding is limited to N <= 3")
    phi = np.asarray(phi, dtype=float)
    size = 4 ** n
    if phi.shape != (size, size):
        raise DimensionError(f"phi must be {size}x{size}")
    if np.any(phi < 0):
        raise ValueError("classical transition rates must be nonnegative")
    labels = [PauliIndex.from_flat(f, n).label for f in range(size)]
    trans = []
    for a in range(size):
        for b in range(size):
            if a != b and phi[a, b] > 0:
                s = multiply(PauliIndex.from_flat(a, n), PauliIndex.from_flat(b, n)).index
                trans.append(Transition(labels[b], labels[a], phi[a, b], s))
    q0 = [1.0] + [0.0] * (size - 1)
    return HiddenModel(n, labels, tuple(trans), q0, name="classical-me")


def hub_rates(n: int, phi_out: float, phi_back: float, weights) -> np.ndarray:
    """Rate matrix for hidden jumps 0 -> a (rate x_a phi_out) and a -> 0 (phi_back)."""
    size = 4 ** n
    x = np.asarray(weights, dtype=float)
    if x.shape != (size,) or abs(x[1:].sum() - 1.0) > 1e-12 or x[0] != 0:
        raise ValueError("weights must vanish at 0 and sum to 1 elsewhere")
    phi = np.zeros((size, size))
    phi[1:, 0] = x[1:] * phi_out
    phi[0, 1:] = np.where(x[1:] > 0, phi_back, 0.0)
    return phi
