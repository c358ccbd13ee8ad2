import numpy as np
import pytest

from nmq import channel as C
from nmq import cpf as P
from nmq import models as M
from nmq import oracle as O
from nmq.errors import CapacityError, IntegrationError
from nmq.incoherent import HiddenModel, Transition, induced_probabilities, solve
from nmq.pauli import PauliIndex

from helpers import random_density, random_profile

PLUS = np.full((2, 2), 0.5, dtype=complex)


def test_dephasing_coherence():
    t = np.log(2) / 2
    rho = O.evolve_master_rk4([0, 0, 0, 1.0], PLUS, [t], dt=1e-4)[0]
    assert abs(rho[0, 1] - 0.25) < 1e-8


def test_zero_rates_constant(rng):
    rho0 = random_density(2, rng)
    out = O.evolve_master_rk4(np.zeros(16), rho0, [0.0, 1.0, 2.0], dt=1e-2)
    assert np.allclose(out, rho0[None], atol=1e-15)


def test_hyperbolic_n2_matches_kraus(rng):
    prof = M.hyperbolic_profile(M.EternalPairSpec(2, "13", "20", 1.0, 1.0))
    rho0 = random_density(2, rng)
    grid = np.linspace(0, 3, 7)
    rk = O.evolve_master_rk4(prof, rho0, grid, dt=1e-3)
    P_ = C.probabilities_from_rates(prof, grid)
    for k, t in enumerate(grid):
        assert np.allclose(rk[k], C.apply_kraus(P_[k], rho0), atol=1e-8)
        assert np.allclose(rk[k], O.apply_kraus_dense(P_[k], rho0), atol=1e-8)


def test_rk4_self_convergence():
    prof = random_profile(1, np.random.default_rng(2), active=3)
    rho0 = random_density(1, np.random.default_rng(3))
    T = [2.0]
    # coarse steps so the truncation error dominates roundoff
    r1 = O.evolve_master_rk4(prof, rho0, T, dt=0.2)[0]
    r2 = O.evolve_master_rk4(prof, rho0, T, dt=0.1)[0]
    r4 = O.evolve_master_rk4(prof, rho0, T, dt=0.05)[0]
    ref = r4 + (r4 - r2) / 15
    ratio = np.max(np.abs(r1 - ref)) / np.max(np.abs(r2 - ref))
    assert 16 * 0.7 <= ratio <= 16 * 1.3


def test_trace_drift_raises():
    blowup = lambda t: np.broadcast_to(np.array([0, 1e7, 0, 0.0]), np.shape(t) + (4,))
    with pytest.raises(IntegrationError):
        O.evolve_master_rk4(blowup, np.diag([1.0, 0.0]), [1.0], dt=0.5)


def test_capacity():
    with pytest.raises(CapacityError):
        O.evolve_master_rk4(np.zeros(256), np.eye(16) / 16, [1.0])
    big = HiddenModel(3, ("0",), (), (1.0,))
    with pytest.raises(CapacityError):
        O.extended_generator(big)


def test_grid_must_increase():
    with pytest.raises(ValueError):
        O.evolve_master_rk4([0, 0, 0, 1.0], PLUS, [1.0, 0.5])


# -- extended system ----------------------------------------------------------------

def test_trig_extended_trace():
    model = M.trigonometric_model(M.EternalPairSpec.default(1.0))
    traj = O.evolve_extended(model, PLUS, np.linspace(0, 5, 11))
    for st in traj:
        assert abs(np.trace(st.total()) - 1) < 1e-10


def test_hyperbolic_branches_never_mix():
    model = M.hyperbolic_model(M.EternalPairSpec.default(1.0))
    traj = O.evolve_extended(model, PLUS, np.linspace(0, 5, 11))
    for st in traj:
        assert np.allclose(st.weights(), [0.5, 0.5], atol=1e-12)


@pytest.mark.parametrize("method", ["expm", "rk4"])
def test_branch_weights_match_engine(method, rng):
    model = M.trigonometric_model(M.EternalPairSpec.default(1.0, 2.5))
    grid = np.linspace(0, 4, 5)
    traj = O.evolve_extended(model, random_density(1, rng), grid, method=method)
    table = solve(model, grid)
    for k, st in enumerate(traj):
        assert np.allclose(st.weights(), table.g[k].sum(axis=0), atol=1e-8)


def test_branches_stay_positive(rng):
    for seed in range(3):
        r = np.random.default_rng(seed)
        trans = tuple(Transition(str(r.integers(3)), str(r.integers(3)), r.uniform(0.1, 2),
                                 PauliIndex.from_flat(int(r.integers(1, 16)), 2)) for _ in range(4))
        model = HiddenModel(2, ("0", "1", "2"), trans, tuple(r.dirichlet(np.ones(3))))
        traj = O.evolve_extended(model, random_density(2, r, rank=1), np.linspace(0, 3, 7))
        for st in traj:
            assert abs(st.weights().sum() - 1) < 1e-10
            for rho_h in st.array():
                assert np.allclose(rho_h, rho_h.conj().T, atol=1e-12)
                assert np.linalg.eigvalsh(rho_h).min() >= -1e-10


# -- presets against the dense integrator --------------------------------------------------

def _rk_vs_kraus(prof, rho0, grid, dt=1e-3):
    rk = O.evolve_master_rk4(prof, rho0, grid, dt=dt)
    P_ = C.probabilities_from_rates(prof, grid)
    return max(np.max(np.abs(rk[k] - C.apply_kraus(P_[k], rho0))) for k in range(grid.size))


@pytest.mark.parametrize("name", ["hyperbolic", "trig-before-pole", "bipartite", "translational",
                                  "classical-me", "exponential-mixture"])
def test_presets_match_oracle(name):
    rng = np.random.default_rng(4)
    grid = np.linspace(0, 5, 6)
    if name == "hyperbolic":
        prof = M.hyperbolic_profile(M.EternalPairSpec.default(1.0))
    elif name == "trig-before-pole":
        prof = M.trig_profile(M.EternalPairSpec.default(1.0))
        grid = np.linspace(0, 1.45, 6)
    elif name == "bipartite":
        prof = M.mixture_preset_profile("bipartite", 0.8)
    elif name == "translational":
        prof = M.translational_composite(3, [1.0, 0.6, 0.8], "-tanh")
        grid = np.linspace(0, 2, 3)
    elif name == "classical-me":
        Phi, p_inf = 1.5, np.array([0.5, 0.2, 0.2, 0.1])
        prof = C.RateProfile(1, {a: C.RateTerm(lambda t, a=a: M.classical_me_rates(Phi, p_inf, t)[..., a])
                                 for a in (1, 2, 3)})
    else:
        spec = M.ExponentialMixtureSpec(1, {"1": 0.5, "3": 2.0})
        prof = C.RateProfile(1, {a: C.RateTerm(lambda t, a=a: M.exponential_mixture_rates(spec, t)[..., a])
                                 for a in (1, 3)})
    rho0 = random_density(prof.n, rng)
    assert _rk_vs_kraus(prof, rho0, grid) < 1e-7


def test_trig_kraus_route_across_pole():
    # past the pole the dense integrator cannot run, but the Kraus route matches the
    # extended-system evolution of the hidden model
    spec = M.EternalPairSpec.default(1.0)
    grid = np.array([1.0, np.pi / 2, 2.5, 6.0])
    rho0 = random_density(1, np.random.default_rng(9))
    ext = O.evolve_extended(M.trigonometric_model(spec), rho0, grid)
    P_ = C.probabilities_from_rates(M.trig_profile(spec), grid)
    for k in range(grid.size):
        assert np.allclose(C.apply_kraus(P_[k], rho0), ext[k].total(), atol=1e-10)


# -- enumeration ------------------------------------------------------------------------

def test_enumeration_markov_null():
    model = M.markov_model([0, 0.2, 0.5, 0.1])
    triple = P.MeasurementTriple.pauli("2", "2", "2", 1.0, 0.5, random_density(1, np.random.default_rng(0)))
    assert abs(O.cpf_enumeration(model, triple).value) < 1e-12


def test_enumeration_quarter_period():
    model = M.trigonometric_model(M.EternalPairSpec.default(1.0))
    triple = P.MeasurementTriple.pauli("1", "1", "1", np.pi / 2, np.pi / 2, np.eye(2) / 2)
    assert O.cpf_enumeration(model, triple).value == pytest.approx(-np.exp(-np.pi), abs=1e-10)


def test_enumeration_bipartite_table():
    model = M.trigonometric_model(M.EternalPairSpec(2, "11", "22", 1.0, 3.0))
    t, tau = 0.7, 1.2
    ab = P.closed_form_trig("ab", 1.0, 3.0, t, tau)
    c = P.closed_form_trig("c", 1.0, 3.0, t, tau)
    for probe in range(1, 16):
        s = PauliIndex.from_flat(probe, 2)
        val = O.cpf_enumeration(model, P.MeasurementTriple.pauli(s, s, s, t, tau, np.eye(4) / 4)).value
        kind = P.classify_bipartite_observables("11", "22", s)
        expect = {"ab-form": ab, "c-form": c, "zero": 0.0}[kind]
        assert val == pytest.approx(expect, abs=1e-10)


def test_induced_route_matches_extended(rng):
    model = M.trigonometric_model(M.EternalPairSpec(2, "12", "31", 0.8, 1.7))
    rho0 = random_density(2, rng)
    grid = np.array([0.4, 1.9])
    p = induced_probabilities(solve(model, grid))
    ext = O.evolve_extended(model, rho0, grid)
    for k in range(2):
        assert np.allclose(O.apply_kraus_dense(p[k], rho0), ext[k].total(), atol=1e-8)
