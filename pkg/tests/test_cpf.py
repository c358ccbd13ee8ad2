import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmq import cpf as P
from nmq import models as M
from nmq import oracle as O
from nmq.errors import ConditioningError, DimensionError
from nmq.incoherent import HiddenModel, Transition, propagators
from nmq.pauli import PauliIndex, all_indices, hadamard_element

from helpers import random_density, random_hermitian

SPEC1 = M.EternalPairSpec.default(1.0)
TRIG1 = M.trigonometric_model(SPEC1)


def mixed(n):
    return np.eye(2 ** n) / 2 ** n


def random_model(rng, n, m=2):
    states = tuple(str(k) for k in range(m))
    trans = tuple(Transition(states[rng.integers(m)], states[rng.integers(m)], rng.uniform(0.1, 1.5),
                             PauliIndex.from_flat(int(rng.integers(1, 4 ** n)), n))
                  for _ in range(int(rng.integers(1, 4))))
    return HiddenModel(n, states, trans, tuple(rng.dirichlet(np.ones(m))))


def random_observable(rng, n):
    """Nondegenerate Hermitian observable with eigenvalues drawn away from each other."""
    vals = np.sort(rng.uniform(-1, 1, 2 ** n)) + np.arange(2 ** n) * 0.1
    q, _ = np.linalg.qr(rng.normal(size=(2 ** n, 2 ** n)) + 1j * rng.normal(size=(2 ** n, 2 ** n)))
    return P.Observable.from_matrix(q @ np.diag(vals) @ q.conj().T)


# -- observables ---------------------------------------------------------------

def test_observable_from_pauli():
    o = P.Observable.from_pauli("13")
    assert o.values == (1.0, -1.0)
    assert np.allclose(o.projectors[0] + o.projectors[1], np.eye(4))
    assert np.trace(o.projectors[0]).real == pytest.approx(2)
    with pytest.raises(ValueError):
        P.Observable.from_pauli("00")


def test_observable_from_matrix_groups_degenerate():
    o = P.Observable.from_matrix(np.diag([1.0, 1.0, -2.0, 3.0]))
    assert o.values == (-2.0, 1.0, 3.0)
    assert np.trace(o.projector(1.0)).real == pytest.approx(2)
    with pytest.raises(ValueError):
        P.Observable.from_matrix(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionError):
        P.Observable.from_matrix(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        o.projector(0.5)


def test_triple_validation():
    with pytest.raises(ValueError):
        P.MeasurementTriple.pauli("1", "1", "1", -1.0, 1.0, mixed(1))
    with pytest.raises(DimensionError):
        P.MeasurementTriple(P.as_observable("1", 1), P.as_observable("11", 2), P.as_observable("1", 1),
                            1.0, 1.0, mixed(1))
    with pytest.raises(ValueError):
        P.MeasurementTriple.pauli("1", "1", "1", 1.0, 1.0, mixed(1), y_value=0.5)


# -- joint probabilities -----------------------------------------------------------

def test_joint_at_zero_times(rng):
    rho = random_density(1, rng)
    triple = P.MeasurementTriple.pauli("1", "3", "2", 0.0, 0.0, rho)
    table = P.joint_probability_table(TRIG1, triple)
    for (z, y, x), p in table.items():
        Px = triple.x.projector(x)
        px = np.trace(Px @ rho).real
        overlap = np.trace(triple.z.projector(z) @ triple.y.projector(y)).real \
            * np.trace(triple.y.projector(y) @ Px).real
        assert p == pytest.approx(overlap * px, abs=1e-14)


def test_joint_sums_to_one(rng):
    model = M.trigonometric_model(M.EternalPairSpec.default(0.7, 1.9))
    triple = P.MeasurementTriple.pauli("1", "2", "3", 0.8, 1.3, random_density(1, rng))
    table = P.joint_probability_table(model, triple)
    assert sum(table.values()) == pytest.approx(1.0, abs=1e-12)
    assert min(table.values()) >= -1e-14
    assert P.joint_probability(model, triple, 1, -1, 1) == table[(1.0, -1.0, 1.0)]


@pytest.mark.parametrize("seed", range(5))
def test_joint_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    model = random_model(rng, n)
    rho = random_density(n, rng)
    obs = [random_observable(rng, n) if rng.integers(2) else P.as_observable(
        PauliIndex.from_flat(int(rng.integers(1, 4 ** n)), n)) for _ in range(3)]
    triple = P.MeasurementTriple(obs[0], obs[1], obs[2], rng.uniform(0.1, 2), rng.uniform(0.1, 2),
                                 rho, y_value=obs[1].values[0])
    ours = P.joint_probability_table(model, triple)
    ref = O.cpf_enumeration(model, triple).extras["joint"]
    for key, v in ours.items():
        assert v == pytest.approx(ref[key], abs=1e-10)


# -- correlation routes ----------------------------------------------------------------

@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=15)
def test_bayes_matches_general(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    model = random_model(rng, n, m=int(rng.integers(1, 4)))
    rho = random_density(n, rng)
    obs = [random_observable(rng, n) for _ in range(3)]
    triple = P.MeasurementTriple(obs[0], obs[1], obs[2], rng.uniform(0, 2), rng.uniform(0, 2), rho,
                                 y_value=obs[1].values[-1])
    a = P.cpf_bayes(model, triple)
    b = P.cpf_general(model, triple)
    assert a.value == pytest.approx(b.value, abs=1e-10)
    assert a.P_y == pytest.approx(b.P_y, abs=1e-12)
    bound = max(abs(v) for v in obs[0].values) * max(abs(v) for v in obs[2].values)
    assert abs(a.value) <= bound + 1e-12
    assert 0 <= a.P_y <= 1 + 1e-12


def test_markov_vanishes():
    rng = np.random.default_rng(7)
    g = [0, 0.3, 0.2, 0.6]
    model = M.markov_model(g)
    for x, y, z in itertools.product("123", repeat=3):
        for yv in (1.0, -1.0):
            triple = P.MeasurementTriple.pauli(x, y, z, 0.7, 1.2, random_density(1, rng), y_value=yv)
            assert abs(P.cpf_general(model, triple).value) < 1e-12


def test_markov_vanishes_general_observables(rng):
    model = M.markov_model(np.r_[0, rng.uniform(0, 1, 15)])
    for _ in range(5):
        obs = [random_observable(rng, 2) for _ in range(3)]
        triple = P.MeasurementTriple(obs[0], obs[1], obs[2], 0.6, 0.9, random_density(2, rng),
                                     y_value=obs[1].values[1])
        assert abs(P.cpf_general(model, triple).value) < 1e-12


def test_trig_matches_closed_form():
    for t, tau in ((0.3, 0.4), (1.0, 2.5), (np.pi / 2, np.pi / 2)):
        triple = P.MeasurementTriple.pauli("1", "1", "1", t, tau, mixed(1))
        val = P.cpf_general(TRIG1, triple).value
        assert val == pytest.approx(P.closed_form_trig("ab", 1.0, 1.0, t, tau), abs=1e-8)
        # equal rates: -e^{-(t + tau)} sin t sin tau
        assert val == pytest.approx(-np.exp(-(t + tau)) * np.sin(t) * np.sin(tau), abs=1e-12)


def test_quarter_period_example():
    triple = P.MeasurementTriple.pauli("1", "1", "1", np.pi / 2, np.pi / 2, mixed(1))
    for fn in (P.cpf_pauli, P.cpf_general, P.cpf_bayes):
        assert fn(TRIG1, triple).value == pytest.approx(-np.exp(-np.pi), abs=1e-12)
    assert O.cpf_enumeration(TRIG1, triple).value == pytest.approx(-0.0432139, abs=1e-7)


def test_degenerate_times_vanish(rng):
    model = M.trigonometric_model(M.EternalPairSpec.default(1.0, 2.0))
    for t, tau in ((0.0, 1.3), (1.3, 0.0)):
        triple = P.MeasurementTriple.pauli("1", "1", "1", t, tau, random_density(1, rng))
        assert abs(P.cpf_general(model, triple).value) < 1e-12


@pytest.mark.parametrize("ratio", [0.15, 0.5, 1.0, 3.0, 7.0])
def test_closed_forms_with_bias(ratio):
    model = M.trigonometric_model(M.EternalPairSpec.default(1.0, ratio))
    rho = np.array([[0.8, 0.1 + 0.05j], [0.1 - 0.05j, 0.2]])
    for direction, s in (("ab", "1"), ("ab", "2"), ("c", "3")):
        for yv in (1.0, -1.0):
            triple = P.MeasurementTriple.pauli(s, s, s, 0.9, 1.7, rho, y_value=yv)
            res = P.cpf_pauli(model, triple)
            ref = P.closed_form_trig(direction, 1.0, ratio, 0.9, 1.7, mean_x=res.mean_x,
                                     p_y=res.extras["P_y_rank1"])
            assert res.value == pytest.approx(ref, abs=1e-8)
            assert res.value == pytest.approx(O.cpf_enumeration(model, triple).value, abs=1e-10)
            assert res.P_y == pytest.approx(P.cpf_general(model, triple).P_y, abs=1e-12)


def test_c_direction_zero_at_equal_rates():
    triple = P.MeasurementTriple.pauli("3", "3", "3", 0.8, 1.1, mixed(1))
    assert abs(P.cpf_pauli(TRIG1, triple).value) < 1e-14
    assert P.closed_form_trig("c", 1.0, 1.0, 0.8, 1.1) == 0.0


def test_closed_form_sign_regions():
    t = np.linspace(0.25, 10, 40)
    T, S = np.meshgrid(t, t)
    assert np.all(P.closed_form_trig("ab", 1.0, 0.15, T, S) <= 0)
    inside = P.closed_form_trig("ab", 1.0, 1.0, T, S)
    assert inside.min() < 0 < inside.max()
    with pytest.raises(ValueError):
        P.closed_form_trig("xy", 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        P.closed_form_trig("ab", 1.0, 1.0, 1.0, 1.0, mean_x=0.3)


def test_cpf_pauli_requires_strings(rng):
    obs = random_observable(rng, 1)
    triple = P.MeasurementTriple(obs, obs, obs, 1.0, 1.0, mixed(1), y_value=obs.values[0])
    with pytest.raises(TypeError):
        P.cpf_pauli(TRIG1, triple)


def test_conditioning_error():
    rho = np.diag([1.0, 0.0])
    frozen = HiddenModel(1, ("0",), (), (1.0,))
    triple = P.MeasurementTriple.pauli("3", "3", "3", 1.0, 1.0, rho, y_value=-1.0)
    for fn in (P.cpf_general, P.cpf_bayes, P.cpf_pauli, O.cpf_enumeration):
        with pytest.raises(ConditioningError):
            fn(frozen, triple)


# -- selection rule ----------------------------------------------------------------

def test_selection_rule_single_qubit(rng):
    model = M.trigonometric_model(M.EternalPairSpec.default(1.0, 2.3))
    rho = random_density(1, rng)
    for x, y, z in itertools.product("123", repeat=3):
        if x == y == z:
            continue
        triple = P.MeasurementTriple.pauli(x, y, z, 0.9, 1.4, rho)
        assert abs(P.cpf_general(model, triple).value) < 1e-12
        assert P.cpf_pauli(model, triple).value == 0.0


def _selection_subclass(x, y, z):
    anti = lambda a, b: hadamard_element(a, b) < 0
    return anti(z, y) or (anti(x, z) and not anti(x, y) and not anti(z, y))


def test_selection_rule_two_qubit_subclass():
    rng = np.random.default_rng(11)
    model = M.trigonometric_model(M.EternalPairSpec(2, "11", "22", 1.0, 1.0))
    strings = [s for s in all_indices(2) if s.weight]
    checked = 0
    for _ in range(400):
        x, y, z = (strings[i] for i in rng.integers(len(strings), size=3))
        if x == y == z or not _selection_subclass(x, y, z):
            continue
        triple = P.MeasurementTriple.pauli(x, y, z, 0.7, 1.1, random_density(2, rng))
        assert abs(P.cpf_general(model, triple).value) < 1e-12
        checked += 1
    assert checked > 100


def test_degenerate_projector_counterexample():
    # x = z on qubit 0, y on qubit 1: the middle measurement leaves x untouched
    frozen = HiddenModel(2, ("0",), (), (1.0,))
    triple = P.MeasurementTriple.pauli("10", "01", "10", 0.5, 0.5, mixed(2))
    assert P.cpf_general(frozen, triple).value == pytest.approx(1.0, abs=1e-12)
    assert O.cpf_enumeration(frozen, triple).value == pytest.approx(1.0, abs=1e-12)
    assert P.cpf_pauli(frozen, triple).value == 0.0


# -- trig model at N = 2, 3 --------------------------------------------------------------

def test_bipartite_classification():
    a, b = "11", "22"
    expect = {
        "ab-form": {"10", "20", "01", "02", "31", "32", "13", "23"},
        "c-form": {"30", "03", "21", "12"},
        "zero": {"11", "22", "33"},
    }
    for kind, probes in expect.items():
        for p in probes:
            assert P.classify_bipartite_observables(a, b, p) == kind


@pytest.mark.parametrize("n,a,b", [(2, "11", "22"), (3, "110", "220"), (3, "123", "312")])
def test_n_independence(n, a, b):
    gamma, phi = 1.0, 3.0
    model = M.trigonometric_model(M.EternalPairSpec(n, a, b, gamma, phi))
    fam = propagators(model, [0.6, 1.4])
    t, tau = 0.6, 1.4
    for probe in all_indices(n):
        if probe.weight == 0:
            continue
        kind = P.classify_bipartite_observables(a, b, probe)
        triple = P.MeasurementTriple.pauli(probe, probe, probe, t, tau, mixed(n))
        val = P.cpf_pauli(model, triple, fam).value
        if kind == "zero":
            assert abs(val) < 1e-12
        else:
            ref = P.closed_form_trig("ab" if kind == "ab-form" else "c", gamma, phi, t, tau)
            assert val == pytest.approx(ref, abs=1e-9)
