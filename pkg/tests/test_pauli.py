import itertools
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nmq.errors import CapacityError, DimensionError
from nmq.pauli import (
    HADAMARD,
    PauliIndex,
    all_indices,
    commutes,
    fast_transform,
    hadamard_element,
    hadamard_matrix,
    multiply,
    num_qubits,
    pauli,
    sandwich,
    string_matrix,
)

from helpers import random_hermitian

digits = st.lists(st.integers(0, 3), min_size=1, max_size=5)


def test_flat_is_little_endian():
    a = PauliIndex((3, 0, 1))
    assert a.flat == 3 + 0 * 4 + 1 * 16
    assert PauliIndex.from_flat(a.flat, 3) == a
    assert a.label == "301"
    assert PauliIndex.from_label("ZIX") == a


@given(digits)
def test_flat_digits_roundtrip(d):
    a = PauliIndex(tuple(d))
    assert PauliIndex.from_flat(a.flat, a.n) == a
    assert 0 <= a.weight <= a.n
    assert (a.weight == 0) == (a.flat == 0)


def test_bad_digits():
    with pytest.raises(ValueError):
        PauliIndex((4,))
    with pytest.raises(DimensionError):
        pauli(5)


@pytest.mark.parametrize("a,b,c,phase", [
    ("1", "2", "3", 1j),
    ("22", "22", "00", 1),
    ("12", "22", "30", 1j),
])
def test_multiply_examples(a, b, c, phase):
    prod = multiply(a, b)
    assert prod.index.label == c
    assert prod.phase == phase


def test_multiply_length_mismatch():
    with pytest.raises(DimensionError):
        multiply("1", "12")


def test_multiply_matches_dense_exhaustive():
    for n in (1, 2):
        for a, b in itertools.product(all_indices(n), repeat=2):
            prod = multiply(a, b)
            lhs = string_matrix(a) @ string_matrix(b)
            assert np.array_equal(lhs, prod.phase * string_matrix(prod.index))


@given(st.lists(st.integers(0, 3), min_size=3, max_size=3),
       st.lists(st.integers(0, 3), min_size=3, max_size=3))
def test_multiply_matches_dense_n3(a, b):
    prod = multiply(a, b)
    assert np.array_equal(string_matrix(a) @ string_matrix(b),
                          prod.phase * string_matrix(prod.index))


def test_hadamard_examples():
    for b in all_indices(3):
        assert hadamard_element("000", b) == 1
    assert hadamard_element("1", "3") == -1
    assert hadamard_element("12", "33") == 1


@given(st.data())
def test_hadamard_symmetric_and_commutation(data):
    n = data.draw(st.integers(1, 3))
    a = PauliIndex(tuple(data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))))
    b = PauliIndex(tuple(data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))))
    assert hadamard_element(a, b) == hadamard_element(b, a)
    Sa, Sb = string_matrix(a), string_matrix(b)
    assert np.allclose(Sa @ Sb, hadamard_element(a, b) * Sb @ Sa)
    assert commutes(a, b) == (hadamard_element(a, b) > 0)


def test_fast_transform_examples():
    assert np.array_equal(fast_transform([1, 0, 0, 0]), [1, 1, 1, 1])
    g = 0.7
    assert np.allclose(fast_transform([-g, 0, 0, g]), [0, -2 * g, -2 * g, 0], atol=0)


def test_fast_transform_bad_length():
    for bad in (3, 8, 1, 32):
        with pytest.raises(DimensionError):
            fast_transform(np.zeros(bad))
    assert num_qubits(256) == 4


@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_fast_transform_matches_dense(n, seed):
    v = np.random.default_rng(seed).normal(size=4 ** n)
    dense = hadamard_matrix(n) @ v
    assert np.max(np.abs(fast_transform(v) - dense)) <= 1e-12 * np.max(np.abs(dense))
    assert np.allclose(fast_transform(fast_transform(v), inverse=True), v, rtol=0, atol=1e-12)


def test_fast_transform_batched_and_complex(rng):
    v = rng.normal(size=(3, 5, 16)) + 1j * rng.normal(size=(3, 5, 16))
    out = fast_transform(v)
    assert out.shape == v.shape
    assert np.allclose(out, v @ hadamard_matrix(2).T)


def test_hadamard_matrix_kron_order():
    # digit 0 is the fast index: H^{(x)2}[a, b] factorizes per digit
    H2 = hadamard_matrix(2)
    for a, b in itertools.product(all_indices(2), repeat=2):
        assert H2[a.flat, b.flat] == HADAMARD[a.digits[0], b.digits[0]] * HADAMARD[a.digits[1], b.digits[1]]


def test_string_matrix_examples():
    assert np.array_equal(string_matrix("0"), np.eye(2))
    assert np.array_equal(string_matrix("3"), np.diag([1, -1]))
    for a, b in itertools.product(all_indices(2), repeat=2):
        tr = np.trace(string_matrix(a) @ string_matrix(b))
        assert tr == (4 if a == b else 0)


def test_string_matrix_properties():
    for a in all_indices(2):
        S = string_matrix(a)
        assert np.array_equal(S, S.conj().T)
        assert np.allclose(S @ S, np.eye(4))
        assert np.trace(S) == (4 if a.flat == 0 else 0)


def test_string_matrix_qubit0_leftmost():
    assert np.array_equal(string_matrix("30"), np.kron(np.diag([1, -1]), np.eye(2)))


def test_dense_limit():
    with pytest.raises(CapacityError):
        string_matrix("0" * 11)
    with pytest.raises(CapacityError):
        string_matrix("123", dense_limit=2)


def test_sandwich_identity(rng):
    for n in (1, 2):
        X = random_hermitian(2 ** n, rng)
        for a, b in itertools.product(all_indices(n), repeat=2):
            Sa, Sb = string_matrix(a), string_matrix(b)
            c = multiply(a, b).index
            Sc = string_matrix(c)
            ref = Sc @ X @ Sc.conj().T
            assert np.allclose(Sa @ Sb @ X @ Sb @ Sa, ref)
            assert np.allclose(Sb @ Sa @ X @ Sa @ Sb, ref)


@given(st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_fast_sandwich_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    X = random_hermitian(2 ** n, rng)
    a = PauliIndex.from_flat(int(rng.integers(4 ** n)), n)
    S = string_matrix(a)
    assert np.allclose(sandwich(a, X), S @ X @ S, atol=1e-14)


def test_transform_scaling_smoke():
    def best(n):
        v = np.ones(4 ** n)
        fast_transform(v)
        return min(_timed(lambda: fast_transform(v)) for _ in range(5))
    t4, t8 = best(4), best(8)
    assert t8 <= 3 * (4 ** 4 * 2) * max(t4, 1e-6)


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0
