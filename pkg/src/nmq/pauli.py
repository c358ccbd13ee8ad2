"""Pauli strings, their products, and the tensor-power Hadamard transform.

A Pauli string on N qubits is labelled by digits ``(a_0, ..., a_{N-1})`` with
0, 1, 2, 3 standing for I, X, Y, Z. The flat index is little-endian base 4
(digit k carries weight ``4**k``), so stage k of the butterfly acts on
digit k with stride ``4**k``. Dense matrices put qubit 0 in the leftmost
Kronecker factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

from . import _backend
from .errors import CapacityError, DimensionError

DENSE_LIMIT = 10

HADAMARD = np.array(
    [[1, 1, 1, 1],
     [1, 1, -1, -1],
     [1, -1, 1, -1],
     [1, -1, -1, 1]],
    dtype=np.float64,
)

SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# _PRODUCT[a][b] = (c, phase) with sigma_a sigma_b = phase sigma_c
_PRODUCT = [[(0, 1) for _ in range(4)] for _ in range(4)]
for _a in range(4):
    _PRODUCT[0][_a] = (_a, 1)
    _PRODUCT[_a][0] = (_a, 1)
    if _a:
        _PRODUCT[_a][_a] = (0, 1)
for _a, _b, _c in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
    _PRODUCT[_a][_b] = (_c, 1j)
    _PRODUCT[_b][_a] = (_c, -1j)
del _a, _b, _c

_LETTERS = "IXYZ"


@dataclass(frozen=True, order=True)
class PauliIndex:
    """Digit vector identifying the Pauli string S_a."""

    digits: tuple

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        if not digits:
            raise DimensionError("a Pauli string needs at least one qubit")
        if any(d < 0 or d > 3 for d in digits):
            raise ValueError(f"Pauli digits must be in 0..3, got {digits}")
        object.__setattr__(self, "digits", digits)

    @classmethod
    def from_flat(cls, flat: int, n: int) -> "PauliIndex":
        if not 0 <= flat < 4 ** n:
            raise ValueError(f"flat index {flat} out of range for N={n}")
        return cls(tuple((flat >> (2 * k)) & 3 for k in range(n)))

    @classmethod
    def from_label(cls, label: str) -> "PauliIndex":
        """Parse ``"301"`` or ``"ZIX"`` (qubit 0 first)."""
        label = label.strip()
        if label and all(ch in _LETTERS for ch in label.upper()) and not label.isdigit():
            return cls(tuple(_LETTERS.index(ch) for ch in label.upper()))
        return cls(tuple(int(ch) for ch in label))

    @property
    def n(self) -> int:
        return len(self.digits)

    @property
    def flat(self) -> int:
        return sum(d << (2 * k) for k, d in enumerate(self.digits))

    @property
    def weight(self) -> int:
        return sum(1 for d in self.digits if d)

    @property
    def label(self) -> str:
        return "".join(str(d) for d in self.digits)

    def __len__(self):
        return len(self.digits)

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class PauliProduct:
    index: PauliIndex
    phase: complex


PauliLike = Union[PauliIndex, str, Iterable[int]]


def pauli(a: PauliLike, n: int | None = None) -> PauliIndex:
    """Coerce a label, digit sequence, or flat integer (needs ``n``) to a PauliIndex."""
    if isinstance(a, PauliIndex):
        idx = a
    elif isinstance(a, str):
        idx = PauliIndex.from_label(a)
    elif isinstance(a, (int, np.integer)):
        if n is None:
            raise DimensionError("flat indices need the number of qubits")
        idx = PauliIndex.from_flat(int(a), n)
    else:
        idx = PauliIndex(tuple(a))
    if n is not None and idx.n != n:
        raise DimensionError(f"expected {n} qubits, got {idx.n}")
    return idx


def _same_length(a: PauliIndex, b: PauliIndex):
    if a.n != b.n:
        raise DimensionError(f"Pauli strings on {a.n} and {b.n} qubits")


def multiply(a: PauliLike, b: PauliLike) -> PauliProduct:
    """Return c and the phase with S_a S_b = phase * S_c."""
    a, b = pauli(a), pauli(b)
    _same_length(a, b)
    phase = 1 + 0j
    digits = []
    for da, db in zip(a.digits, b.digits):
        dc, ph = _PRODUCT[da][db]
        digits.append(dc)
        phase *= ph
    return PauliProduct(PauliIndex(tuple(digits)), phase)


def hadamard_element(a: PauliLike, b: PauliLike) -> float:
    """Matrix element of the N-fold tensor power of the 4x4 Hadamard matrix.

    Equals +1 when S_a and S_b commute and -1 when they anticommute.
    """
    a, b = pauli(a), pauli(b)
    _same_length(a, b)
    out = 1.0
    for da, db in zip(a.digits, b.digits):
        out *= HADAMARD[da, db]
    return out


def commutes(a: PauliLike, b: PauliLike) -> bool:
    return hadamard_element(a, b) > 0


def num_qubits(length: int) -> int:
    """N such that ``length == 4**N``; raises for anything else."""
    n = 0
    size = 1
    while size < length:
        size *= 4
        n += 1
    if size != length or length < 4:
        raise DimensionError(f"length {length} is not a power of 4 (N >= 1)")
    return n


def fast_transform(values, inverse: bool = False) -> np.ndarray:
    """Apply H^{(x)N} (or its inverse H^{(x)N}/4**N) along the last axis.

    Complex input is transformed component-wise. Cost is O(N 4**N) per row.
    """
    arr = np.asarray(values)
    num_qubits(arr.shape[-1])
    if np.iscomplexobj(arr):
        return (fast_transform(arr.real, inverse)
                + 1j * fast_transform(arr.imag, inverse))
    flat = np.ascontiguousarray(arr.reshape(-1, arr.shape[-1]), dtype=np.float64)
    out = _backend.fwht4(flat, bool(inverse))
    return out.reshape(arr.shape)


def hadamard_matrix(n: int) -> np.ndarray:
    """Dense H^{(x)N} in the little-endian flat ordering (for checks only)."""
    out = np.ones((1, 1))
    # kron(A, B) makes A's index the slow one, so digit N-1 goes in first
    for _ in range(n):
        out = np.kron(HADAMARD, out)
    return out


def all_indices(n: int):
    return [PauliIndex.from_flat(f, n) for f in range(4 ** n)]


def _check_dense(n: int, limit: int):
    if n > limit:
        raise CapacityError(f"dense {2 ** n}x{2 ** n} matrices exceed the N={limit} limit")


@lru_cache(maxsize=4096)
def _string_matrix(digits: tuple) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for d in digits:
        out = np.kron(out, SIGMA[d])
    out.setflags(write=False)
    return out


def string_matrix(a: PauliLike, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense 2^N x 2^N matrix of S_a."""
    a = pauli(a)
    _check_dense(a.n, dense_limit)
    return _string_matrix(a.digits)


@lru_cache(maxsize=4096)
def _string_action(digits: tuple):
    n = len(digits)
    dim = 1 << n
    basis = np.arange(dim)
    flip = 0
    phase = np.ones(dim, dtype=complex)
    for k, d in enumerate(digits):
        bit = (basis >> (n - 1 - k)) & 1
        if d in (1, 2):
            flip |= 1 << (n - 1 - k)
        if d == 2:
            phase *= 1j * (1 - 2 * bit)
        elif d == 3:
            phase *= 1 - 2 * bit
    perm = basis ^ flip
    # S|j> = phase[j] |j ^ flip>, so row i of S S-sandwich pulls from i ^ flip
    coeff = phase[perm]
    perm.setflags(write=False)
    coeff.setflags(write=False)
    return perm, coeff


def sandwich(a: PauliLike, rho: np.ndarray) -> np.ndarray:
    """S_a rho S_a without forming S_a (a permutation with phases)."""
    a = pauli(a)
    perm, coeff = _string_action(a.digits)
    if rho.shape != (perm.size, perm.size):
        raise DimensionError(f"state of shape {rho.shape} on {a.n} qubits")
    return coeff[:, None] * rho[np.ix_(perm, perm)] * coeff.conj()[None, :]
