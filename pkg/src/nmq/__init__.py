"""Solvable multipartite non-Markovian Pauli-channel dynamics."""
from ._backend import BACKEND
from .pauli import PauliIndex, multiply, hadamard_element, fast_transform, string_matrix

__version__ = "0.1.0"
