"""Shared oracle helpers for the test suite.

The dense-matrix constructions here are deliberately independent of the
package's mask algebra: words are rebuilt from their letter form with
explicit kron products, so any bookkeeping error in the bit-mask code
shows up as a numeric mismatch instead of cancelling out.
"""

from __future__ import annotations

import numpy as np
import pytest

from coldspin.pauli import PauliString, PauliSum

SIGMA = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def dense_word(letters: dict[int, str], n_qubits: int) -> np.ndarray:
    """kron of single-qubit letters, qubit 0 on the least significant bit."""
    m = np.ones((1, 1), dtype=np.complex128)
    for q in range(n_qubits - 1, -1, -1):
        m = np.kron(m, SIGMA[letters.get(q, "I")])
    return m


def dense_string(p: PauliString) -> np.ndarray:
    """Dense matrix of a PauliString via its letter form."""
    letters: dict[int, str] = {}
    for token in p.label().split():
        if token == "I":
            break
        letters[int(token[1:])] = token[0]
    return p.letter_coef * dense_word(letters, p.n_qubits)


def dense_sum(ps: PauliSum) -> np.ndarray:
    total = np.zeros((1 << ps.n_qubits, 1 << ps.n_qubits), dtype=np.complex128)
    for s in ps.strings():
        total += dense_string(s)
    return total


def random_string(rng: np.random.Generator, n_qubits: int) -> PauliString:
    x = int(rng.integers(0, 1 << n_qubits))
    z = int(rng.integers(0, 1 << n_qubits))
    coef = complex(rng.normal(), rng.normal())
    return PauliString(n_qubits, x, z, coef)


def random_sum(rng: np.random.Generator, n_qubits: int, n_terms: int) -> PauliSum:
    out = PauliSum(n_qubits)
    for _ in range(n_terms):
        out.add_string(random_string(rng, n_qubits))
    return out


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(20240817))
