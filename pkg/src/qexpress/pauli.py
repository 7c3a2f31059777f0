"""Pauli-string expansion of Hermitian operators and the operator size."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from qexpress.simulator import I2, PAULI_X, PAULI_Y, PAULI_Z, check_hermitian

LETTERS = "IXYZ"
_SINGLE = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def n_qubits_of(matrix: np.ndarray) -> int:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"operator must be square, got shape {m.shape}")
    dim = m.shape[0]
    n = dim.bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"operator dimension {dim} is not a power of two")
    return n


def pauli_matrix(letters: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in letters:
        out = np.kron(out, _SINGLE[ch])
    return out


@lru_cache(maxsize=None)
def pauli_basis(n_qubits: int) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """All 4**n strings in lexicographic IXYZ order, their matrices, and their weights."""
    labels = tuple("".join(p) for p in itertools.product(LETTERS, repeat=n_qubits))
    mats = np.stack([pauli_matrix(s) for s in labels]) if n_qubits else np.ones((1, 1, 1), complex)
    weights = np.array([weight(s) for s in labels], dtype=int)
    mats.setflags(write=False)
    weights.setflags(write=False)
    return labels, mats, weights


def weight(s: str) -> int:
    """Number of non-identity letters l(alpha)."""
    return sum(ch != "I" for ch in s)


@dataclass(frozen=True)
class PauliDecomposition:
    n_qubits: int
    terms: dict[str, complex]

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for s, c in self.terms.items():
            out += c * pauli_matrix(s)
        return out

    def size(self) -> float:
        return float(sum(abs(c) ** 2 * weight(s) for s, c in self.terms.items()))


def pauli_coefficients(obs: np.ndarray) -> np.ndarray:
    """c_alpha = Tr(O sigma_alpha) / 2**n for every string, in ``pauli_basis`` order."""
    n = n_qubits_of(obs)
    _, mats, _ = pauli_basis(n)
    # Tr(O P) = sum_ij O_ij P_ji
    return np.einsum("ij,aji->a", np.asarray(obs, dtype=complex), mats) / 2**n


def pauli_decompose(obs: np.ndarray, drop_tol: float = 1e-12) -> PauliDecomposition:
    n = n_qubits_of(obs)
    obs = check_hermitian(obs, atol=1e-10)
    coeffs = pauli_coefficients(obs)
    assert np.all(np.abs(coeffs.imag) < 1e-10), "Hermitian operator produced complex Pauli coefficients"
    labels, _, _ = pauli_basis(n)
    terms = {s: complex(c) for s, c in zip(labels, coeffs) if abs(c) >= drop_tol}
    return PauliDecomposition(n, terms)


def operator_size(obs: np.ndarray) -> float:
    """Size(O) = sum_alpha |c_alpha|^2 l(alpha)."""
    n = n_qubits_of(obs)
    check_hermitian(obs, atol=1e-10)
    _, _, weights = pauli_basis(n)
    coeffs = pauli_coefficients(obs)
    return float(np.sum(np.abs(coeffs) ** 2 * weights))
