"""Dense statevector simulator for a handful of qubits.

Qubit 0 is the most significant bit of the basis index, so the basis state
|q0 q1 ... q_{n-1}> sits at index sum(q_k * 2**(n-1-k)). Gates are applied by
embedding their matrix into the full 2**n space; at n <= 4 this is cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ATOL_UNITARY = 1e-12
ATOL_HERMITIAN = 1e-12

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

_N_ANGLES = {"RX": 1, "RY": 1, "RZ": 1, "ROT": 3, "CNOT": 0, "TOFFOLI": 0, "FIXED_UNITARY": 0}
_N_QUBITS = {"RX": 1, "RY": 1, "RZ": 1, "ROT": 1, "CNOT": 2, "TOFFOLI": 3}


class InvalidGateError(ValueError):
    """Raised for malformed gates (wrong angle count, bad qubits, non-unitary matrix)."""


def rx(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def rot(phi: float, theta: float, omega: float) -> np.ndarray:
    """Rot(phi, theta, omega) = RZ(omega) RY(theta) RZ(phi)."""
    return rz(omega) @ ry(theta) @ rz(phi)


CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
TOFFOLI = np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 5, 7, 6]]


@dataclass(frozen=True)
class Gate:
    """A gate instance: kind, angles, qubits, and (for FIXED_UNITARY) a matrix.

    For CNOT the qubits are (control, target); for TOFFOLI (control, control, target).
    """

    kind: str
    qubits: tuple[int, ...]
    angles: tuple[float, ...] = ()
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.upper())
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if self.kind not in _N_ANGLES:
            raise InvalidGateError(f"unknown gate kind {self.kind!r}")
        if len(self.angles) != _N_ANGLES[self.kind]:
            raise InvalidGateError(
                f"{self.kind} takes {_N_ANGLES[self.kind]} angle(s), got {len(self.angles)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise InvalidGateError(f"repeated qubit index in {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise InvalidGateError(f"negative qubit index in {self.qubits}")
        if self.kind == "FIXED_UNITARY":
            if self.matrix is None:
                raise InvalidGateError("FIXED_UNITARY requires a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2 ** len(self.qubits),) * 2:
                raise InvalidGateError(f"matrix shape {m.shape} does not fit {len(self.qubits)} qubit(s)")
            if not np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=ATOL_UNITARY, rtol=0):
                raise InvalidGateError("FIXED_UNITARY matrix is not unitary")
            object.__setattr__(self, "matrix", m)
        elif len(self.qubits) != _N_QUBITS[self.kind]:
            raise InvalidGateError(f"{self.kind} acts on {_N_QUBITS[self.kind]} qubit(s)")


def gate_matrix(gate: Gate) -> np.ndarray:
    """Return the local unitary of ``gate`` (2x2, 4x4 or 8x8)."""
    kind, a = gate.kind, gate.angles
    if kind == "RX":
        return rx(a[0])
    if kind == "RY":
        return ry(a[0])
    if kind == "RZ":
        return rz(a[0])
    if kind == "ROT":
        return rot(*a)
    if kind == "CNOT":
        return CNOT
    if kind == "TOFFOLI":
        return TOFFOLI
    return gate.matrix


def embed(local: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Embed a k-qubit matrix acting on ``qubits`` (in that order) into n qubits."""
    qubits = list(qubits)
    if any(q >= n_qubits for q in qubits):
        raise IndexError(f"qubit index out of range for {n_qubits} qubit(s): {qubits}")
    k = len(qubits)
    rest = [q for q in range(n_qubits) if q not in qubits]
    full = np.kron(local, np.eye(2 ** (n_qubits - k), dtype=complex))
    # full acts on the ordering (qubits..., rest...); permute back to 0..n-1
    order = qubits + rest
    perm = np.argsort(order)
    dims = [2] * n_qubits
    t = full.reshape(dims + dims)
    t = t.transpose(list(perm) + [n_qubits + p for p in perm])
    return t.reshape(2**n_qubits, 2**n_qubits)


def full_matrix(gate: Gate, n_qubits: int) -> np.ndarray:
    return embed(gate_matrix(gate), gate.qubits, n_qubits)


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    return Statevector(state.n_qubits, full_matrix(gate, state.n_qubits) @ state.amps)


def apply_gates(state: Statevector, gates: Iterable[Gate]) -> Statevector:
    for g in gates:
        state = apply_gate(state, g)
    return state


def run_circuit(template, params, x) -> Statevector:
    """Return U_theta S(x) |0...0> for a circuit template."""
    return apply_gates(Statevector.zero(template.n_qubits), template.bind(params, x))


def unitary_of(gates: Iterable[Gate], n_qubits: int) -> np.ndarray:
    u = np.eye(2**n_qubits, dtype=complex)
    for g in gates:
        u = full_matrix(g, n_qubits) @ u
    return u


def check_hermitian(matrix: np.ndarray, atol: float = ATOL_HERMITIAN) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"observable must be square, got shape {m.shape}")
    if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
        raise ValueError("observable is not Hermitian")
    return m


def expectation(state: Statevector, obs: np.ndarray) -> float:
    """<psi|M|psi> as a float; the imaginary residue must be below 1e-10."""
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (state.amps.size, state.amps.size):
        raise ValueError(f"observable shape {obs.shape} does not match {state.n_qubits} qubit(s)")
    val = np.vdot(state.amps, obs @ state.amps)
    assert abs(val.imag) < 1e-10, f"non-real expectation {val}"
    return float(val.real)


def pauli_z_on(qubit: int, n_qubits: int) -> np.ndarray:
    return embed(PAULI_Z, [qubit], n_qubits)
