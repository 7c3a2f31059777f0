"""Circuit templates: RX data encoding, Rot/entangler processing, single Z readout."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from qexpress.simulator import Gate, full_matrix, pauli_z_on, rot

CNOT_POSITIONS = ("after_rot", "before_rot")


@dataclass(frozen=True)
class Encoding:
    """RX(x[data]) on ``qubit``."""

    qubit: int
    data: int


@dataclass(frozen=True)
class ParamRot:
    qubit: int


@dataclass(frozen=True)
class FixedEntangler:
    gate: Gate


Slot = Union[ParamRot, FixedEntangler]


@dataclass(frozen=True)
class CircuitTemplate:
    n_qubits: int
    encoding: tuple[Encoding, ...]
    processing: tuple[Slot, ...]
    measure_qubit: int

    def __post_init__(self):
        object.__setattr__(self, "encoding", tuple(self.encoding))
        object.__setattr__(self, "processing", tuple(self.processing))
        if not 0 <= self.measure_qubit < self.n_qubits:
            raise ValueError(f"measurement qubit {self.measure_qubit} outside 0..{self.n_qubits - 1}")
        used = [e.qubit for e in self.encoding]
        if len(set(used)) != len(used):
            raise ValueError("at most one encoding gate per qubit")
        for q in used + [s.qubit for s in self.processing if isinstance(s, ParamRot)]:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"qubit {q} outside 0..{self.n_qubits - 1}")
        for s in self.processing:
            if isinstance(s, FixedEntangler) and max(s.gate.qubits) >= self.n_qubits:
                raise ValueError(f"entangler {s.gate.kind} on {s.gate.qubits} exceeds {self.n_qubits} qubits")
        data = sorted({e.data for e in self.encoding})
        if data != list(range(len(data))):
            raise ValueError(f"data components must be numbered 0..d-1, got {data}")

    @property
    def n_rot(self) -> int:
        return sum(isinstance(s, ParamRot) for s in self.processing)

    @property
    def n_params(self) -> int:
        return 3 * self.n_rot

    @property
    def n_data(self) -> int:
        return len({e.data for e in self.encoding})

    @property
    def n_entanglers(self) -> int:
        return sum(isinstance(s, FixedEntangler) for s in self.processing)

    def observable(self) -> np.ndarray:
        return pauli_z_on(self.measure_qubit, self.n_qubits)

    def _check_params(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float).ravel()
        if params.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {params.size}")
        return params

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n_data:
            raise ValueError(f"expected a {self.n_data}-dimensional data point, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise ValueError("data point must be finite")
        return x

    def encoding_gates(self, x) -> list[Gate]:
        x = self._check_x(x)
        return [Gate("RX", (e.qubit,), (x[e.data],)) for e in self.encoding]

    def processing_gates(self, params) -> list[Gate]:
        params = self._check_params(params)
        gates, k = [], 0
        for s in self.processing:
            if isinstance(s, ParamRot):
                gates.append(Gate("ROT", (s.qubit,), params[k : k + 3]))
                k += 3
            else:
                gates.append(s.gate)
        return gates

    def bind(self, params, x) -> list[Gate]:
        return self.encoding_gates(x) + self.processing_gates(params)

    def processing_unitary(self, params=None, rot_unitaries: Sequence[np.ndarray] | None = None) -> np.ndarray:
        """Full U_theta, from Rot angles or from one explicit 2x2 unitary per Rot slot."""
        if rot_unitaries is None:
            params = self._check_params(params)
            rot_unitaries = [rot(*params[3 * i : 3 * i + 3]) for i in range(self.n_rot)]
        elif len(rot_unitaries) != self.n_rot:
            raise ValueError(f"expected {self.n_rot} single-qubit unitaries, got {len(rot_unitaries)}")
        u = np.eye(2**self.n_qubits, dtype=complex)
        k = 0
        for s in self.processing:
            if isinstance(s, ParamRot):
                u = _embed_single(rot_unitaries[k], s.qubit, self.n_qubits) @ u
                k += 1
            else:
                u = _fixed_full(s.gate, self.n_qubits) @ u
        return u

    def heisenberg_observable(self, params=None, rot_unitaries=None) -> np.ndarray:
        """U_theta^dagger M U_theta."""
        u = self.processing_unitary(params, rot_unitaries)
        return u.conj().T @ self.observable() @ u

    def encoded_states(self, xs) -> np.ndarray:
        """S(x)|0..0> for a batch of data points, shape (batch, 2**n)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if xs.shape[1] != self.n_data:
            raise ValueError(f"expected {self.n_data}-dimensional data points, got {xs.shape[1]}")
        per_qubit = [np.broadcast_to(np.array([1, 0], dtype=complex), (len(xs), 2))] * self.n_qubits
        for e in self.encoding:
            half = xs[:, e.data] / 2
            per_qubit[e.qubit] = np.stack([np.cos(half), -1j * np.sin(half)], axis=1)
        states = per_qubit[0]
        for v in per_qubit[1:]:
            states = (states[:, :, None] * v[:, None, :]).reshape(len(xs), -1)
        return states

    def predict_batch(self, params, xs) -> np.ndarray:
        return expectation_batch(self.encoded_states(xs), self.heisenberg_observable(params))

    def to_dict(self) -> dict:
        processing = []
        for s in self.processing:
            if isinstance(s, ParamRot):
                processing.append({"type": "rot", "qubit": s.qubit})
            else:
                entry = {"type": "gate", "kind": s.gate.kind, "qubits": list(s.gate.qubits)}
                if s.gate.kind == "FIXED_UNITARY":
                    m = s.gate.matrix
                    entry["matrix_re"] = m.real.tolist()
                    entry["matrix_im"] = m.imag.tolist()
                processing.append(entry)
        return {
            "n_qubits": self.n_qubits,
            "encoding": [{"gate": "RX", "qubit": e.qubit, "data": e.data} for e in self.encoding],
            "processing": processing,
            "measurement": {"pauli": "Z", "qubit": self.measure_qubit},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitTemplate":
        encoding = []
        for e in d["encoding"]:
            if e.get("gate", "RX").upper() != "RX":
                raise ValueError(f"only RX encoding is supported, got {e['gate']!r}")
            encoding.append(Encoding(int(e["qubit"]), int(e["data"])))
        processing: list[Slot] = []
        for p in d["processing"]:
            if p["type"] == "rot":
                processing.append(ParamRot(int(p["qubit"])))
            elif p["type"] == "gate":
                matrix = None
                if "matrix_re" in p:
                    matrix = np.array(p["matrix_re"]) + 1j * np.array(p["matrix_im"])
                processing.append(FixedEntangler(Gate(p["kind"], tuple(p["qubits"]), matrix=matrix)))
            else:
                raise ValueError(f"unknown processing slot type {p['type']!r}")
        meas = d["measurement"]
        if meas.get("pauli", "Z") != "Z":
            raise ValueError("only Pauli Z readout is supported")
        return cls(int(d["n_qubits"]), tuple(encoding), tuple(processing), int(meas["qubit"]))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "CircuitTemplate":
        return cls.from_dict(json.loads(text))


def _embed_single(u: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**qubit), u), np.eye(2 ** (n_qubits - qubit - 1)))


_FIXED_CACHE: dict = {}


def _fixed_full(gate: Gate, n_qubits: int) -> np.ndarray:
    if gate.kind == "FIXED_UNITARY":
        return full_matrix(gate, n_qubits)
    key = (gate.kind, gate.qubits, n_qubits)
    if key not in _FIXED_CACHE:
        m = full_matrix(gate, n_qubits)
        m.setflags(write=False)
        _FIXED_CACHE[key] = m
    return _FIXED_CACHE[key]


def expectation_batch(states: np.ndarray, obs: np.ndarray) -> np.ndarray:
    vals = np.einsum("bi,ij,bj->b", states.conj(), obs, states)
    return vals.real


def _rot_layer(qubits=(0, 1)) -> list[Slot]:
    return [ParamRot(q) for q in qubits]


def _cnot(control: int, target: int) -> FixedEntangler:
    return FixedEntangler(Gate("CNOT", (control, target)))


def paper_circuit_2q(n_layers: int = 1, cnot_position: str = "after_rot", measure_qubit: int = 1,
                     control: int = 0) -> CircuitTemplate:
    """Two-qubit family: RX(x1) x RX(x2), then ``n_layers`` blocks of Rot x Rot and a CNOT.

    With ``cnot_position="after_rot"`` each block is Rot x Rot followed by the CNOT, so
    the last gate before the readout is a CNOT. ``"before_rot"`` puts the CNOT first.
    """
    if int(n_layers) != n_layers or n_layers < 1:
        raise ValueError(f"n_layers must be a positive integer, got {n_layers}")
    if cnot_position not in CNOT_POSITIONS:
        raise ValueError(f"cnot_position must be one of {CNOT_POSITIONS}, got {cnot_position!r}")
    if measure_qubit not in (0, 1) or control not in (0, 1):
        raise ValueError("measure_qubit and control must be 0 or 1")
    cnot = _cnot(control, 1 - control)
    processing: list[Slot] = []
    for _ in range(n_layers):
        if cnot_position == "after_rot":
            processing += _rot_layer() + [cnot]
        else:
            processing += [cnot] + _rot_layer()
    return CircuitTemplate(2, (Encoding(0, 0), Encoding(1, 1)), tuple(processing), measure_qubit)


def paper_circuit_3q(n_layers: int = 1) -> CircuitTemplate:
    """Three-qubit family: data on qubits 0 and 1, ancilla 2 read out after a final Toffoli.

    ``n_layers - 1`` blocks of Rot x Rot plus CNOT(0->1), one more Rot x Rot, then the Toffoli.
    """
    if int(n_layers) != n_layers or n_layers < 1:
        raise ValueError(f"n_layers must be a positive integer, got {n_layers}")
    processing: list[Slot] = []
    for _ in range(n_layers - 1):
        processing += _rot_layer() + [_cnot(0, 1)]
    processing += _rot_layer() + [FixedEntangler(Gate("TOFFOLI", (0, 1, 2)))]
    return CircuitTemplate(3, (Encoding(0, 0), Encoding(1, 1)), tuple(processing), 2)


def toy_circuit_fig7(measure_qubit: int = 0) -> CircuitTemplate:
    """Two layers of Rot x Rot + CNOT on two qubits, readout on either qubit."""
    if measure_qubit not in (0, 1):
        raise ValueError(f"measure_qubit must be 0 or 1, got {measure_qubit}")
    return paper_circuit_2q(2, "after_rot", measure_qubit)


def build_circuit(name: str, n_layers: int = 1, cnot_position: str = "after_rot",
                  measure_qubit: int | None = None) -> CircuitTemplate:
    """Look up a circuit family by its CLI name: ``2q``, ``3q`` or ``toy``."""
    if name == "2q":
        return paper_circuit_2q(n_layers, cnot_position, 1 if measure_qubit is None else measure_qubit)
    if name == "3q":
        if measure_qubit not in (None, 2):
            raise ValueError("the 3q circuit is read out on the ancilla (qubit 2)")
        return paper_circuit_3q(n_layers)
    if name == "toy":
        return toy_circuit_fig7(0 if measure_qubit is None else measure_qubit)
    raise ValueError(f"unknown circuit {name!r}; expected 2q, 3q or toy")
