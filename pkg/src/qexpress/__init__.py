"""Expressivity diagnostics for small variational quantum circuits.

Three probes are provided: Haar-averaged operator size, teacher/student
prediction-map differences, and partial Fourier series coefficients.
"""

from qexpress.circuits import (
    CircuitTemplate,
    paper_circuit_2q,
    paper_circuit_3q,
    toy_circuit_fig7,
)
from qexpress.simulator import Gate, Statevector, expectation, run_circuit

__all__ = [
    "CircuitTemplate",
    "Gate",
    "Statevector",
    "expectation",
    "paper_circuit_2q",
    "paper_circuit_3q",
    "run_circuit",
    "toy_circuit_fig7",
]

__version__ = "0.1.0"
