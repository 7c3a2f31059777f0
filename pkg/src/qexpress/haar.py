"""Haar sampling on U(d) and Monte-Carlo estimates of the averaged operator size."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from qexpress.circuits import CircuitTemplate
from qexpress.pauli import operator_size

DEFAULT_RESTARTS = 50


def child_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for work item ``index`` of a run seeded with ``seed``.

    Depends only on (seed, index), so results do not depend on how items are
    split across workers.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def sample_haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random dim x dim unitary via QR of a complex Ginibre matrix with phase fix."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def conjugated_observable(template: CircuitTemplate, gate_unitaries, obs: np.ndarray | None = None) -> np.ndarray:
    """U_theta^dagger M U_theta with the Rot slots replaced by ``gate_unitaries``."""
    u = template.processing_unitary(rot_unitaries=list(gate_unitaries))
    m = template.observable() if obs is None else np.asarray(obs, dtype=complex)
    if m.shape != u.shape:
        raise ValueError(f"observable shape {m.shape} does not match circuit dimension {u.shape}")
    return u.conj().T @ m @ u


@dataclass
class OpSizeEstimate:
    mean: float
    std_dev: float
    n_samples: int
    max_found: float
    argmax_unitaries: list = field(default_factory=list, repr=False)
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_dev": self.std_dev, "n_samples": self.n_samples,
                "max_found": self.max_found}


def _sample_size(template, obs, seed, index, transform=None):
    rng = child_rng(seed, index)
    us = [sample_haar_unitary(2, rng) for _ in range(template.n_rot)]
    if transform is not None:
        us = [transform @ u for u in us]
    return operator_size(conjugated_observable(template, us, obs)), us


def averaged_operator_size(template: CircuitTemplate, obs: np.ndarray | None = None, n_samples: int = 1000,
                           seed: int = 0, workers: int = 1, transform: np.ndarray | None = None) -> OpSizeEstimate:
    """Monte-Carlo average of Size(U^dagger M U) with each Rot slot drawn Haar on U(2).

    Entanglers stay fixed. ``transform``, if given, left-multiplies every sampled
    unitary (used to probe Haar invariance). ``std_dev`` is the sample standard
    deviation, not the standard error.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")

    def work(i):
        return _sample_size(template, obs, seed, i, transform)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(work, range(n_samples)))
    else:
        results = [work(i) for i in range(n_samples)]
    sizes = np.array([r[0] for r in results])
    best = int(np.argmax(sizes))
    return OpSizeEstimate(
        mean=float(sizes.mean()),
        std_dev=float(sizes.std()),
        n_samples=n_samples,
        max_found=float(sizes[best]),
        argmax_unitaries=results[best][1],
        samples=sizes,
    )


def max_operator_size(template: CircuitTemplate, obs: np.ndarray | None = None,
                      restarts: int = DEFAULT_RESTARTS, seed: int = 0, tol: float = 1e-8,
                      maxfev: int | None = None) -> tuple[float, np.ndarray]:
    """Maximise Size over Rot angles with Nelder-Mead from ``restarts`` random starts."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    m = template.observable() if obs is None else np.asarray(obs, dtype=complex)
    if template.n_params == 0:
        u = template.processing_unitary(np.zeros(0))
        return operator_size(u.conj().T @ m @ u), np.zeros(0)

    def neg_size(p):
        u = template.processing_unitary(p)
        return -operator_size(u.conj().T @ m @ u)

    best_val, best_p = -np.inf, None
    maxfev = maxfev or 400 * template.n_params
    for r in range(restarts):
        x0 = child_rng(seed, r).uniform(0, 2 * np.pi, template.n_params)
        res = minimize(neg_size, x0, method="Nelder-Mead",
                       options={"xatol": tol, "fatol": tol, "maxfev": maxfev})
        if -res.fun > best_val:
            best_val, best_p = -res.fun, np.mod(res.x, 2 * np.pi)
    return float(best_val), best_p
