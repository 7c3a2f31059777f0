"""Partial Fourier series of the model output f(x) = sum_n c_n exp(-i n.x).

Coefficients are obtained two ways: sampling f on a grid and taking a 2-D DFT,
and reading them off the combined processing+measurement matrix in the
eigenbasis of the encoding generators. Published closed forms for c_{11}
are kept verbatim for comparison.
"""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from qexpress.circuits import CircuitTemplate
from qexpress.haar import child_rng

FREQS = (-1, 0, 1)
FREQ_PAIRS = tuple(itertools.product(FREQS, FREQS))
BAND_TOL = 1e-10
DEFAULT_GRID = 8

# Rows of V are the eigenvectors of sigma_x / 2 for eigenvalues (-1/2, +1/2),
# so RX(x) = V^dagger diag(exp(-i x lambda)) V.
ENCODING_EIGVALS = np.array([-0.5, 0.5])
ENCODING_V = np.array([[1, -1], [1, 1]], dtype=complex) / np.sqrt(2)


class BandLimitError(RuntimeError):
    """Raised when a sampled model has power outside the expected frequency set."""


@dataclass(frozen=True)
class FourierSpectrum:
    coeffs: dict[tuple[int, int], complex]

    def __getitem__(self, n):
        return self.coeffs.get(tuple(n), 0j)

    def as_array(self) -> np.ndarray:
        """3x3 array indexed by (n1 + 1, n2 + 1)."""
        out = np.zeros((3, 3), dtype=complex)
        for (n1, n2), c in self.coeffs.items():
            out[n1 + 1, n2 + 1] = c
        return out

    def evaluate(self, x) -> complex:
        x = np.asarray(x, dtype=float)
        return complex(sum(c * np.exp(-1j * (n[0] * x[0] + n[1] * x[1])) for n, c in self.coeffs.items()))

    def hermitian_residual(self) -> float:
        return max(abs(self[(-a, -b)] - np.conj(self[(a, b)])) for a, b in FREQ_PAIRS)


def sample_grid(template: CircuitTemplate, params, grid_size: int) -> np.ndarray:
    """f on the grid x_k = 2 pi k / grid_size, shape (grid_size, grid_size)."""
    xs = 2 * np.pi * np.arange(grid_size) / grid_size
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    vals = template.predict_batch(params, np.column_stack([x1.ravel(), x2.ravel()]))
    return vals.reshape(grid_size, grid_size)


def dft_coefficients(values: np.ndarray) -> np.ndarray:
    """Full coefficient grid: entry [n1 % G, n2 % G] is c_{n1, n2} under exp(-i n.x)."""
    # c_n = (1/G^2) sum_x f(x) exp(+i n.x), which is numpy's normalised inverse FFT
    return np.fft.ifft2(values)


def extract_spectrum_dft(template: CircuitTemplate, params, grid_size: int = DEFAULT_GRID,
                         check_band: bool = True) -> FourierSpectrum:
    if template.n_data != 2:
        raise ValueError("spectrum extraction expects two data components")
    if grid_size < 3:
        raise ValueError(f"grid_size must be >= 3 to resolve frequencies -1, 0, 1; got {grid_size}")
    c = dft_coefficients(sample_grid(template, params, grid_size))
    g = grid_size
    coeffs = {(n1, n2): complex(c[n1 % g, n2 % g]) for n1, n2 in FREQ_PAIRS}
    if check_band:
        mask = np.ones_like(c, dtype=bool)
        for n1, n2 in FREQ_PAIRS:
            mask[n1 % g, n2 % g] = False
        leak = float(np.max(np.abs(c[mask]), initial=0.0))
        if leak >= BAND_TOL:
            raise BandLimitError(f"power {leak:.3e} outside frequencies {{-1,0,1}}^2")
    return FourierSpectrum(coeffs)


@dataclass(frozen=True)
class VariationalMeasurement:
    m_bar: np.ndarray
    psi_prime: np.ndarray
    lambdas: np.ndarray  # (2**n, n_data) frequency vector of each basis state
    m_prime: np.ndarray = field(repr=False)


def encoding_basis_change(template: CircuitTemplate) -> np.ndarray:
    """Tensor product of V on encoded qubits and identity elsewhere."""
    encoded = {e.qubit for e in template.encoding}
    out = np.ones((1, 1), dtype=complex)
    for q in range(template.n_qubits):
        out = np.kron(out, ENCODING_V if q in encoded else np.eye(2))
    return out


def basis_frequencies(template: CircuitTemplate) -> np.ndarray:
    n = template.n_qubits
    lam = np.zeros((2**n, template.n_data))
    for j in range(2**n):
        for e in template.encoding:
            bit = (j >> (n - 1 - e.qubit)) & 1
            lam[j, e.data] += ENCODING_EIGVALS[bit]
    return lam


def variational_measurement(template: CircuitTemplate, params) -> VariationalMeasurement:
    """M_bar = U'^dagger M' U' with U' = V U V^dagger, M' = V M V^dagger, psi' = V|0>."""
    v = encoding_basis_change(template)
    u = template.processing_unitary(params)
    u_p = v @ u @ v.conj().T
    m_p = v @ template.observable() @ v.conj().T
    m_bar = u_p.conj().T @ m_p @ u_p
    psi0 = np.zeros(2**template.n_qubits, dtype=complex)
    psi0[0] = 1
    return VariationalMeasurement(m_bar, v @ psi0, basis_frequencies(template), m_p)


def spectrum_from_matrix(vm: VariationalMeasurement) -> FourierSpectrum:
    """c_n = sum over (j, k) with Lambda_k - Lambda_j = n of conj(psi'_j) M_bar_jk psi'_k."""
    weighted = np.conj(vm.psi_prime)[:, None] * vm.m_bar * vm.psi_prime[None, :]
    diff = np.rint(vm.lambdas[None, :, :] - vm.lambdas[:, None, :]).astype(int)
    coeffs = {n: 0j for n in FREQ_PAIRS}
    for j, k in zip(*np.nonzero(np.abs(weighted) > 0)):
        n = tuple(diff[j, k])
        coeffs[n] = coeffs.get(n, 0j) + complex(weighted[j, k])
    return FourierSpectrum(coeffs)


def analytic_c11_2q(angles) -> complex:
    """Closed form for c_{11} of the two-qubit circuit, angles (phi1, theta1, omega1, phi2, theta2, omega2).

    Transcribed term by term from the published expression. It equals
    ``-conj(c_{11})`` under the exp(-i n.x) convention used here.
    """
    p1, t1, w1, p2, t2, w2 = map(float, angles)
    s, c = np.sin, np.cos
    k2 = s(p2 / 2 + w2 / 2) * c(-p2 / 2 + w2 / 2) - c(p2 / 2 + w2 / 2) * s(-p2 / 2 + w2 / 2)
    re = (
        s(t2 / 2) * s(p1 / 2 + w1 / 2) * c(t1 / 2) * c(t2 / 2) * s(t1 / 2) * c(-p1 / 2 + w1 / 2) * k2
        - s(t2 / 2) * s(-p1 / 2 + w1 / 2) * c(t1 / 2) * c(t2 / 2) * s(t1 / 2) * c(p1 / 2 + w1 / 2) * k2
        + 0.25 * (-4 * c(t2 / 2) ** 2 + 2) * c(t1 / 2) ** 2
        + 0.5 * c(t2 / 2) ** 2
        - 0.25
    )
    im = (
        -(c(t2 / 2) ** 2 - 0.5) * s(t1 / 2) * s(p1 / 2 + w1 / 2) * c(t1 / 2) * c(-p1 / 2 + w1 / 2)
        + (c(t2 / 2) ** 2 - 0.5) * s(-p1 / 2 + w1 / 2) * s(t1 / 2) * c(t1 / 2) * c(p1 / 2 + w1 / 2)
        - s(t2 / 2) * c(t2 / 2) * k2 * (c(t1 / 2) ** 2 - 0.5)
    )
    return complex(re, im)


def analytic_c11_3q(angles) -> complex:
    """Closed form for c_{11} of the three-qubit circuit, transcribed as published.

    Agrees with the simulated coefficient only on special angle sets (e.g. all
    phi = 0 and theta2 = 0); the published expression does not match the circuit in general.
    """
    p1, t1, w1, p2, t2, w2 = map(float, angles)
    s, c = np.sin, np.cos
    re = (
        -1 / 8
        - 1 / 8 * (-2 + 4 * c(t2 / 2) ** 2) * c(t1 / 2) ** 2
        + 0.5 * s(p2) * s(t1) * s(t1 / 2) * s(t2 / 2) * c(t2 / 2) * c(t1 / 2)
        + 0.25 * c(t2 / 2) ** 2
    )
    im = (
        0.5 * s(p2) * s(t2 / 2) * c(t2 / 2) * c(t1 / 2) ** 2
        - 0.5 * s(p1) * (c(t2 / 2) ** 2 - 0.5) * s(t1 / 2) * c(t1 / 2)
        + 0.25 * s(t2 / 2) * c(t2 / 2) * s(t2)
    )
    return complex(re, im)


def align_published_c11(value: complex) -> complex:
    """Map a published-convention c_{11} onto this package's c_{11}: negate and conjugate."""
    return -np.conj(value)


def c11_product_form(angles, ancilla: bool = False) -> complex:
    """Factorised c_{11} derived from f = g1(x1) g2(x2) (2q) or (1 + g1 + g2 - g1 g2)/2 (3q)."""
    p1, t1, _, p2, t2, _ = map(float, angles)
    a = (np.cos(t1) - 1j * np.sin(t1) * np.sin(p1)) / 2
    b = (np.cos(t2) - 1j * np.sin(t2) * np.sin(p2)) / 2
    return complex(-a * b / 2 if ancilla else a * b)


@dataclass
class CoefficientCloud:
    draws: list[tuple[int, FourierSpectrum]]
    params: list[np.ndarray] = field(default_factory=list, repr=False)

    def stack(self) -> np.ndarray:
        """(n_draws, 9) complex array in FREQ_PAIRS order."""
        return np.array([[s[n] for n in FREQ_PAIRS] for _, s in self.draws])

    @property
    def summary(self) -> dict[tuple[int, int], dict[str, float]]:
        a = self.stack()
        out = {}
        for i, n in enumerate(FREQ_PAIRS):
            col = a[:, i]
            out[n] = {
                "re_mean": float(col.real.mean()),
                "re_std": float(col.real.std()),
                "im_mean": float(col.imag.mean()),
                "im_std": float(col.imag.std()),
            }
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["draw_id", "n1", "n2", "re", "im"])
        for draw_id, spectrum in self.draws:
            for n1, n2 in FREQ_PAIRS:
                c = spectrum[(n1, n2)]
                w.writerow([draw_id, n1, n2, repr(float(c.real)), repr(float(c.imag))])
        return buf.getvalue()


def random_angles(template: CircuitTemplate, seed: int, index: int) -> np.ndarray:
    return child_rng(seed, index).uniform(0, 2 * np.pi, template.n_params)


def coefficient_cloud(template: CircuitTemplate, n_draws: int, seed: int = 0, grid_size: int = DEFAULT_GRID,
                      method: str = "dft", workers: int = 1) -> CoefficientCloud:
    """Spectra for ``n_draws`` independent uniform-angle draws."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")

    def one(i):
        p = random_angles(template, seed, i)
        if method == "dft":
            return p, extract_spectrum_dft(template, p, grid_size)
        if method == "matrix":
            return p, spectrum_from_matrix(variational_measurement(template, p))
        raise ValueError(f"unknown method {method!r}")

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            res = list(pool.map(one, range(n_draws)))
    else:
        res = [one(i) for i in range(n_draws)]
    return CoefficientCloud([(i, s) for i, (_, s) in enumerate(res)], [p for p, _ in res])
