import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import I, Z, cnot_ref, kron, rot_ref, toffoli_ref
from qexpress.pauli import pauli_decompose, pauli_matrix, operator_size, weight
from qexpress.simulator import rz


def random_hermitian(rng, n):
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    return (a + a.conj().T) / 2


def brute_force_terms(obs):
    """Independent decomposition: explicit trace against every Pauli string."""
    import itertools

    n = int(np.log2(len(obs)))
    mats = {"I": I, "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]), "Z": Z}
    out = {}
    for letters in itertools.product("IXYZ", repeat=n):
        p = kron(*[mats[ch] for ch in letters])
        c = np.trace(obs @ p) / 2**n
        if abs(c) > 1e-12:
            out["".join(letters)] = c
    return out


class TestDecompose:
    def test_z_i(self):
        assert pauli_decompose(kron(Z, I)).terms == {"ZI": 1}

    def test_identity(self):
        assert pauli_decompose(np.eye(4)).terms == {"II": 1}

    def test_cnot_conjugated(self):
        c = cnot_ref(0, 1, 2)
        d = pauli_decompose(c.conj().T @ kron(I, Z) @ c)
        assert d.terms.keys() == {"ZZ"}
        assert abs(d.terms["ZZ"] - 1) < 1e-12

    def test_toffoli_conjugated_matches_brute_force(self):
        t = toffoli_ref(0, 1, 2, 3)
        obs = t.conj().T @ kron(I, I, Z) @ t
        d = pauli_decompose(obs)
        ref = brute_force_terms(obs)
        assert d.terms.keys() == ref.keys() == {"IIZ", "IZZ", "ZIZ", "ZZZ"}
        for k in ref:
            assert abs(d.terms[k] - ref[k]) < 1e-12

    @pytest.mark.parametrize("shape", [(3, 3), (2, 4), (6, 6)])
    def test_bad_shapes(self, shape):
        with pytest.raises(ValueError):
            pauli_decompose(np.zeros(shape))

    def test_round_trip_random_hermitian(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 4))
            h = random_hermitian(rng, n)
            d = pauli_decompose(h)
            assert all(abs(c.imag) < 1e-10 for c in d.terms.values())
            assert np.max(np.abs(d.to_matrix() - h)) < 1e-10

    def test_parseval_conjugated_z(self, rng):
        for _ in range(50):
            r = rot_ref(*rng.uniform(0, 2 * np.pi, 3))
            d = pauli_decompose(kron(r.conj().T @ Z @ r, I, I))
            assert abs(sum(abs(c) ** 2 for c in d.terms.values()) - 1) < 1e-10


class TestWeightAndSize:
    @pytest.mark.parametrize("s,w", [("IIII", 0), ("IZI", 1), ("XYZ", 3)])
    def test_weight(self, s, w):
        assert weight(s) == w

    def test_sizes(self):
        assert operator_size(kron(I, Z)) == pytest.approx(1.0, abs=1e-14)
        assert operator_size(kron(Z, Z)) == pytest.approx(2.0, abs=1e-14)

    def test_rot_then_cnot_size_is_two(self, rng):
        c = cnot_ref(0, 1, 2)
        for _ in range(100):
            u = c @ kron(rot_ref(*rng.uniform(0, 7, 3)), rot_ref(*rng.uniform(0, 7, 3)))
            obs = u.conj().T @ kron(I, Z) @ u
            ref = sum(abs(c_) ** 2 * weight(s) for s, c_ in brute_force_terms(obs).items())
            assert abs(operator_size(obs) - 2) < 1e-10
            assert abs(ref - 2) < 1e-10

    @given(st.floats(-10, 10))
    def test_rz_commutes_with_z(self, gamma):
        r = kron(I, rz(gamma))
        assert abs(operator_size(r.conj().T @ kron(I, Z) @ r) - 1) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_size_bounds_normalised(self, n, seed):
        rng = np.random.default_rng(seed)
        h = random_hermitian(rng, n)
        h -= np.trace(h) / 2**n * np.eye(2**n)
        h /= np.sqrt(np.trace(h @ h).real / 2**n)
        assert -1e-12 <= operator_size(h) <= n + 1e-12

    def test_pauli_matrix_order(self):
        np.testing.assert_allclose(pauli_matrix("ZI"), kron(Z, I))
