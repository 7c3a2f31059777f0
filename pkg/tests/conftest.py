import numpy as np
import pytest

# Hand-built reference matrices, independent of qexpress.simulator.embed
I = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def kron(*ms):
    out = np.ones((1, 1), dtype=complex)
    for m in ms:
        out = np.kron(out, m)
    return out


def single(u, q, n):
    return kron(*[u if k == q else I for k in range(n)])


def cnot_ref(c, t, n):
    a = [P0 if k == c else I for k in range(n)]
    b = [P1 if k == c else (X if k == t else I) for k in range(n)]
    return kron(*a) + kron(*b)


def toffoli_ref(c1, c2, t, n):
    proj = kron(*[P1 if k in (c1, c2) else I for k in range(n)])
    flip = kron(*[X if k == t else I for k in range(n)])
    return np.eye(2**n) - proj + proj @ flip


def rot_ref(phi, theta, omega):
    from scipy.linalg import expm

    return expm(-0.5j * omega * Z) @ expm(-0.5j * theta * Y) @ expm(-0.5j * phi * Z)


def rx_ref(a):
    from scipy.linalg import expm

    return expm(-0.5j * a * X)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


def record_acceptance(cid, passed, detail):
    _ACCEPTANCE.append((cid, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {cid}: {detail}")
