"""Shared oracles: dense Kronecker-product spin operators, built independently of the package."""

import numpy as np
import pytest

# local basis (|down>, |up>) = (0, 1); site 0 is the least significant bit
SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, 1j], [-1j, 0]], dtype=complex) / 2
SZ = np.diag([-0.5, 0.5]).astype(complex)
SP = np.array([[0, 0], [1, 0]], dtype=complex)  # |down> -> |up>
SM = SP.conj().T
I2 = np.eye(2, dtype=complex)


def site(op, j, N):
    """``op`` on site ``j`` of ``N``: kron(..., op_j, ..., I) with site N-1 leftmost."""
    out = np.ones((1, 1), dtype=complex)
    for k in reversed(range(N)):
        out = np.kron(out, op if k == j else I2)
    return out


def pair(a, i, b, j, N):
    return site(a, i, N) @ site(b, j, N)


def dense_pt(i, j, q, N):
    xy = pair(SX, i, SX, j, N) + pair(SY, i, SY, j, N)
    zz = pair(SZ, i, SZ, j, N) - 0.25 * np.eye(2 ** N)
    return xy + np.cos(q) * zz + 0.5j * np.sin(q) * (site(SZ, i, N) - site(SZ, j, N))


def dense_dmi(i, j, q, N):
    xy = pair(SX, i, SX, j, N) + pair(SY, i, SY, j, N)
    zz = pair(SZ, i, SZ, j, N) - 0.25 * np.eye(2 ** N)
    dm = pair(SX, i, SY, j, N) - pair(SY, i, SX, j, N)
    return np.cos(q) * xy + zz + np.sin(q) * dm


def dense_iso(i, j, J, N):
    ss = sum(pair(S, i, S, j, N) for S in (SX, SY, SZ))
    return J * (ss - 0.25 * np.eye(2 ** N))


def dense_graph(g):
    H = np.zeros((2 ** g.N, 2 ** g.N), dtype=complex)
    for e in g.edges:
        if e.flavor == "ISO":
            H += dense_iso(e.i, e.j, e.R, g.N)
        elif e.flavor == "PT":
            H += e.R * dense_pt(e.i, e.j, e.q_rad, g.N)
        else:
            H += e.R * dense_dmi(e.i, e.j, e.q_rad, g.N)
    return H


def spin_state(theta, phi):
    """Single spin ``cos(theta/2)|up> + e^{i phi} sin(theta/2)|down>``."""
    return np.array([np.exp(1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])


def dense_product(spins):
    """Product state; ``spins[j]`` is site j."""
    v = np.ones(1, dtype=complex)
    for s in reversed(spins):
        v = np.kron(v, s)
    return v


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
