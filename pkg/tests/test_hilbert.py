import io
import math

import numpy as np
import pytest

from conftest import dense_product, spin_state
from helixgraph import hilbert as hb
from helixgraph import operators as op
from helixgraph import spingraph as sg


def test_basis_conventions():
    assert hb.all_down(3)[0] == 1
    assert hb.all_up(3)[7] == 1
    # site 0 up only -> index 1
    up0 = hb.product_state([(0.0, 0.0), (math.pi, 0.0), (math.pi, 0.0)])
    assert abs(up0[1]) == pytest.approx(1.0)
    assert hb.n_sites(up0) == 3
    with pytest.raises(hb.DimensionMismatch):
        hb.n_sites(np.zeros(6))


def test_product_state_matches_oracle(rng):
    angles = [(float(t), float(p)) for t, p in zip(rng.uniform(0, math.pi, 5), rng.uniform(-3, 3, 5))]
    psi = hb.product_state(angles)
    assert np.allclose(psi, dense_product([spin_state(t, p) for t, p in angles]))
    assert hb.norm(psi) == pytest.approx(1.0)
    with pytest.raises(hb.LengthMismatch):
        hb.product_state(angles, N=4)
    with pytest.raises(op.SizeCap):
        hb.product_state([])


def test_helix_state_on_triangle():
    psi, pa = hb.helix_state(sg.triangle(), math.pi / 2)
    expect = dense_product([spin_state(math.pi / 2, k * 2 * math.pi / 3) for k in range(3)])
    assert np.allclose(psi, expect)
    assert pa.root == 0


@pytest.mark.parametrize("N", [1, 3, 5, 6])
def test_psi_n_matches_tau_construction(N, rng):
    lam = rng.uniform(-3, 3, N)
    tp = op.tau_plus(lam).toarray()
    v = hb.all_down(N)
    for n in range(N + 1):
        ref = v / (math.factorial(n) * math.sqrt(math.comb(N, n)))
        assert np.allclose(hb.psi_n(N, lam, n), ref, atol=1e-13)
        v = tp @ v


def test_psi_n_orthonormal(rng):
    N = 5
    lam = rng.uniform(-3, 3, N)
    S = np.array([hb.psi_n(N, lam, n) for n in range(N + 1)])
    assert np.allclose(S.conj() @ S.T, np.eye(N + 1))
    with pytest.raises(ValueError):
        hb.psi_n(N, lam, N + 1)
    with pytest.raises(hb.LengthMismatch):
        hb.psi_n(N, lam[:-1], 1)


def test_helix_decomposes_into_sectors(rng):
    for N in (2, 4, 7):
        lam = rng.uniform(-3, 3, N)
        theta = float(rng.uniform(0, math.pi))
        g, states = hb.helix_sector_states(lam)
        d = hb.helix_coefficients(theta, N)
        assert np.sum(d ** 2) == pytest.approx(1.0)
        rebuilt = g * sum(dn * s for dn, s in zip(d, states))
        assert np.allclose(rebuilt, hb.helix_from_phases(theta, lam), atol=1e-14)


def test_psi_n_are_zero_modes_of_law_graphs():
    for g in (sg.ring(6, 1), sg.triangle_fragment(), sg.mixed_fragment()):
        H = op.graph_hamiltonian(g)
        lam = sg.assign_phases(g).radians()
        _, states = hb.helix_sector_states(lam)
        for s in states:
            assert np.linalg.norm(H.matrix @ s) < 1e-12


def test_inner_fidelity_align(rng):
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    b = 3.0 * np.exp(0.7j) * a
    assert hb.fidelity(a, b) == pytest.approx(1.0)
    c = hb.align_phase(a, b)
    assert hb.inner(a, c).imag == pytest.approx(0.0, abs=1e-12)
    assert hb.inner(a, c).real > 0
    with pytest.raises(hb.DimensionMismatch):
        hb.inner(a, a[:4])


def test_write_state_csv():
    buf = io.StringIO()
    hb.write_state_csv(hb.basis_state(2, 3), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "index,re,im" and len(lines) == 5
    assert lines[4].startswith("3,1.000000000000e+00")
