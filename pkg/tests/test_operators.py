import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.io

from conftest import (SM, SP, SZ, dense_dmi, dense_graph, dense_iso, dense_product, dense_pt,
                      pair, site, spin_state)
from helixgraph import operators as op
from helixgraph import spingraph as sg
from helixgraph.hilbert import helix_state


def phis(q):
    """|up up>, |down down>, e^{iq/2}|up_i down_j> + e^{-iq/2}|down_i up_j> with i = 0, j = 1."""
    up, dn = np.array([0, 1]), np.array([1, 0])
    return [dense_product([up, up]), dense_product([dn, dn]),
            np.exp(0.5j * q) * dense_product([up, dn]) + np.exp(-0.5j * q) * dense_product([dn, up])]


@pytest.mark.parametrize("i, j, N", [(0, 1, 2), (1, 0, 2), (0, 2, 3), (2, 1, 4), (3, 0, 4)])
def test_dimers_match_dense_oracle(i, j, N, rng):
    for q in rng.uniform(-4, 4, 5):
        assert np.allclose(op.dimer_pt(i, j, q, N).toarray(), dense_pt(i, j, q, N), atol=1e-14)
        assert np.allclose(op.dimer_dmi(i, j, q, N).toarray(), dense_dmi(i, j, q, N), atol=1e-14)
    assert np.allclose(op.dimer_iso(i, j, 0.7, N).toarray(), dense_iso(i, j, 0.7, N), atol=1e-14)


def test_dimer_zero_modes(rng):
    for q in rng.uniform(-math.pi, math.pi, 20):
        for build in (op.dimer_pt, op.dimer_dmi):
            H = build(0, 1, q, 2)
            for phi in phis(q):
                assert np.linalg.norm(H.matrix @ phi) < 1e-14


def test_pt_dimer_reversal():
    a = op.dimer_pt(0, 1, 0.7, 3).toarray()
    b = op.dimer_pt(1, 0, -0.7, 3).toarray()
    assert np.allclose(a, b)
    assert np.allclose(op.dimer_dmi(0, 1, 0.7, 3).toarray(), op.dimer_dmi(1, 0, -0.7, 3).toarray())


def test_hermiticity_flags():
    assert op.dimer_dmi(0, 1, 0.3, 2).is_hermitian()
    assert not op.dimer_pt(0, 1, 0.3, 2).is_hermitian()
    assert op.dimer_pt(0, 1, Fraction(1), 2).hermitian
    assert op.dimer_pt(0, 1, 0.3, 2).anti_hermitian_norm() == pytest.approx(math.sin(0.3))


def test_q_zero_reduces_to_heisenberg():
    assert np.allclose(op.dimer_pt(0, 1, 0.0, 2).toarray(), dense_iso(0, 1, 1.0, 2))
    assert np.allclose(op.dimer_dmi(0, 1, 0.0, 2).toarray(), dense_iso(0, 1, 1.0, 2))


def test_bad_sites():
    with pytest.raises(IndexError):
        op.dimer_pt(0, 0, 0.1, 2)
    with pytest.raises(IndexError):
        op.dimer_dmi(0, 3, 0.1, 3)
    with pytest.raises(IndexError):
        op.perturb_local_field(1.0, 5, 3)


@pytest.mark.parametrize("builder", [
    lambda: sg.ring(6, 1), lambda: sg.ring(5, 2, "DMI"), sg.triangle,
    lambda: sg.triangle(flavor="DMI"), sg.triangle_fragment, sg.square_fragment,
])
def test_graph_hamiltonian_matches_oracle_and_kills_helix(builder, rng):
    g = builder()
    H = op.graph_hamiltonian(g)
    assert np.allclose(H.toarray(), dense_graph(g), atol=1e-13)
    assert H.hermitian and H.anti_hermitian_norm() < 1e-12
    for theta in rng.uniform(0, math.pi, 3):
        psi, _ = helix_state(g, theta)
        assert np.linalg.norm(H.matrix @ psi) < 1e-12


def test_embedded_single_pt_dimer_hint_is_false():
    g = sg.SpinGraph(3, [sg.DimerEdge(0, 1, Fraction(1, 2)), sg.DimerEdge(1, 2, Fraction(0), 1.0, "DMI")])
    H = op.graph_hamiltonian(g)
    assert H.hermitian is False and H.anti_hermitian_norm() > 0.1


def test_hint_disagreement_is_caught(monkeypatch):
    g = sg.triangle()
    monkeypatch.setattr(op, "check_hermiticity", lambda g: sg.HermiticityReport(False, (1.0,)))
    with pytest.raises(op.HermiticityMismatch):
        op.graph_hamiltonian(g)


def test_uniform_field_commutes():
    g = sg.ring(6, 1)
    H = op.graph_hamiltonian(g).toarray()
    P = op.perturb_uniform_field(1.0, 6).toarray()
    assert np.linalg.norm(P @ H - H @ P) < 1e-12


def test_local_field_spectrum():
    w = np.linalg.eigvalsh(op.perturb_local_field(1.5, 2, 4).toarray())
    assert np.allclose(np.sort(w), [-0.75] * 8 + [0.75] * 8)


def test_q_shift_is_exact_difference_and_first_order_ising():
    g = sg.ring(6, 1)
    dq = 1e-4
    P = op.perturb_q_shift(g, dq).toarray()
    exact = dense_graph(g.with_phases(dq)) - dense_graph(g)
    assert np.allclose(P, exact, atol=1e-15)
    ising = op.ising_shift(g, dq, include_constant=True).toarray()
    assert np.linalg.norm(P - ising, 2) < 6 * dq ** 2
    # without the constant: -dq sin q sum s^z s^z
    zz = sum(pair(SZ, j, SZ, (j + 1) % 6, 6) for j in range(6))
    bare = op.ising_shift(g, dq, include_constant=False).toarray()
    assert np.allclose(bare, -dq * math.sin(math.pi / 3) * zz)


def test_q_shift_hermiticity_follows_the_graph():
    assert op.perturb_q_shift(sg.mixed_fragment(), 0.05 * math.pi).hermitian
    assert not op.perturb_q_shift(sg.triangle_fragment(), 0.05 * math.pi).hermitian


def test_current_operator_dense_and_antisymmetric():
    N = 3
    J = op.current_operator(0, 2, 1.5, N).toarray()
    oracle = 8j * 1.5 * (pair(SM, 0, SP, 2, N) - pair(SM, 2, SP, 0, N))
    assert np.allclose(J, oracle)
    assert np.allclose(J, J.conj().T)
    assert np.allclose(op.current_operator(2, 0, 1.5, N).toarray(), -J)


def test_tau_algebra():
    N = 4
    lam = np.array([0.1, 1.2, -0.7, 2.0])
    tp, tm = op.tau_plus(lam).toarray(), op.tau_minus(lam).toarray()
    Sz = op.total_sz(N).toarray()
    assert np.allclose(tp @ tm - tm @ tp, 2 * Sz)
    assert np.allclose(tp @ Sz - Sz @ tp, -tp)
    assert np.allclose(tm @ Sz - Sz @ tm, tm)
    oracle = sum(np.exp(1j * lam[j]) * site(SP, j, N) for j in range(N))
    assert np.allclose(tp, oracle)


def test_tau_generates_zero_modes():
    g = sg.ring(6, 1)
    lam = sg.assign_phases(g).radians()
    H = op.graph_hamiltonian(g).toarray()
    tp = op.tau_plus(-lam).toarray()
    v = np.zeros(64, dtype=complex)
    v[0] = 1.0
    for n in range(7):
        assert np.linalg.norm(H @ v) < 1e-12 * max(1.0, np.linalg.norm(v))
        v = tp @ v
    assert np.linalg.norm(v) == 0  # (tau^+)^7 annihilates six spins


def test_operator_arithmetic_and_export(tmp_path):
    A = op.dimer_dmi(0, 1, 0.2, 2)
    B = op.dimer_pt(0, 1, 0.2, 2)
    assert (A + A).hermitian and (A + B).hermitian is None
    assert (2 * A).hermitian and (1j * A).hermitian is None
    assert np.allclose((A - B).toarray(), A.toarray() - B.toarray())
    assert np.allclose((A @ B).toarray(), A.toarray() @ B.toarray())
    assert np.allclose((-A).toarray(), -A.toarray())
    path = tmp_path / "a.mtx"
    A.write_matrix_market(str(path))
    assert np.allclose(scipy.io.mmread(str(path)).toarray(), A.toarray())


def test_size_cap():
    with pytest.raises(op.SizeCap):
        op.total_sz(op.MAX_SITES + 1)
    with pytest.raises(ValueError):
        op.SparseOperator(np.zeros((3, 3)))


def test_two_site_helix_current_oracle():
    """Two-site brute force: helix segment with step q carries -4 R sin^2(theta) sin q."""
    for theta in (0.3, math.pi / 2, 2.5):
        for q in (0.4, math.pi / 2, -2.0):
            psi = dense_product([spin_state(theta, 0.0), spin_state(theta, q)])
            J = op.current_operator(0, 1, 1.0, 2).expectation(psi).real
            assert J == pytest.approx(-4 * math.sin(theta) ** 2 * math.sin(q), abs=1e-12)
