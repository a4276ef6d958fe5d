import math

import numpy as np
import pytest

from conftest import dense_product, spin_state
from helixgraph import hilbert as hb
from helixgraph import observables as ob
from helixgraph import operators as op
from helixgraph import spingraph as sg


def _random_state(rng, N):
    v = rng.normal(size=2 ** N) + 1j * rng.normal(size=2 ** N)
    return v / np.linalg.norm(v)


def _partial_trace_oracle(psi, A, N):
    """rho_A by explicit sums over basis indices."""
    A = sorted(A)
    B = [j for j in range(N) if j not in A]
    rho = np.zeros((2 ** len(A), 2 ** len(A)), dtype=complex)

    def sub(idx, sites):
        return sum(((idx >> s) & 1) << k for k, s in enumerate(sites))

    for x in range(2 ** N):
        for y in range(2 ** N):
            if sub(x, B) == sub(y, B):
                rho[sub(x, A), sub(y, A)] += psi[x] * np.conj(psi[y])
    return rho


def test_reduced_density_matrix_matches_oracle(rng):
    N = 4
    psi = _random_state(rng, N)
    for A in ([0], [2], [1, 3], [3, 0, 2]):
        assert np.allclose(ob.reduced_density_matrix(psi, A), _partial_trace_oracle(psi, A, N))


def test_entropy_of_products_and_singlet(rng):
    psi = hb.product_state([(float(t), float(p)) for t, p in rng.uniform(0, 3, (5, 2))])
    assert ob.entanglement_entropy(psi, [0, 2]) < 1e-12
    singlet = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
    assert ob.entanglement_entropy(singlet, [0]) == pytest.approx(math.log(2), abs=1e-14)


def test_entropy_symmetry_and_bounds(rng):
    N = 6
    for _ in range(5):
        psi = _random_state(rng, N)
        A = sorted(rng.choice(N, int(rng.integers(1, N)), replace=False).tolist())
        B = [j for j in range(N) if j not in A]
        sa, sb = ob.entanglement_entropy(psi, A), ob.entanglement_entropy(psi, B)
        assert sa == pytest.approx(sb, abs=1e-10)
        assert 0 <= sa <= min(len(A), len(B)) * math.log(2) + 1e-10


def test_entropy_errors(rng):
    psi = _random_state(rng, 3)
    with pytest.raises(ob.NotNormalized):
        ob.entanglement_entropy(2 * psi, [0])
    for bad in ([], [0, 1, 2], [0, 0], [5]):
        with pytest.raises(ob.BadPartition):
            ob.entanglement_entropy(psi, bad)


def test_edge_current_closed_form():
    for theta in (0.4, math.pi / 2, 2.9):
        for q in (0.3, -1.2, math.pi / 2):
            psi = dense_product([spin_state(theta, 0.0), spin_state(theta, q)])
            J = ob.edge_current(psi, 0, 1, 1.0)
            assert J == pytest.approx(-4 * math.sin(theta) ** 2 * math.sin(q), abs=1e-12)
            assert ob.edge_current(psi, 1, 0, 1.0) == pytest.approx(-J, abs=1e-12)
    psi = dense_product([spin_state(math.pi / 2, 0), spin_state(math.pi / 2, math.pi / 2)])
    assert ob.edge_current(psi, 0, 1, 1.0) == pytest.approx(-4.0, abs=1e-12)


def test_helix_node_currents_vanish(rng):
    for g in (sg.ring(6, 1), sg.triangle_fragment(), sg.square_fragment(), sg.mixed_fragment()):
        psi, _ = hb.helix_state(g, float(rng.uniform(0.2, 3.0)))
        assert max(abs(ob.node_current(psi, g, k)) for k in range(g.N)) < 1e-10


def test_node_current_errors():
    g = sg.triangle()
    psi, _ = hb.helix_state(g, 1.0)
    with pytest.raises(ob.UnknownNode):
        ob.node_current(psi, g, "nope")
    with pytest.raises(hb.DimensionMismatch):
        ob.node_current(hb.all_up(4), g, 0)
    lonely = sg.SpinGraph(3, [sg.DimerEdge(0, 1, 0.0, 1.0, "DMI")])
    with pytest.raises(ValueError):
        ob.node_current(hb.all_up(3), lonely, 2)


def test_helix_residual(rng):
    g = sg.square_fragment()
    H = op.graph_hamiltonian(g)
    psi, pa = hb.helix_state(g, 0.8)
    assert ob.helix_residual(H, psi) < 1e-12
    assert ob.helix_residual(H, _random_state(rng, g.N)) > 0.1
    for n in range(g.N + 1):
        assert ob.helix_residual(H, hb.psi_n(g.N, -pa.radians(), n)) < 1e-10
    with pytest.raises(hb.DimensionMismatch):
        ob.helix_residual(H, hb.all_up(3))


def test_observe_and_rows():
    g = sg.mixed_fragment()
    H = op.graph_hamiltonian(g)
    psi, _ = hb.helix_state(g, math.pi / 2, "O")
    rec = ob.observe(2 * psi, 0.5, g, H, partition=[0, 1], current_nodes=["B", "A"], reference=psi)
    cols = ob.record_columns(g, True, True, ["B", "A"], True)
    assert cols == ["t", "norm", "energy_re", "energy_im", "entropy_A", "J_A", "J_B", "fidelity"]
    assert rec.values["norm"] == pytest.approx(2.0)
    assert rec.values["fidelity"] == pytest.approx(1.0)
    assert abs(rec.values["energy_re"]) < 1e-12
    row = ob.format_row(rec, cols)
    assert row.split(",")[0] == "5.000000000000e-01" and len(row.split(",")) == 8
