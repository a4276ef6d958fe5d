"""Phantom helix states on XXZ spin graphs.

Build graphs from PT / DMI / isotropic dimers, check the loop phase law
and the current law, construct helix and magnon-sector states, and run
quench dynamics with brute-force exact diagonalisation.
"""

__version__ = "0.1.0"

from .graphspec import parse_experiment, parse_graph, serialize_experiment, serialize_graph
from .spingraph import (
    DimerEdge,
    SpinGraph,
    assign_phases,
    check_hermiticity,
    check_phase_law,
    dimer,
    mixed_fragment,
    ring,
    square_fragment,
    star,
    triangle,
    triangle_fragment,
)
from .operators import SparseOperator, graph_hamiltonian
from .hilbert import helix_state, psi_n
from .dynamics import evolve
from .observables import edge_current, entanglement_entropy, node_current

__all__ = [
    "__version__",
    "parse_graph", "serialize_graph", "parse_experiment", "serialize_experiment",
    "DimerEdge", "SpinGraph", "assign_phases", "check_phase_law", "check_hermiticity",
    "ring", "dimer", "triangle", "star", "triangle_fragment", "square_fragment", "mixed_fragment",
    "SparseOperator", "graph_hamiltonian", "helix_state", "psi_n", "evolve",
    "edge_current", "node_current", "entanglement_entropy",
]
