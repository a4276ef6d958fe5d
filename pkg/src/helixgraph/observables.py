"""Measurements on states: spin currents, entanglement entropy, residuals."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .hilbert import DimensionMismatch, fidelity, n_sites
from .operators import SparseOperator, current_operator
from .spingraph import SpinGraph

log = logging.getLogger(__name__)

MAX_REDUCED_SITES = 14
NORM_TOL = 1e-8


class BadPartition(ValueError):
    pass


class NotNormalized(ValueError):
    pass


class UnknownNode(KeyError):
    pass


def _expect_real(op: SparseOperator, psi: np.ndarray) -> float:
    val = np.vdot(psi, op.matrix @ psi) / np.vdot(psi, psi).real
    if abs(val.imag) > 1e-10:
        log.warning("current expectation has imaginary part %.3e", val.imag)
    return float(val.real)


def edge_current(psi: np.ndarray, k: int, j: int, R: float) -> float:
    """``<j_kj>``: spin current from ``k`` into ``j`` across a bond of weight ``R``."""
    return _expect_real(current_operator(k, j, R, n_sites(psi)), psi)


def _node(g: SpinGraph, k: Union[int, str]) -> int:
    try:
        return g.index(k)
    except KeyError:
        raise UnknownNode(f"unknown node {k!r}") from None


def node_current(psi: np.ndarray, g: SpinGraph, k: Union[int, str]) -> float:
    """Net current out of node ``k``: ``sum_j <j_kj>`` over its bonds."""
    kk = _node(g, k)
    if n_sites(psi) != g.N:
        raise DimensionMismatch(f"state has {n_sites(psi)} sites, graph {g.N}")
    if not g.adjacency[kk]:
        raise ValueError(f"node {g.names[kk]!r} has no bonds")
    op = None
    for j, idx in g.adjacency[kk]:
        term = current_operator(kk, j, g.edges[idx].R, g.N)
        op = term if op is None else op + term
    return _expect_real(op, psi)


def _check_partition(A: Iterable[int], N: int) -> list[int]:
    A = [int(a) for a in A]
    if not A or len(A) >= N:
        raise BadPartition("A must be a proper, non-empty subset of the sites")
    if len(set(A)) != len(A) or any(not 0 <= a < N for a in A):
        raise BadPartition(f"bad site list {A} for N = {N}")
    return sorted(A)


def reduced_density_matrix(psi: np.ndarray, A: Sequence[int]) -> np.ndarray:
    """``rho_A = Tr_B |psi><psi|`` on the sites in ``A`` (sorted, site order = bit order)."""
    N = n_sites(psi)
    A = _check_partition(A, N)
    B = [j for j in range(N) if j not in A]
    # tensor axis a holds site N - 1 - a
    t = psi.reshape((2,) * N)
    axes = [N - 1 - j for j in reversed(A)] + [N - 1 - j for j in reversed(B)]
    M = t.transpose(axes).reshape(1 << len(A), 1 << len(B))
    return M @ M.conj().T


def entanglement_entropy(psi: np.ndarray, A: Sequence[int]) -> float:
    """Von Neumann entropy of ``rho_A`` in nats; ``0 log 0 = 0``."""
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > NORM_TOL:
        raise NotNormalized(f"state norm {nrm:.12g} differs from 1")
    N = n_sites(psi)
    A = _check_partition(A, N)
    B = [j for j in range(N) if j not in A]
    small = A if len(A) <= len(B) else B
    if len(small) > MAX_REDUCED_SITES:
        raise BadPartition(f"both sides exceed {MAX_REDUCED_SITES} sites")
    p = np.linalg.eigvalsh(reduced_density_matrix(psi, small))
    p = np.clip(p, 0.0, None)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def helix_residual(H: SparseOperator, psi: np.ndarray) -> float:
    """``|H psi| / |psi|``."""
    if psi.shape != (H.dim,):
        raise DimensionMismatch(f"state of length {psi.size} for operator of dim {H.dim}")
    return float(np.linalg.norm(H.matrix @ psi) / np.linalg.norm(psi))


@dataclass
class ObservableRecord:
    t: float
    values: dict = field(default_factory=dict)


def observe(psi: np.ndarray, t: float, g: SpinGraph, H: Optional[SparseOperator] = None,
            partition: Optional[Sequence[int]] = None, current_nodes: Sequence = (),
            reference: Optional[np.ndarray] = None) -> ObservableRecord:
    """One row of measurements. Entropy and currents use the normalised state."""
    nrm = float(np.linalg.norm(psi))
    unit = psi / nrm
    vals: dict = {"norm": nrm}
    if H is not None:
        e = np.vdot(unit, H.matrix @ unit)
        vals["energy_re"], vals["energy_im"] = float(e.real), float(e.imag)
    if partition is not None:
        vals["entropy_A"] = entanglement_entropy(unit, partition)
    for k in current_nodes:
        vals[f"J_{g.names[_node(g, k)]}"] = node_current(unit, g, k)
    if reference is not None:
        vals["fidelity"] = fidelity(reference, psi)
    return ObservableRecord(float(t), vals)


def record_columns(g: SpinGraph, energy: bool, entropy: bool, current_nodes: Sequence,
                   with_fidelity: bool) -> list[str]:
    """Fixed CSV column order: t, norm, energy_re, energy_im, entropy_A, J_k (node order), fidelity."""
    cols = ["t", "norm"]
    if energy:
        cols += ["energy_re", "energy_im"]
    if entropy:
        cols.append("entropy_A")
    idx = sorted({_node(g, k) for k in current_nodes})
    cols += [f"J_{g.names[k]}" for k in idx]
    if with_fidelity:
        cols.append("fidelity")
    return cols


def format_row(rec: ObservableRecord, columns: Sequence[str]) -> str:
    out = []
    for c in columns:
        v = rec.t if c == "t" else rec.values[c]
        out.append(f"{v:.12e}")
    return ",".join(out)

