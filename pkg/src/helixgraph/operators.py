"""Sparse many-body operators on ``2**N`` spin-1/2 states.

Basis convention (shared by every module): bit ``j`` of a basis index is
site ``j``, ``1`` meaning spin up, site 0 the least significant bit.
``s^+ = s^x + i s^y`` raises ``|down> -> |up>``.
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from . import phases
from .phases import Phase
from .spingraph import SpinGraph, check_hermiticity

MAX_SITES = 24
DROP_BELOW = 1e-15
# <j_kj> on a two-site helix segment is -4 R sin^2(theta) sin(q) with this prefactor
CURRENT_PREFACTOR = 8.0


class SizeCap(ValueError):
    pass


class HermiticityMismatch(RuntimeError):
    """Structural and numerical Hermiticity verdicts disagree (a sign-convention bug)."""


def _dim(N: int) -> int:
    if not 1 <= N <= MAX_SITES:
        raise SizeCap(f"N = {N} outside 1..{MAX_SITES}")
    return 1 << N


def _basis(N: int) -> np.ndarray:
    return np.arange(_dim(N), dtype=np.int64)


def _bit(idx: np.ndarray, j: int) -> np.ndarray:
    return (idx >> j) & 1


def _rad(q: Union[Phase, float]) -> float:
    return phases.to_radians(q)


class SparseOperator:
    """Complex CSR matrix with a Hermiticity hint (``True``/``False``/``None`` = unknown).

    Entries are deduplicated, sorted, and anything below 1e-15 in
    magnitude is dropped at construction.
    """

    __slots__ = ("matrix", "hermitian")

    def __init__(self, matrix, hermitian: Optional[bool] = None):
        m = sp.csr_matrix(matrix, dtype=complex)
        m.sum_duplicates()
        m.data[np.abs(m.data) < DROP_BELOW] = 0
        m.eliminate_zeros()
        m.sort_indices()
        n, n2 = m.shape
        if n != n2 or n < 2 or n & (n - 1):
            raise ValueError(f"operator shape {m.shape} is not 2**N square")
        self.matrix = m
        self.hermitian = hermitian

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return self.dim.bit_length() - 1

    def __repr__(self) -> str:
        return f"SparseOperator(N={self.n_sites}, nnz={self.matrix.nnz}, hermitian={self.hermitian})"

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.matrix @ other.matrix)
        return self.matrix @ other

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.matrix + other.matrix, _both(self.hermitian, other.hermitian))

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.matrix - other.matrix, _both(self.hermitian, other.hermitian))

    def __neg__(self) -> "SparseOperator":
        return SparseOperator(-self.matrix, self.hermitian)

    def __mul__(self, c) -> "SparseOperator":
        c = complex(c)
        herm = self.hermitian if c.imag == 0 else None
        return SparseOperator(self.matrix * c, herm)

    __rmul__ = __mul__

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T, self.hermitian)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def anti_hermitian_norm(self) -> float:
        """Largest entry of ``|H - H^dagger|``."""
        d = self.matrix - self.matrix.conj().T
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        if self.hermitian is not None:
            return self.hermitian
        return self.anti_hermitian_norm() <= tol

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.matrix @ psi) / np.vdot(psi, psi).real)

    def write_matrix_market(self, target) -> None:
        from scipy.io import mmwrite

        mmwrite(target, self.matrix.tocoo(), field="complex")


def _both(a: Optional[bool], b: Optional[bool]) -> Optional[bool]:
    return True if (a and b) else None


def _check_pair(i: int, j: int, N: int) -> None:
    if i == j:
        raise IndexError(f"dimer needs two distinct sites, got {i} twice")
    for s in (i, j):
        if not 0 <= s < N:
            raise IndexError(f"site {s} outside 0..{N - 1}")


def _two_site(i: int, j: int, N: int, diag: np.ndarray, raise_i: complex,
              lower_i: complex, hermitian: Optional[bool]) -> SparseOperator:
    """``diag`` plus ``raise_i * s_i^+ s_j^-`` plus ``lower_i * s_i^- s_j^+``."""
    idx = _basis(N)
    bi, bj = _bit(idx, i), _bit(idx, j)
    flip = (1 << i) | (1 << j)
    up_src = idx[(bi == 0) & (bj == 1)]  # s_i^+ s_j^- acts here
    dn_src = idx[(bi == 1) & (bj == 0)]
    rows = np.concatenate([idx, up_src ^ flip, dn_src ^ flip])
    cols = np.concatenate([idx, up_src, dn_src])
    vals = np.concatenate([diag.astype(complex), np.full(up_src.size, raise_i, complex),
                           np.full(dn_src.size, lower_i, complex)])
    m = sp.coo_matrix((vals, (rows, cols)), shape=(idx.size, idx.size))
    return SparseOperator(m, hermitian)


def _sz(N: int, j: int) -> np.ndarray:
    return _bit(_basis(N), j) - 0.5


def dimer_pt(i: int, j: int, q: Union[Phase, float], N: int) -> SparseOperator:
    """``(s_i^x s_j^x + s_i^y s_j^y) + cos q (s_i^z s_j^z - 1/4) + (i/2) sin q (s_i^z - s_j^z)``.

    Non-Hermitian unless ``sin q = 0``. Reversing the pair and the phase
    gives the same operator: ``dimer_pt(j, i, -q) == dimer_pt(i, j, q)``.
    """
    _check_pair(i, j, N)
    qr = _rad(q)
    zi, zj = _sz(N, i), _sz(N, j)
    diag = math.cos(qr) * (zi * zj - 0.25) + 0.5j * math.sin(qr) * (zi - zj)
    return _two_site(i, j, N, diag, 0.5, 0.5, abs(math.sin(qr)) < 1e-15)


def dimer_dmi(i: int, j: int, q: Union[Phase, float], N: int) -> SparseOperator:
    """``cos q (s^x s^x + s^y s^y) + (s^z s^z - 1/4) + sin q (s_i^x s_j^y - s_i^y s_j^x)``."""
    _check_pair(i, j, N)
    qr = _rad(q)
    zi, zj = _sz(N, i), _sz(N, j)
    # s_i^x s_j^y - s_i^y s_j^x = (i/2) (s_i^+ s_j^- - s_i^- s_j^+)
    c, s = math.cos(qr), math.sin(qr)
    return _two_site(i, j, N, zi * zj - 0.25, 0.5 * c + 0.5j * s, 0.5 * c - 0.5j * s, True)


def dimer_iso(i: int, j: int, J: float, N: int) -> SparseOperator:
    """``J (s_i . s_j - 1/4)``; annihilates ``|n>|n>`` for every direction ``n``."""
    _check_pair(i, j, N)
    zi, zj = _sz(N, i), _sz(N, j)
    return _two_site(i, j, N, J * (zi * zj - 0.25), 0.5 * J, 0.5 * J, True)


_DIMERS = {"PT": dimer_pt, "DMI": dimer_dmi}


def edge_operator(edge, N: int) -> SparseOperator:
    if edge.flavor == "ISO":
        return dimer_iso(edge.i, edge.j, edge.R, N)
    return edge.R * _DIMERS[edge.flavor](edge.i, edge.j, edge.q, N)


def graph_hamiltonian(g: SpinGraph, verify: bool = True) -> SparseOperator:
    """Sum of ``R`` times each edge's dimer operator.

    The Hermiticity hint comes from the current law at every node; with
    ``verify`` it is checked against ``|H - H^dagger|`` and a disagreement
    raises :class:`HermiticityMismatch`.
    """
    dim = _dim(g.N)
    acc = sp.csr_matrix((dim, dim), dtype=complex)
    for e in g.edges:
        acc = acc + edge_operator(e, g.N).matrix
    hint = check_hermiticity(g).ok
    H = SparseOperator(acc, hint)
    if verify:
        anti = H.anti_hermitian_norm()
        if hint and anti > 1e-9:
            raise HermiticityMismatch(f"current law holds but |H - H^+| = {anti:.3e}")
        if not hint and anti == 0.0:
            raise HermiticityMismatch("current law fails but H is exactly Hermitian")
    return H


def total_sz(N: int) -> SparseOperator:
    pop = _popcount(_basis(N))
    return SparseOperator(sp.diags(pop - N / 2.0), True)


def _popcount(idx: np.ndarray) -> np.ndarray:
    out = np.zeros_like(idx)
    x = idx.copy()
    while np.any(x):
        out += x & 1
        x >>= 1
    return out


def site_sz(j: int, N: int) -> SparseOperator:
    if not 0 <= j < N:
        raise IndexError(f"site {j} outside 0..{N - 1}")
    return SparseOperator(sp.diags(_sz(N, j)), True)


def perturb_uniform_field(h: float, N: int) -> SparseOperator:
    """``h sum_j s_j^z``."""
    return SparseOperator(total_sz(N).matrix * h, True)


def perturb_local_field(h: float, l: int, N: int) -> SparseOperator:
    """``h s_l^z``."""
    return SparseOperator(site_sz(l, N).matrix * h, True)


def perturb_q_shift(g: SpinGraph, dq: Union[Phase, float]) -> SparseOperator:
    """Exact difference ``H(q_ij + dq) - H(q_ij)`` (all edges shifted along their direction)."""
    shifted = graph_hamiltonian(g.with_phases(dq), verify=False)
    base = graph_hamiltonian(g, verify=False)
    diff = SparseOperator(shifted.matrix - base.matrix)
    diff.hermitian = diff.anti_hermitian_norm() <= 1e-12
    return diff


def ising_shift(g: SpinGraph, dq: float, include_constant: bool = True) -> SparseOperator:
    """First-order form of the q shift for PT graphs: ``-dq sum R sin q (s^z s^z - 1/4)``.

    On a uniform PT ring this matches :func:`perturb_q_shift` up to
    ``O(dq**2)``; dropping the constant leaves ``-dq sin q sum s^z s^z``.
    """
    if any(e.flavor != "PT" for e in g.edges):
        raise ValueError("the Ising form of the q shift applies to PT graphs only")
    dqr = _rad(dq)
    diag = np.zeros(_dim(g.N))
    for e in g.edges:
        zz = _sz(g.N, e.i) * _sz(g.N, e.j)
        if include_constant:
            zz = zz - 0.25
        diag += -dqr * e.R * math.sin(e.q_rad) * zz
    return SparseOperator(sp.diags(diag), True)


def current_operator(k: int, j: int, R: float, N: int) -> SparseOperator:
    """Spin current across the ``k``-``j`` dimer, ``8 i R (s_k^- s_j^+ - s_j^- s_k^+)``.

    Hermitian and antisymmetric in ``(k, j)``. The prefactor is fixed so
    that a helix segment with phase step ``q`` carries ``-4 R sin^2(theta) sin q``.
    """
    _check_pair(k, j, N)
    c = CURRENT_PREFACTOR * R
    zero = np.zeros(_dim(N))
    # s_k^+ s_j^- gets -i c, s_k^- s_j^+ gets +i c
    return _two_site(k, j, N, zero, -1j * c, 1j * c, True)


def tau_plus(phases_rad, N: Optional[int] = None) -> SparseOperator:
    """Collective raising operator ``sum_j exp(i phase_j) s_j^+``."""
    lam = np.asarray(phases_rad, dtype=float)
    N = lam.size if N is None else N
    idx = _basis(N)
    rows, cols, vals = [], [], []
    for j in range(N):
        src = idx[_bit(idx, j) == 0]
        rows.append(src | (1 << j))
        cols.append(src)
        vals.append(np.full(src.size, np.exp(1j * lam[j])))
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(idx.size, idx.size))
    return SparseOperator(m, False)


def tau_minus(phases_rad, N: Optional[int] = None) -> SparseOperator:
    return tau_plus(phases_rad, N).adjoint()
