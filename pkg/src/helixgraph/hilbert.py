"""Dense state vectors: product and helix states, the magnon-sector states psi_n.

States are plain 1-D complex ``numpy`` arrays of length ``2**N`` in the
basis convention of :mod:`helixgraph.operators`. Nothing here renormalises
silently.

Sign convention for the sector states. With the helix

    |Phi> = prod_j [cos(theta/2)|up>_j + exp(i Lambda_j) sin(theta/2)|down>_j]

the up-spins carry ``exp(-i Lambda_j)`` relative to the down-spins, so

    |Phi> = exp(i sum_j Lambda_j) * sum_n d_n psi_n(N, -Lambda, n)

where ``psi_n(N, phases, n)`` is built from ``tau^+ = sum_j exp(i phases_j) s_j^+``.
:func:`helix_sector_states` applies the sign flip for you.
"""

from __future__ import annotations

import csv
import math
from typing import Optional, Sequence, Union

import numpy as np

from .operators import MAX_SITES, SizeCap, tau_minus, tau_plus  # noqa: F401  (re-export)
from .spingraph import PhaseAssignment, SpinGraph, assign_phases


class LengthMismatch(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def n_sites(psi: np.ndarray) -> int:
    n = psi.shape[0]
    if n < 2 or n & (n - 1):
        raise DimensionMismatch(f"state length {n} is not a power of two")
    return n.bit_length() - 1


def _check_N(N: int) -> None:
    if not 1 <= N <= MAX_SITES:
        raise SizeCap(f"N = {N} outside 1..{MAX_SITES}")


def basis_state(N: int, index: int) -> np.ndarray:
    _check_N(N)
    v = np.zeros(1 << N, dtype=complex)
    v[index] = 1.0
    return v


def all_down(N: int) -> np.ndarray:
    return basis_state(N, 0)


def all_up(N: int) -> np.ndarray:
    return basis_state(N, (1 << N) - 1)


def product_state(angles: Sequence[tuple[float, float]], N: Optional[int] = None) -> np.ndarray:
    """``prod_j [cos(theta_j/2)|up> + exp(i Q_j) sin(theta_j/2)|down>]`` from ``(theta_j, Q_j)`` pairs."""
    angles = list(angles)
    if N is not None and len(angles) != N:
        raise LengthMismatch(f"got {len(angles)} site specs for N = {N}")
    _check_N(len(angles))
    v = np.ones(1, dtype=complex)
    for theta, Q in reversed(angles):  # site 0 ends up least significant
        local = np.array([np.exp(1j * Q) * math.sin(theta / 2), math.cos(theta / 2)])
        v = np.kron(v, local)
    return v


def helix_from_phases(theta: float, phases_rad) -> np.ndarray:
    return product_state([(theta, float(Q)) for Q in phases_rad])


def helix_state(g: SpinGraph, theta: float, root: Union[int, str] = 0,
                tol: Optional[float] = None) -> tuple[np.ndarray, PhaseAssignment]:
    """Helix state on ``g`` with site phases from :func:`assign_phases`."""
    pa = assign_phases(g, root, tol)
    return helix_from_phases(theta, pa.radians()), pa


def psi_n(N: int, phases_rad, n: int) -> np.ndarray:
    """``(tau^+)^n |down...down> / (n! sqrt(C(N, n)))``; unit norm, ``n`` spins up.

    Built in closed form: amplitude ``exp(i sum_{j up} phase_j) / sqrt(C(N, n))``
    on every basis state with ``n`` up spins, exactly zero elsewhere.
    """
    _check_N(N)
    if not 0 <= n <= N:
        raise ValueError(f"n = {n} outside 0..{N}")
    lam = np.asarray(phases_rad, dtype=float)
    if lam.size != N:
        raise LengthMismatch(f"need {N} phases, got {lam.size}")
    idx = np.arange(1 << N)
    up_phase = np.zeros(idx.size)
    count = np.zeros(idx.size, dtype=np.int64)
    for j in range(N):
        b = (idx >> j) & 1
        up_phase += b * lam[j]
        count += b
    v = np.zeros(idx.size, dtype=complex)
    sector = count == n
    v[sector] = np.exp(1j * up_phase[sector]) / math.sqrt(math.comb(N, n))
    return v


def helix_coefficients(theta: float, N: int) -> np.ndarray:
    """``d_n = sqrt(C(N, n)) sin(theta/2)**(N-n) cos(theta/2)**n`` for ``n = 0..N``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([math.sqrt(math.comb(N, n)) * s ** (N - n) * c ** n for n in range(N + 1)])


def helix_sector_states(phases_rad) -> tuple[complex, list[np.ndarray]]:
    """Global phase and the ``psi_n`` whose ``d_n``-weighted sum is the helix.

    ``helix_from_phases(theta, lam) == g * sum_n d_n * states[n]``.
    """
    lam = np.asarray(phases_rad, dtype=float)
    N = lam.size
    return complex(np.exp(1j * lam.sum())), [psi_n(N, -lam, n) for n in range(N + 1)]


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"states of length {a.shape[0]} and {b.shape[0]}")
    return complex(np.vdot(a, b))


def norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2 / (<a|a> <b|b>)``; insensitive to global phase and scale."""
    ov = inner(a, b)
    return float(abs(ov) ** 2 / (inner(a, a).real * inner(b, b).real))


def align_phase(ref: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``psi`` times the unit phase that makes ``<ref|psi>`` real and non-negative."""
    ov = inner(ref, psi)
    if abs(ov) == 0:
        return psi
    return psi * (abs(ov) / ov)


def write_state_csv(psi: np.ndarray, target) -> None:
    """Two-column dump ``index, re, im`` (for debugging; there is no reader)."""
    own = isinstance(target, str)
    fh = open(target, "w", newline="") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for k, a in enumerate(psi):
            w.writerow([k, f"{a.real:.12e}", f"{a.imag:.12e}"])
    finally:
        if own:
            fh.close()
