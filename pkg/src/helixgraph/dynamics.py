"""Time evolution ``|psi(t)> = exp(-i H t)|psi(0)>`` and closed-form reference evolutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import expm_multiply

from .hilbert import DimensionMismatch, helix_coefficients, helix_from_phases, helix_sector_states
from .operators import SizeCap, SparseOperator

DENSE_HERMITIAN_CAP = 12
DENSE_GENERAL_CAP = 10
METHODS = ("auto", "eigh", "krylov", "expm")


class DegenerateShift(ValueError):
    """``dq * sin q == 0``: the revival period is undefined."""


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 2**N)
    method: str
    hermitian: bool
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.times.size

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def choose_method(H: SparseOperator, method: str = "auto") -> str:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    N = H.n_sites
    herm = H.is_hermitian()
    if method == "auto":
        if herm:
            return "eigh" if N <= DENSE_HERMITIAN_CAP else "krylov"
        method = "expm"
    if method == "eigh":
        if not herm:
            raise ValueError("spectral propagation needs a Hermitian operator")
        if N > DENSE_HERMITIAN_CAP:
            raise SizeCap(f"dense spectral path capped at N = {DENSE_HERMITIAN_CAP}")
    if method == "expm":
        cap = DENSE_HERMITIAN_CAP if herm else DENSE_GENERAL_CAP
        if N > cap:
            raise SizeCap(f"dense exponential capped at N = {cap} for this operator")
    return method


def evolve(H: SparseOperator, psi0: np.ndarray, times: Sequence[float],
           method: str = "auto") -> Trajectory:
    """States at each of ``times`` (strictly increasing, measured from ``t = 0``).

    Hermitian operators go through a dense eigendecomposition (N <= 12) or
    a sparse ``expm_multiply`` propagation; non-Hermitian ones through a dense
    scaling-and-squaring exponential (N <= 10), with the norm drift
    recorded in ``metadata`` rather than corrected.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (H.dim,):
        raise DimensionMismatch(f"state of length {psi0.size} for operator of dim {H.dim}")
    m = choose_method(H, method)
    herm = H.is_hermitian()

    if m == "eigh":
        w, V = np.linalg.eigh(H.toarray())
        c = V.conj().T @ psi0
        states = (V @ (np.exp(-1j * np.outer(w, t)) * c[:, None])).T
    elif m == "krylov":
        A = -1j * H.matrix.tocsc()
        states = np.empty((t.size, H.dim), dtype=complex)
        psi = expm_multiply(A * t[0], psi0) if t[0] != 0 else psi0
        states[0] = psi
        for k in range(1, t.size):
            psi = expm_multiply(A * (t[k] - t[k - 1]), psi)
            states[k] = psi
    else:
        dense = -1j * H.toarray()
        cache: dict[float, np.ndarray] = {}

        def prop(dt: float) -> np.ndarray:
            key = round(dt, 12)
            if key not in cache:
                cache[key] = sla.expm(dense * dt)
            return cache[key]

        states = np.empty((t.size, H.dim), dtype=complex)
        psi = prop(t[0]) @ psi0 if t[0] != 0 else psi0
        states[0] = psi
        for k in range(1, t.size):
            psi = prop(t[k] - t[k - 1]) @ psi
            states[k] = psi

    norms = np.linalg.norm(states, axis=1)
    meta = {"norm_drift": float(np.max(np.abs(norms - np.linalg.norm(psi0)))),
            "N": H.n_sites}
    return Trajectory(t, states, m, herm, meta)


def analytic_uniform_field_state(theta: float, phases_rad, h: float, t: float) -> np.ndarray:
    """``exp(-i (H_gra + h s^z) t)|Phi>`` for a zero-energy helix ``|Phi>``.

    Every down amplitude picks up ``exp(+i h t)`` and the state an overall
    ``exp(-i N h t / 2)``: it stays a helix, rotating about z.
    """
    lam = np.asarray(phases_rad, dtype=float)
    N = lam.size
    return np.exp(-0.5j * N * h * t) * helix_from_phases(theta, lam + h * t)


def revival_period(N: int, n_bonds: int, q: float, dq: float) -> float:
    """``tau = pi N (N - 1) / (dq N_b sin q)``; the revival is at ``tau`` (odd N) or ``2 tau`` (even N)."""
    s = math.sin(q)
    if abs(s) < 1e-12 or dq == 0 or n_bonds == 0:
        raise DegenerateShift("dq * sin q = 0: no revival period")
    return math.pi * N * (N - 1) / (dq * n_bonds * s)


def effective_subspace_state(N: int, n_bonds: int, q: float, dq: float, theta: float,
                             phases_rad, t: float) -> np.ndarray:
    """Helix evolved by the Ising-type effective Hamiltonian inside the ``psi_n`` manifold.

    ``sum_n exp(i pi (n^2 - N n) t / tau) d_n psi_n``, with the same global
    phase as the helix so that ``t = 0`` reproduces it exactly.
    """
    tau = revival_period(N, n_bonds, q, dq)
    g, states = helix_sector_states(phases_rad)
    d = helix_coefficients(theta, N)
    n = np.arange(N + 1)
    w = np.exp(1j * math.pi * (n * n - N * n) * t / tau) * d
    return g * sum(wk * s for wk, s in zip(w, states))
