"""Spin graphs built from XXZ dimers, and the two Kirchhoff-type laws.

Edges are directed: an edge ``(i, j, q)`` stores the helix phase step
from ``i`` to ``j``; walking it backwards contributes ``-q``.

* phase law: around every cycle the signed sum of ``q`` vanishes mod 2pi,
  which is what makes a site phase map ``Lambda`` with
  ``Lambda(j) - Lambda(i) = q_ij`` exist;
* current law: at every node ``sum_j R_kj sin q_kj = 0`` over PT edges,
  which cancels the imaginary fields (Hermiticity) and makes the net helix
  spin current out of the node vanish.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import phases
from .graphspec import FLAVORS, EdgeDecl, GraphDocument
from .phases import Phase

DEFAULT_TOL = 1e-9


class DisconnectedGraph(ValueError):
    pass


class PhaseLawViolated(ValueError):
    def __init__(self, message: str, cycle=None, residual=None):
        super().__init__(message)
        self.cycle = cycle
        self.residual = residual


class InfeasibleStar(ValueError):
    pass


@dataclass(frozen=True)
class DimerEdge:
    i: int
    j: int
    q: Phase
    R: float = 1.0
    flavor: str = "PT"

    @property
    def q_rad(self) -> float:
        return phases.to_radians(self.q)


@dataclass(frozen=True)
class PhaseAssignment:
    root: int
    values: tuple  # one Phase per site

    def radians(self) -> np.ndarray:
        return np.array([phases.to_radians(v) for v in self.values])


# a cycle is a list of (edge index, +1 if walked i->j else -1)
Cycle = list[tuple[int, int]]


@dataclass(frozen=True)
class PhaseLawReport:
    ok: bool
    cycles: tuple
    residuals: tuple  # Phase per cycle, reduced to (-pi, pi]

    def to_records(self, g: "SpinGraph") -> list[dict]:
        out = []
        for cyc, res in zip(self.cycles, self.residuals):
            out.append({
                "check": "phase_law",
                "cycle": [g.describe_step(e, s) for e, s in cyc],
                "residual": phases.to_radians(res),
                "exact": phases.is_exact(res),
                "residual_text": phases.format_phase(res),
            })
        return out


@dataclass(frozen=True)
class HermiticityReport:
    ok: bool
    imbalance: tuple  # float per node

    def to_records(self, g: "SpinGraph") -> list[dict]:
        return [{"check": "current_law", "node": g.names[k], "imbalance": float(v)}
                for k, v in enumerate(self.imbalance)]


def _zero_mod_2pi(q: Phase) -> bool:
    r = phases.reduce(q)
    return r == 0 if phases.is_exact(r) else abs(r) <= 1e-12


class SpinGraph:
    """Sites ``0..N-1`` joined by dimer edges. Immutable after construction."""

    def __init__(self, n_sites: int, edges: Iterable[DimerEdge],
                 names: Optional[Sequence[str]] = None):
        if n_sites < 1:
            raise ValueError("a spin graph needs at least one site")
        self.N = int(n_sites)
        self.edges: tuple[DimerEdge, ...] = tuple(edges)
        self.names: tuple[str, ...] = (tuple(str(k) for k in range(self.N))
                                       if names is None else tuple(names))
        if len(self.names) != self.N or len(set(self.names)) != self.N:
            raise ValueError("need one unique name per site")
        self._index = {n: k for k, n in enumerate(self.names)}
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(self.N)]
        pairs = set()
        for idx, e in enumerate(self.edges):
            if not (0 <= e.i < self.N and 0 <= e.j < self.N):
                raise IndexError(f"edge {idx} has a site outside 0..{self.N - 1}")
            if e.i == e.j:
                raise ValueError(f"edge {idx} is a self-loop")
            if frozenset((e.i, e.j)) in pairs:
                raise ValueError(f"edge {idx} duplicates a site pair")
            if e.flavor not in FLAVORS:
                raise ValueError(f"unknown flavor {e.flavor!r}")
            if e.flavor == "ISO" and not _zero_mod_2pi(e.q):
                # the isotropic dimer only shares the helix when both spins are parallel
                raise ValueError(f"ISO edge {idx} must carry q = 0 (mod 2pi)")
            pairs.add(frozenset((e.i, e.j)))
            adjacency[e.i].append((e.j, idx))
            adjacency[e.j].append((e.i, idx))
        for row in adjacency:
            row.sort()
        self.adjacency = tuple(tuple(r) for r in adjacency)

    def __repr__(self) -> str:
        return f"SpinGraph(N={self.N}, edges={len(self.edges)})"

    # -- conversion ---------------------------------------------------------

    @classmethod
    def from_document(cls, doc: GraphDocument) -> "SpinGraph":
        index = {n: k for k, n in enumerate(doc.nodes)}
        edges = [DimerEdge(index[e.i], index[e.j], e.q, float(e.R), e.flavor)
                 for e in doc.edges]
        return cls(len(doc.nodes), edges, doc.nodes)

    def to_document(self) -> GraphDocument:
        return GraphDocument(
            self.names,
            tuple(EdgeDecl(self.names[e.i], self.names[e.j], e.q, float(e.R), e.flavor)
                  for e in self.edges),
        )

    def index(self, node: Union[int, str]) -> int:
        if isinstance(node, (int, np.integer)) and not isinstance(node, bool):
            if 0 <= node < self.N:
                return int(node)
            raise KeyError(f"no site {node}")
        if node in self._index:
            return self._index[node]
        raise KeyError(f"unknown node {node!r}")

    def describe_step(self, edge: int, sign: int) -> str:
        e = self.edges[edge]
        a, b = (e.i, e.j) if sign > 0 else (e.j, e.i)
        return f"{self.names[a]}->{self.names[b]}"

    # -- structure ----------------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, k: int) -> int:
        return len(self.adjacency[k])

    def neighbors(self, k: int) -> list[int]:
        return [j for j, _ in self.adjacency[k]]

    def step_phase(self, edge: int, sign: int) -> Phase:
        q = self.edges[edge].q
        return q if sign > 0 else phases.neg(q)

    def outgoing_phase(self, k: int, edge: int) -> Phase:
        """Phase of ``edge`` read in the direction leaving site ``k``."""
        e = self.edges[edge]
        return self.step_phase(edge, 1 if e.i == k else -1)

    def is_connected(self) -> bool:
        return len(self._bfs(0)[0]) == self.N

    def _bfs(self, root: int):
        order = [root]
        parent: dict[int, tuple[int, int]] = {root: (-1, -1)}  # node -> (parent, edge)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, idx in self.adjacency[u]:
                if v not in parent:
                    parent[v] = (u, idx)
                    order.append(v)
                    queue.append(v)
        return order, parent

    def with_phases(self, shift: Phase) -> "SpinGraph":
        """Copy with ``shift`` added to the stored (directed) phase of every PT/DMI edge.

        ISO dimers do not depend on q and are left alone.
        """
        return SpinGraph(self.N, [e if e.flavor == "ISO" else
                                  DimerEdge(e.i, e.j, phases.add(e.q, shift), e.R, e.flavor)
                                  for e in self.edges], self.names)

    def is_all_exact(self) -> bool:
        return all(phases.is_exact(e.q) for e in self.edges)


# -- cycles and laws --------------------------------------------------------

def fundamental_cycles(g: SpinGraph) -> list[Cycle]:
    """Fundamental cycles of the BFS tree rooted at site 0 (neighbours in index order).

    Each non-tree edge ``u->v`` (in edge order) closes one cycle, walked
    along the edge from ``u`` to ``v`` and back to ``u`` through the tree.
    """
    order, parent = g._bfs(0)
    if len(order) != g.N:
        raise DisconnectedGraph(f"graph has {g.N - len(order)} unreachable sites")
    depth = {0: 0}
    for v in order[1:]:
        depth[v] = depth[parent[v][0]] + 1
    tree = {idx for v, (_, idx) in parent.items() if idx >= 0}

    def up(v):  # step from v to its parent, as (edge, sign)
        p, idx = parent[v]
        return idx, (1 if g.edges[idx].i == v else -1)

    cycles = []
    for idx, e in enumerate(g.edges):
        if idx in tree:
            continue
        u, v = e.i, e.j
        tail_v, tail_u = [], []  # v -> lca, u -> lca
        a, b = v, u
        while depth[a] > depth[b]:
            tail_v.append(up(a))
            a = parent[a][0]
        while depth[b] > depth[a]:
            tail_u.append(up(b))
            b = parent[b][0]
        while a != b:
            tail_v.append(up(a))
            a = parent[a][0]
            tail_u.append(up(b))
            b = parent[b][0]
        # u->v, then v up to lca, then lca down to u
        back_down = [(i, -s) for i, s in reversed(tail_u)]
        cycles.append([(idx, 1)] + tail_v + back_down)
    return cycles


def check_phase_law(g: SpinGraph, tol: Optional[float] = None) -> PhaseLawReport:
    """Signed phase sum around every fundamental cycle, reduced to (-pi, pi].

    An all-exact cycle must sum to exactly zero; otherwise ``|residual| <= tol``
    (default 1e-9 rad).
    """
    tol = DEFAULT_TOL if tol is None else tol
    cycles = fundamental_cycles(g)
    residuals = []
    ok = True
    for cyc in cycles:
        res = phases.reduce(phases.total(g.step_phase(e, s) for e, s in cyc))
        residuals.append(res)
        if phases.is_exact(res):
            ok &= res == 0
        else:
            ok &= abs(res) <= tol
    return PhaseLawReport(ok, tuple(tuple(c) for c in cycles), tuple(residuals))


def node_imbalance(g: SpinGraph) -> np.ndarray:
    """``sum_j R_kj sin q_kj`` at every node, over PT edges, q read leaving k."""
    out = np.zeros(g.N)
    for e in g.edges:
        if e.flavor != "PT":
            continue
        v = e.R * math.sin(e.q_rad)
        out[e.i] += v
        out[e.j] -= v
    return out


def check_hermiticity(g: SpinGraph, tol: float = 1e-12,
                      nodes: Optional[Iterable] = None) -> HermiticityReport:
    """Current law / cancellation of the PT imaginary fields.

    ``nodes`` restricts the verdict to a subset (the report still lists all).
    """
    imb = node_imbalance(g)
    idx = range(g.N) if nodes is None else [g.index(n) for n in nodes]
    ok = all(abs(imb[k]) <= tol for k in idx)
    return HermiticityReport(bool(ok), tuple(float(v) for v in imb))


def assign_phases(g: SpinGraph, root: Union[int, str] = 0, tol: Optional[float] = None,
                  strict: bool = True) -> PhaseAssignment:
    """Site phases by BFS from ``root``: ``Lambda(root) = 0``, ``Lambda(j) = Lambda(i) + q_ij``.

    Values are wrapped into [0, 2pi); exact inputs give exact phases.

    With ``strict=False`` a phase-law violation is ignored and the
    tree-propagated phases are returned anyway (useful for residual checks).
    """
    r = g.index(root)
    if strict:
        report = check_phase_law(g, tol)
        if not report.ok:
            for cyc, res in zip(report.cycles, report.residuals):
                ok = res == 0 if phases.is_exact(res) else abs(res) <= (tol or DEFAULT_TOL)
                if not ok:
                    raise PhaseLawViolated(
                        "phase law violated on cycle "
                        + " ".join(g.describe_step(e, s) for e, s in cyc)
                        + f" (residual {phases.format_phase(res)})",
                        cycle=cyc, residual=res)
    order, parent = g._bfs(r)
    if len(order) != g.N:
        raise DisconnectedGraph("helix phases need a connected graph")
    values: list[Phase] = [Fraction(0)] * g.N
    for v in order[1:]:
        u, idx = parent[v]
        values[v] = phases.add(values[u], g.outgoing_phase(u, idx))
    return PhaseAssignment(r, tuple(_wrap_site(v) for v in values))


def _wrap_site(p: Phase) -> Phase:
    """Site phases live in [0, 2pi)."""
    if phases.is_exact(p):
        return p % 2
    return float(p) % (2 * math.pi)


# -- canonical builders -----------------------------------------------------

def ring(N: int, n: int = 1, flavor: str = "PT", R: float = 1.0) -> SpinGraph:
    """``N``-site ring with uniform ``q = 2 pi n / N`` on every edge ``j -> j+1``."""
    if N < 3:
        raise ValueError("ring needs N >= 3")
    if not 1 <= n <= N:
        raise ValueError("ring needs 1 <= n <= N")
    q = Fraction(2 * n, N)
    return SpinGraph(N, [DimerEdge(j, (j + 1) % N, q, R, flavor) for j in range(N)])


def dimer(q: Phase, R: float = 1.0, flavor: str = "PT") -> SpinGraph:
    return SpinGraph(2, [DimerEdge(0, 1, q, R, flavor)])


def triangle(q: Phase = Fraction(2, 3), flavor: str = "PT") -> SpinGraph:
    return SpinGraph(3, [DimerEdge(0, 1, q, 1.0, flavor), DimerEdge(1, 2, q, 1.0, flavor),
                         DimerEdge(2, 0, q, 1.0, flavor)])


def star(legs: Sequence[tuple[Phase, Optional[float]]], flavor: str = "PT") -> SpinGraph:
    """Centre site 0 joined to one leaf per ``(q, R)`` leg, ``q`` read centre -> leaf.

    For PT flavor the last weight is solved from the centre's current law,
    ``R_n = -(sum_{j<n} R_j sin q_j) / sin q_n``; the supplied last ``R`` is
    ignored. Leaves of an isolated star keep an uncompensated field, so only
    the centre is balanced.
    """
    if not legs:
        raise ValueError("star needs at least one leg")
    qs = [q for q, _ in legs]
    Rs = [R for _, R in legs]
    if flavor == "PT":
        partial = sum(float(R) * math.sin(phases.to_radians(q)) for q, R in legs[:-1])
        s_last = math.sin(phases.to_radians(qs[-1]))
        if abs(s_last) < 1e-14:
            if abs(partial) > 1e-14:
                raise InfeasibleStar("last leg has sin q = 0 but the other legs do not cancel")
            Rs[-1] = 1.0 if Rs[-1] is None else Rs[-1]
        else:
            Rs[-1] = -partial / s_last
    if any(R is None for R in Rs):
        raise ValueError("every leg needs a weight (only the last PT weight is solved)")
    return SpinGraph(len(legs) + 1,
                     [DimerEdge(0, k + 1, q, float(R), flavor)
                      for k, (q, R) in enumerate(zip(qs, Rs))])


def _from_site_phases(coords, lam, bonds, weights, flavor, names=None) -> SpinGraph:
    """Edges ``a -> b`` with ``q = reduce(lam[b] - lam[a])`` (lam in units of pi)."""
    edges = []
    for (a, b), R in zip(bonds, weights):
        q = phases.reduce(Fraction(lam[b]) - Fraction(lam[a]))
        edges.append(DimerEdge(a, b, q, R, flavor))
    return SpinGraph(len(coords), edges, names)


def triangle_fragment(flavor: str = "PT") -> SpinGraph:
    """Hexagonal patch of six triangles around a centre (7 sites, 12 bonds).

    Three-sublattice phases ``0, 2pi/3, 4pi/3``; up and down triangles wind
    with opposite helicity ``q = +-2pi/3``. Spokes carry ``R = 2`` and rim
    bonds ``R = 1``, which balances every node.
    """
    sub = [0, 1, 2, 1, 2, 1, 2]  # centre, then rim sites going around
    lam = [Fraction(2 * s, 3) for s in sub]
    bonds = [(0, k) for k in range(1, 7)] + [(k, k % 6 + 1) for k in range(1, 7)]
    weights = [2.0] * 6 + [1.0] * 6
    return _from_site_phases(range(7), lam, bonds, weights, flavor)


def square_fragment(flavor: str = "PT") -> SpinGraph:
    """3x3 patch of the square lattice (9 sites, 12 bonds, 4 plaquettes).

    Site phases cycle ``0, pi/2, pi, 3pi/2`` around each plaquette, so every
    bond has ``|q| = pi/2`` and neighbouring plaquettes wind oppositely. Bonds
    to the centre carry ``R = 2``, the rim ``R = 1``.
    """
    gray = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}
    coords = [(x, y) for y in range(3) for x in range(3)]
    lam = [Fraction(gray[(x % 2, y % 2)], 2) for x, y in coords]
    at = {c: k for k, c in enumerate(coords)}
    bonds = []
    for x, y in coords:
        if x < 2:
            bonds.append((at[(x, y)], at[(x + 1, y)]))
        if y < 2:
            bonds.append((at[(x, y)], at[(x, y + 1)]))
    centre = at[(1, 1)]
    weights = [2.0 if centre in b else 1.0 for b in bonds]
    names = [f"{x}{y}" for x, y in coords]
    return _from_site_phases(coords, lam, bonds, weights, flavor, names)


# Complex face currents R e^{iq} circulating O-A-p-B, O-B-r1-r2-C and
# O-C-s1-s2-s3-A. Found numerically so that the phases around every face sum
# to zero mod 2pi; the current law then holds for the real and imaginary parts.
_MIXED_LOOPS = (
    complex(-0.46045625176105653, -0.887682398278887),
    complex(-1.0536287303457519, 0.3101626499219642),
    complex(-1.4912848527755336, -0.7276909132927932),
)
_MIXED_SITES = ("O", "A", "B", "C", "p", "r1", "r2", "s1", "s2", "s3")
_MIXED_FACES = (("O", "A", "p", "B"), ("O", "B", "r1", "r2", "C"),
                ("O", "C", "s1", "s2", "s3", "A"))


def mixed_fragment() -> SpinGraph:
    """Quadrilateral, pentagon and hexagon sharing the spokes O-A, O-B, O-C.

    A stand-in for a mixed-q lattice fragment with float phases chosen here.
    Each edge carries ``R e^{iq}`` equal to the net face current through it,
    so ``sum R e^{iq}`` vanishes at every node. The graph is Hermitian and
    stays Hermitian when every q is shifted by the same amount.
    """
    # face f runs O -> rim -> O; spoke O -> face[1] carries L_f minus the
    # current of the face that comes back along it
    flow: dict[tuple[str, str], complex] = {}
    for f, (face, L) in enumerate(zip(_MIXED_FACES, _MIXED_LOOPS)):
        back = _MIXED_LOOPS[f - 1]
        flow[("O", face[1])] = L - back
        for a, b in zip(face[1:-1], face[2:]):
            flow[(a, b)] = L
    at = {n: k for k, n in enumerate(_MIXED_SITES)}
    edges = [DimerEdge(at[a], at[b], math.atan2(z.imag, z.real), abs(z), "PT")
             for (a, b), z in sorted(flow.items(), key=lambda kv: (at[kv[0][0]], at[kv[0][1]]))]
    return SpinGraph(len(_MIXED_SITES), edges, _MIXED_SITES)


# -- random law-satisfying graphs ------------------------------------------

def random_law_graph(rng: np.random.Generator, n_sites: int, extra_edges: int = 2,
                     flavors: Sequence[str] = ("PT", "DMI"), exact: bool = True,
                     max_den: int = 12) -> tuple[SpinGraph, np.ndarray]:
    """Random connected graph whose edge phases derive from random site phases.

    Returns the graph and the generating site phases (radians). Edge phases
    get random ``2 pi k`` offsets so the loop law is only satisfied mod 2pi.
    ``ISO`` in ``flavors`` is used only on edges whose two sites share a phase.
    """
    N = n_sites
    if exact:
        lam = [Fraction(int(rng.integers(0, 2 * max_den)), int(rng.integers(1, max_den + 1)))
               for _ in range(N)]
        if "ISO" in flavors and N > 2:
            lam[int(rng.integers(1, N))] = lam[0]
    else:
        lam = list(rng.uniform(-math.pi, math.pi, N))
    pairs = set()
    bonds = []
    for v in range(1, N):
        u = int(rng.integers(0, v))
        bonds.append((u, v) if rng.random() < 0.5 else (v, u))
        pairs.add(frozenset((u, v)))
    tries = 0
    while len(bonds) < N - 1 + extra_edges and tries < 50 * (extra_edges + 1):
        tries += 1
        u, v = (int(x) for x in rng.choice(N, 2, replace=False))
        if frozenset((u, v)) in pairs:
            continue
        pairs.add(frozenset((u, v)))
        bonds.append((u, v))
    edges = []
    non_iso = [f for f in flavors if f != "ISO"] or ["PT"]
    for a, b in bonds:
        wind = int(rng.integers(-1, 2))
        if exact:
            q = Fraction(lam[b]) - Fraction(lam[a]) + 2 * wind
            zero = q % 2 == 0
        else:
            q = lam[b] - lam[a] + 2 * math.pi * wind
            zero = False
        if "ISO" in flavors and zero and rng.random() < 0.7:
            flavor = "ISO"
        else:
            flavor = str(rng.choice(non_iso))
        edges.append(DimerEdge(a, b, q, float(rng.uniform(0.3, 2.0)), flavor))
    rad = np.array([phases.to_radians(x) for x in lam])
    return SpinGraph(N, edges), rad


def _ear_graph(rng: np.random.Generator, n_sites: int, n_ears: int) -> list[tuple[int, int]]:
    """Bridgeless graph by ear decomposition: a base cycle plus paths/chords."""
    base = int(rng.integers(3, min(n_sites, 5) + 1))
    bonds = [(k, (k + 1) % base) for k in range(base)]
    pairs = {frozenset(b) for b in bonds}
    nxt = base
    for _ in range(n_ears * 4):
        if n_ears == 0:
            break
        remaining = n_sites - nxt
        length = int(rng.integers(0, min(remaining, 3) + 1)) if remaining else 0
        u, v = (int(x) for x in rng.choice(nxt, 2, replace=False))
        if length == 0:
            if frozenset((u, v)) in pairs:
                continue
            bonds.append((u, v))
            pairs.add(frozenset((u, v)))
        else:
            path = [u] + list(range(nxt, nxt + length)) + [v]
            nxt += length
            for a, b in zip(path, path[1:]):
                bonds.append((a, b))
                pairs.add(frozenset((a, b)))
        n_ears -= 1
    while nxt < n_sites:  # absorb leftover sites as a final ear
        u, v = (int(x) for x in rng.choice(nxt, 2, replace=False))
        path = [u] + list(range(nxt, n_sites)) + [v]
        nxt = n_sites
        bonds.extend(zip(path, path[1:]))
    return bonds


def random_hermitian_pt_graph(rng: np.random.Generator, n_sites: int, n_ears: int = 2,
                              max_den: int = 12) -> SpinGraph:
    """Random bridgeless PT graph obeying both laws (weights from the null space).

    Weights are a random combination of null-space vectors of the weighted
    incidence matrix ``A[k, e] = +-sin q_e``, so ``A @ R = 0`` holds at
    every node up to rounding.
    """
    from scipy.linalg import null_space

    for _ in range(100):
        bonds = _ear_graph(rng, n_sites, n_ears)
        lam = [Fraction(int(rng.integers(0, 2 * max_den)), int(rng.integers(1, max_den + 1)))
               for _ in range(n_sites)]
        qs = [phases.reduce(Fraction(lam[b]) - Fraction(lam[a])) for a, b in bonds]
        A = np.zeros((n_sites, len(bonds)))
        for c, ((a, b), q) in enumerate(zip(bonds, qs)):
            s = math.sin(phases.to_radians(q))
            A[a, c] += s
            A[b, c] -= s
        K = null_space(A)
        if K.shape[1] == 0:
            continue
        R = K @ rng.normal(size=K.shape[1])
        if np.min(np.abs(R)) < 0.05 * np.max(np.abs(R)):
            continue
        R = R / np.max(np.abs(R)) * 2.0
        return SpinGraph(n_sites, [DimerEdge(a, b, q, float(r), "PT")
                                   for (a, b), q, r in zip(bonds, qs, R)])
    raise RuntimeError("could not draw a balanced PT graph; try more ears")
