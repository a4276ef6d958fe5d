"""Line-oriented text format for spin graphs (``.sg``) and quench experiments (``.sx``).

Graph file::

    # triangle, q = 2pi/3 on every edge
    node A
    node B
    node C
    edge A B q=2/3pi R=1.0 flavor=PT
    edge B C q=2/3pi R=1.0 flavor=PT
    edge C A q=2/3pi R=1.0 flavor=PT

Experiment file::

    graph triangle.sg
    theta 1/2pi
    root A
    perturb local_field h=1.0 site=A
    times 0 20 400
    partition A B
    observe entropy current=A fidelity

Node order in the graph is the order of ``node`` declarations; it fixes
the bit ordering of the many-body basis.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import phases
from .phases import Phase

FLAVORS = ("PT", "DMI", "ISO")
PERTURBATIONS = ("uniform_field", "local_field", "q_shift", "none")
METHODS = ("auto", "eigh", "krylov", "expm")
DEFAULT_STEPS = 400


class GraphSpecError(ValueError):
    """Base class for located parse errors."""

    def __init__(self, reason: str, line: Optional[int] = None):
        self.reason = reason
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + reason)


class SpecSyntaxError(GraphSpecError):
    pass


class DuplicateEdge(GraphSpecError):
    pass


class DuplicateNode(GraphSpecError):
    pass


class UnknownNode(GraphSpecError):
    pass


class SelfLoop(GraphSpecError):
    pass


class InvalidPhase(GraphSpecError):
    pass


class BadPartition(GraphSpecError):
    pass


class UnknownPerturbation(GraphSpecError):
    pass


@dataclass(frozen=True)
class EdgeDecl:
    i: str
    j: str
    q: Phase
    R: float
    flavor: str


@dataclass(frozen=True)
class GraphDocument:
    nodes: tuple[str, ...]
    edges: tuple[EdgeDecl, ...]

    def __post_init__(self):
        _validate_graph(self.nodes, self.edges, {})

    def structurally_equal(self, other: "GraphDocument") -> bool:
        """Equality that also distinguishes exact from float phases and -0.0 from 0.0."""
        if self.nodes != other.nodes or len(self.edges) != len(other.edges):
            return False
        for a, b in zip(self.edges, other.edges):
            if (a.i, a.j, a.flavor) != (b.i, b.j, b.flavor):
                return False
            if type(a.q) is not type(b.q) or not _same(a.q, b.q) or not _same(a.R, b.R):
                return False
        return True


def _same(a, b) -> bool:
    if isinstance(a, Fraction):
        return a == b
    return math.copysign(1.0, a) == math.copysign(1.0, b) and a == b


@dataclass(frozen=True)
class Perturbation:
    kind: str
    h: float = 0.0
    site: Optional[str] = None
    dq: Phase = 0.0


@dataclass(frozen=True)
class ExperimentDocument:
    graph: GraphDocument
    theta: float
    root: str
    perturbation: Perturbation
    times: tuple[float, float, int]
    partition: tuple[str, ...]
    entropy: bool = False
    currents: tuple[str, ...] = ()
    fidelity: bool = False
    method: str = "auto"
    graph_path: Optional[str] = None
    extras: dict = field(default_factory=dict, compare=False)


def _id_ok(token: str) -> bool:
    return bool(token) and "=" not in token and "#" not in token and token.isprintable()


def _validate_graph(nodes, edges, lines) -> None:
    seen: set[str] = set()
    for k, n in enumerate(nodes):
        if not _id_ok(n) or any(c.isspace() for c in n):
            raise SpecSyntaxError(f"invalid node id {n!r}", lines.get(("node", k)))
        if n in seen:
            raise DuplicateNode(f"node {n!r} declared twice", lines.get(("node", k)))
        seen.add(n)
    pairs: set[frozenset] = set()
    for k, e in enumerate(edges):
        where = lines.get(("edge", k))
        for end in (e.i, e.j):
            if end not in seen:
                raise UnknownNode(f"edge references undeclared node {end!r}", where)
        if e.i == e.j:
            raise SelfLoop(f"self-loop on node {e.i!r}", where)
        key = frozenset((e.i, e.j))
        if key in pairs:
            raise DuplicateEdge(f"second edge between {e.i!r} and {e.j!r}", where)
        pairs.add(key)
        if not isinstance(e.q, Fraction) and not math.isfinite(e.q):
            raise InvalidPhase("non-finite phase", where)
        if not math.isfinite(e.R):
            raise SpecSyntaxError("non-finite weight R", where)
        if e.flavor not in FLAVORS:
            raise SpecSyntaxError(f"unknown flavor {e.flavor!r}", where)


def _logical_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield lineno, body.split()


def _keyvals(tokens: list[str], lineno: int, allowed: tuple[str, ...]) -> dict[str, str]:
    out: dict[str, str] = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not value:
            raise SpecSyntaxError(f"expected key=value, got {tok!r}", lineno)
        if key not in allowed:
            raise SpecSyntaxError(f"unexpected key {key!r}", lineno)
        if key in out:
            raise SpecSyntaxError(f"key {key!r} given twice", lineno)
        out[key] = value
    return out


def _phase(token: str, lineno: int) -> Phase:
    try:
        return phases.parse(token)
    except phases.PhaseFormatError as exc:
        if exc.nonfinite:
            raise InvalidPhase(str(exc), lineno) from None
        raise SpecSyntaxError(str(exc), lineno) from None


def _float(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise SpecSyntaxError(f"{what} is not a number: {token!r}", lineno) from None
    if not math.isfinite(value):
        raise SpecSyntaxError(f"{what} must be finite", lineno)
    return value


def _graph_line(keyword, args, lineno, nodes, edges, lines) -> None:
    if keyword == "node":
        if len(args) != 1:
            raise SpecSyntaxError("'node' takes exactly one id", lineno)
        lines[("node", len(nodes))] = lineno
        nodes.append(args[0])
    else:
        if len(args) != 5:
            raise SpecSyntaxError("'edge' needs: <id> <id> q=.. R=.. flavor=..", lineno)
        kv = _keyvals(args[2:], lineno, ("q", "R", "flavor"))
        if len(kv) != 3:
            raise SpecSyntaxError("'edge' needs q, R and flavor", lineno)
        flavor = kv["flavor"]
        if flavor not in FLAVORS:
            raise SpecSyntaxError(f"unknown flavor {flavor!r}", lineno)
        lines[("edge", len(edges))] = lineno
        edges.append(EdgeDecl(args[0], args[1], _phase(kv["q"], lineno),
                              _float(kv["R"], lineno, "R"), flavor))


def parse_graph(text: str) -> GraphDocument:
    nodes: list[str] = []
    edges: list[EdgeDecl] = []
    lines: dict = {}
    for lineno, (keyword, *args) in _logical_lines(text):
        if keyword not in ("node", "edge"):
            raise SpecSyntaxError(f"unknown declaration {keyword!r}", lineno)
        _graph_line(keyword, args, lineno, nodes, edges, lines)
    _validate_graph(nodes, edges, lines)
    return GraphDocument(tuple(nodes), tuple(edges))


def serialize_graph(g: GraphDocument) -> str:
    out = [f"node {n}" for n in g.nodes]
    for e in g.edges:
        out.append(f"edge {e.i} {e.j} q={phases.format_phase(e.q)} "
                   f"R={e.R!r} flavor={e.flavor}")
    return "\n".join(out) + "\n"


def _read_file(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def parse_experiment(
    text: str,
    base_dir: Optional[str] = None,
    loader: Callable[[str], str] = _read_file,
) -> ExperimentDocument:
    """Parse an experiment file; ``graph <path>`` is resolved against ``base_dir``."""
    nodes: list[str] = []
    edges: list[EdgeDecl] = []
    glines: dict = {}
    graph_path = None
    graph_line = None
    theta = math.pi / 2
    root = None
    root_line = None
    pert = None
    pert_line = None
    times = None
    partition = None
    partition_line = None
    observe: dict = {"entropy": False, "currents": [], "fidelity": False}
    observe_line = None
    method = "auto"
    seen: set[str] = set()

    for lineno, (keyword, *args) in _logical_lines(text):
        if keyword in ("node", "edge"):
            _graph_line(keyword, args, lineno, nodes, edges, glines)
            continue
        if keyword in seen:
            raise SpecSyntaxError(f"{keyword!r} given twice", lineno)
        seen.add(keyword)
        if keyword == "graph":
            if len(args) != 1:
                raise SpecSyntaxError("'graph' takes one path", lineno)
            graph_path, graph_line = args[0], lineno
        elif keyword == "theta":
            if len(args) != 1:
                raise SpecSyntaxError("'theta' takes one angle", lineno)
            theta = phases.to_radians(_phase(args[0], lineno))
            if not 0.0 <= theta <= math.pi + 1e-12:
                raise SpecSyntaxError("theta must lie in [0, pi]", lineno)
        elif keyword == "root":
            if len(args) != 1:
                raise SpecSyntaxError("'root' takes one node id", lineno)
            root, root_line = args[0], lineno
        elif keyword == "perturb":
            pert, pert_line = _perturbation(args, lineno), lineno
        elif keyword == "times":
            if len(args) not in (2, 3):
                raise SpecSyntaxError("'times' takes <t0> <t1> [<n>]", lineno)
            t0 = _float(args[0], lineno, "t0")
            t1 = _float(args[1], lineno, "t1")
            n = DEFAULT_STEPS
            if len(args) == 3:
                try:
                    n = int(args[2])
                except ValueError:
                    raise SpecSyntaxError("step count must be an integer", lineno) from None
            if n < 1:
                raise SpecSyntaxError("step count must be >= 1", lineno)
            if not t1 > t0:
                raise SpecSyntaxError("times must satisfy t1 > t0", lineno)
            times = (t0, t1, n)
        elif keyword == "partition":
            partition, partition_line = tuple(args), lineno
        elif keyword == "observe":
            observe_line = lineno
            for tok in args:
                if tok in ("entropy", "fidelity"):
                    observe[tok] = True
                elif tok.startswith("current="):
                    node = tok[len("current="):]
                    if not node:
                        raise SpecSyntaxError("empty current= node", lineno)
                    observe["currents"].append(node)
                else:
                    raise SpecSyntaxError(f"unknown observable {tok!r}", lineno)
        elif keyword == "method":
            if len(args) != 1 or args[0] not in METHODS:
                raise SpecSyntaxError(f"method must be one of {METHODS}", lineno)
            method = args[0]
        else:
            raise SpecSyntaxError(f"unknown declaration {keyword!r}", lineno)

    if graph_path is not None and nodes:
        raise SpecSyntaxError("give either 'graph <path>' or inline nodes, not both", graph_line)
    if graph_path is not None:
        full = graph_path
        if base_dir is not None and not os.path.isabs(graph_path):
            full = os.path.join(base_dir, graph_path)
        try:
            text_g = loader(full)
        except OSError as exc:
            raise SpecSyntaxError(f"cannot read graph {graph_path!r}: {exc.strerror}",
                                  graph_line) from None
        try:
            graph = parse_graph(text_g)
        except GraphSpecError as exc:
            raise type(exc)(f"in graph {graph_path!r}: {exc}", graph_line) from None
    elif nodes:
        _validate_graph(nodes, edges, glines)
        graph = GraphDocument(tuple(nodes), tuple(edges))
    else:
        raise SpecSyntaxError("no graph: add 'graph <path>' or inline node/edge lines", None)

    known = set(graph.nodes)
    if root is None:
        root = graph.nodes[0]
    elif root not in known:
        raise UnknownNode(f"root {root!r} is not a node", root_line)
    if pert is None:
        raise UnknownPerturbation("missing 'perturb' line", None)
    if pert.site is not None and pert.site not in known:
        raise UnknownNode(f"local_field site {pert.site!r} is not a node", pert_line)
    if times is None:
        raise SpecSyntaxError("missing 'times' line", None)
    if partition is None:
        raise BadPartition("missing 'partition' line", None)
    if not partition:
        raise BadPartition("partition is empty", partition_line)
    if len(set(partition)) != len(partition):
        raise BadPartition("partition lists a node twice", partition_line)
    for n in partition:
        if n not in known:
            raise BadPartition(f"partition node {n!r} is not a node", partition_line)
    if len(partition) == len(graph.nodes):
        raise BadPartition("partition must be a proper subset", partition_line)
    for n in observe["currents"]:
        if n not in known:
            raise UnknownNode(f"current node {n!r} is not a node", observe_line)

    return ExperimentDocument(
        graph=graph,
        theta=theta,
        root=root,
        perturbation=pert,
        times=times,
        partition=partition,
        entropy=observe["entropy"],
        currents=tuple(observe["currents"]),
        fidelity=observe["fidelity"],
        method=method,
        graph_path=graph_path,
    )


def _perturbation(args: list[str], lineno: int) -> Perturbation:
    if not args:
        raise UnknownPerturbation("'perturb' needs a kind", lineno)
    kind, rest = args[0], args[1:]
    if kind == "uniform_field":
        kv = _keyvals(rest, lineno, ("h",))
        if "h" not in kv:
            raise SpecSyntaxError("uniform_field needs h=", lineno)
        return Perturbation(kind, h=_float(kv["h"], lineno, "h"))
    if kind == "local_field":
        kv = _keyvals(rest, lineno, ("h", "site"))
        if set(kv) != {"h", "site"}:
            raise SpecSyntaxError("local_field needs h= and site=", lineno)
        return Perturbation(kind, h=_float(kv["h"], lineno, "h"), site=kv["site"])
    if kind == "q_shift":
        kv = _keyvals(rest, lineno, ("dq",))
        if "dq" not in kv:
            raise SpecSyntaxError("q_shift needs dq=", lineno)
        return Perturbation(kind, dq=_phase(kv["dq"], lineno))
    if kind == "none":
        if rest:
            raise SpecSyntaxError("'perturb none' takes no parameters", lineno)
        return Perturbation(kind)
    raise UnknownPerturbation(f"unknown perturbation {kind!r}", lineno)


def serialize_experiment(x: ExperimentDocument, graph_ref: Optional[str] = None) -> str:
    """Write an experiment; the graph is inlined unless ``graph_ref`` is given."""
    out = []
    if graph_ref is not None:
        out.append(f"graph {graph_ref}")
    else:
        out.append(serialize_graph(x.graph).rstrip("\n"))
    out.append(f"theta {x.theta!r}")
    out.append(f"root {x.root}")
    p = x.perturbation
    if p.kind == "uniform_field":
        out.append(f"perturb uniform_field h={p.h!r}")
    elif p.kind == "local_field":
        out.append(f"perturb local_field h={p.h!r} site={p.site}")
    elif p.kind == "q_shift":
        out.append(f"perturb q_shift dq={phases.format_phase(p.dq)}")
    else:
        out.append("perturb none")
    t0, t1, n = x.times
    out.append(f"times {t0!r} {t1!r} {n}")
    out.append("partition " + " ".join(x.partition))
    obs = []
    if x.entropy:
        obs.append("entropy")
    obs.extend(f"current={c}" for c in x.currents)
    if x.fidelity:
        obs.append("fidelity")
    if obs:
        out.append("observe " + " ".join(obs))
    if x.method != "auto":
        out.append(f"method {x.method}")
    return "\n".join(out) + "\n"
