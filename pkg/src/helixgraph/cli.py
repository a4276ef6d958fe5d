"""Command-line front end.

Exit codes: 0 success, 1 a graph law fails (``validate``), 2 unreadable or
malformed input, 3 the computation itself failed (size caps, phase law
violated where a helix is needed, ...). Errors go to stderr as one JSON
object per line.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional

import click
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, phases
from .dynamics import evolve as run_evolution
from .graphspec import ExperimentDocument, GraphSpecError, parse_experiment, parse_graph
from .hilbert import helix_from_phases, helix_state
from .observables import helix_residual, observe, record_columns, format_row
from .operators import (
    SizeCap,
    SparseOperator,
    graph_hamiltonian,
    perturb_local_field,
    perturb_q_shift,
    perturb_uniform_field,
)
from .spingraph import (
    DisconnectedGraph,
    SpinGraph,
    assign_phases,
    check_hermiticity,
    check_phase_law,
)
from .svg import line_panels

EXIT_LAW, EXIT_INPUT, EXIT_COMPUTE = 1, 2, 3
KERNEL_TOL = 1e-9
THREADS_ENV = "HELIXGRAPH_THREADS"


def _die(kind: str, message: str, code: int, **extra) -> None:
    click.echo(json.dumps({"error": kind, "message": message, **extra}), err=True)
    sys.exit(code)


@contextlib.contextmanager
def _threads():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        yield
        return
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        _die("BadEnvironment", f"{THREADS_ENV} must be a positive integer, got {raw!r}", EXIT_INPUT)
    with threadpool_limits(limits=n):
        yield


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        _die(type(exc).__name__, str(exc), EXIT_INPUT, path=path)


def _load_graph(path: str) -> SpinGraph:
    try:
        return SpinGraph.from_document(parse_graph(_read(path)))
    except GraphSpecError as exc:
        _die(type(exc).__name__, exc.reason, EXIT_INPUT, line=exc.line, path=path)
    except ValueError as exc:
        _die(type(exc).__name__, str(exc), EXIT_INPUT, path=path)


def _load_experiment(path: str) -> ExperimentDocument:
    text = _read(path)
    try:
        return parse_experiment(text, base_dir=str(Path(path).parent))
    except GraphSpecError as exc:
        _die(type(exc).__name__, exc.reason, EXIT_INPUT, line=exc.line, path=path)
    except (OSError, UnicodeDecodeError) as exc:
        _die(type(exc).__name__, str(exc), EXIT_INPUT, path=path)


@click.group()
@click.version_option(version=__version__, prog_name="helixgraph")
def main() -> None:
    """Spin graphs built from helix-preserving dimers."""


@main.command()
@click.argument("graph_file", type=click.Path(dir_okay=False))
@click.option("--tol", type=float, default=None, help="Phase-law tolerance for float phases (rad).")
def validate(graph_file: str, tol: Optional[float]) -> None:
    """Check the loop phase law and the current law; one JSON line per cycle and node."""
    g = _load_graph(graph_file)
    try:
        law = check_phase_law(g, tol)
    except DisconnectedGraph as exc:
        click.echo(json.dumps({"check": "connected", "ok": False, "message": str(exc)}))
        sys.exit(EXIT_LAW)
    herm = check_hermiticity(g)
    for rec in law.to_records(g) + herm.to_records(g):
        click.echo(json.dumps(rec))
    click.echo(json.dumps({"check": "summary", "phase_law": law.ok, "current_law": herm.ok,
                           "sites": g.N, "edges": g.n_edges}))
    sys.exit(0 if law.ok and herm.ok else EXIT_LAW)


@main.command()
@click.argument("graph_file", type=click.Path(dir_okay=False))
@click.option("--dense-cap", type=int, default=12, show_default=True,
              help="Largest N for dense diagonalisation.")
@click.option("--theta", type=str, default="1/2pi", show_default=True,
              help="Polar angle of the helix used for the residual.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the eigenvalue CSV here instead of stdout.")
def spectrum(graph_file: str, dense_cap: int, theta: str, out: Optional[str]) -> None:
    """Full spectrum, kernel dimension and helix residual of a graph Hamiltonian."""
    g = _load_graph(graph_file)
    try:
        th = phases.to_radians(phases.parse(theta))
    except ValueError as exc:
        _die("InvalidPhase", str(exc), EXIT_INPUT)
    if g.N > dense_cap:
        _die("SizeCap", f"N = {g.N} exceeds the dense cap {dense_cap}", EXIT_COMPUTE)
    with _threads():
        H = graph_hamiltonian(g)
        herm = H.is_hermitian()
        dense = H.toarray()
        if herm:
            w = np.linalg.eigvalsh(dense).astype(complex)
        else:
            w = np.linalg.eigvals(dense)
            w = w[np.lexsort((w.imag, w.real))]
        try:
            pa = assign_phases(g, 0, strict=False)
            residual = helix_residual(H, helix_from_phases(th, pa.radians()))
        except DisconnectedGraph:
            residual = None

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "re", "im"])
    for k, lam in enumerate(w):
        writer.writerow([k, f"{lam.real:.12e}", f"{lam.imag:.12e}"])
    summary = {"sites": g.N, "dim": int(w.size), "hermitian": bool(herm),
               "kernel_dim": int(np.sum(np.abs(w) < KERNEL_TOL)), "kernel_tol": KERNEL_TOL,
               "helix_residual": residual, "theta": th}
    if out is None:
        click.echo(buf.getvalue(), nl=False)
        click.echo(json.dumps(summary), err=True)
    else:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")
        click.echo(json.dumps({**summary, "csv": out}))


def _perturbation(x: ExperimentDocument, g: SpinGraph) -> Optional[SparseOperator]:
    p = x.perturbation
    if p.kind == "uniform_field":
        return perturb_uniform_field(p.h, g.N)
    if p.kind == "local_field":
        return perturb_local_field(p.h, g.index(p.site), g.N)
    if p.kind == "q_shift":
        return perturb_q_shift(g, p.dq)
    return None


def _revival(t: np.ndarray, f: np.ndarray) -> tuple[float, float]:
    """Best fidelity after the deepest dip, and when it happens."""
    lo = int(np.argmin(f))
    k = lo + int(np.argmax(f[lo:]))
    return float(f[k]), float(t[k])


def _summaries(columns: list[str], rows: np.ndarray) -> dict:
    data = dict(zip(columns, rows.T))
    out: dict = {}
    if "entropy_A" in data:
        out["max_entropy"] = float(np.max(data["entropy_A"]))
    js = [c for c in columns if c.startswith("J_")]
    if js:
        out["max_abs_current"] = float(max(np.max(np.abs(data[c])) for c in js))
        out["current_range"] = float(max(np.ptp(data[c]) for c in js))
    if "fidelity" in data:
        out["revival_fidelity"], out["revival_time"] = _revival(data["t"], data["fidelity"])
    out["max_norm_deviation"] = float(np.max(np.abs(data["norm"] - 1.0)))
    return out


@main.command()
@click.argument("experiment_file", type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (default: ./<experiment name>).")
@click.option("--svg/--no-svg", default=False, help="Also draw entropy and current panels.")
def evolve(experiment_file: str, out_dir: Optional[str], svg: bool) -> None:
    """Quench a helix state and record observables over time."""
    x = _load_experiment(experiment_file)
    try:
        g = SpinGraph.from_document(x.graph)
    except ValueError as exc:
        _die(type(exc).__name__, str(exc), EXIT_INPUT, path=experiment_file)
    out = Path(out_dir) if out_dir is not None else Path(Path(experiment_file).stem)
    t0, t1, n = x.times
    times = np.linspace(t0, t1, n)
    partition = [g.index(a) for a in x.partition]
    started = time.perf_counter()
    try:
        with _threads():
            H = graph_hamiltonian(g)
            P = _perturbation(x, g)
            total = H if P is None else H + P
            psi0, pa = helix_state(g, x.theta, x.root)
            traj = run_evolution(total, psi0, times, x.method)
            records = [observe(s, t, g, total,
                               partition=partition if x.entropy else None,
                               current_nodes=x.currents,
                               reference=psi0 if x.fidelity else None)
                       for t, s in zip(traj.times, traj.states)]
    except (ValueError, SizeCap) as exc:
        _die(type(exc).__name__, str(exc), EXIT_COMPUTE, path=experiment_file)
    wall = time.perf_counter() - started

    columns = record_columns(g, True, x.entropy, x.currents, x.fidelity)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "trajectory.csv"
    lines = [",".join(columns)] + [format_row(r, columns) for r in records]
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    table = np.array([[r.t if c == "t" else r.values[c] for c in columns] for r in records])

    outputs = {"trajectory": csv_path.name}
    if svg:
        panels = []
        if x.entropy:
            panels.append(("entanglement entropy S_A (nats)", {"S_A": table[:, columns.index("entropy_A")]}))
        js = {c[2:]: table[:, columns.index(c)] for c in columns if c.startswith("J_")}
        if js:
            panels.append(("node current J_k", {f"J_{k}": v for k, v in js.items()}))
        if not panels:
            panels.append(("norm", {"norm": table[:, columns.index("norm")]}))
        svg_path = out / "observables.svg"
        svg_path.write_text(line_panels(table[:, 0], panels), encoding="utf-8")
        outputs["svg"] = svg_path.name

    p = x.perturbation
    manifest = {
        "version": __version__,
        "experiment": str(experiment_file),
        "config": {
            "graph": x.graph_path,
            "sites": list(g.names),
            "theta": x.theta,
            "root": x.root,
            "perturbation": {"kind": p.kind, "h": p.h, "site": p.site,
                             "dq": phases.format_phase(p.dq) if p.kind == "q_shift" else None},
            "times": [t0, t1, n],
            "partition": list(x.partition),
            "observe": {"entropy": x.entropy, "currents": list(x.currents), "fidelity": x.fidelity},
            "method": x.method,
        },
        "site_phases": [phases.format_phase(v) for v in pa.values],
        "method": traj.method,
        "hermitian": traj.hermitian,
        "norm_drift": traj.metadata["norm_drift"],
        "wall_clock_s": wall,
        "outputs": outputs,
        "summary": _summaries(columns, table),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    click.echo(json.dumps({"out": str(out), **manifest["summary"]}))


REPORT_COLUMNS = ("run", "perturbation", "method", "hermitian", "steps", "max_entropy",
                  "max_abs_current", "current_range", "revival_fidelity", "revival_time",
                  "norm_drift")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.12e}"
    return str(v)


@main.command()
@click.argument("run_dir", type=click.Path(file_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the summary CSV here instead of stdout.")
def report(run_dir: str, out: Optional[str]) -> None:
    """One summary row per run found under RUN_DIR (recursively)."""
    root = Path(run_dir)
    manifests = sorted(root.rglob("manifest.json")) if root.is_dir() else []
    if not manifests:
        _die("MissingManifest", f"no manifest.json under {run_dir}", EXIT_INPUT, path=run_dir)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for mpath in manifests:
        try:
            m = json.loads(mpath.read_text(encoding="utf-8"))
            s = m.get("summary", {})
            row = {
                "run": mpath.parent.relative_to(root).as_posix() or ".",
                "perturbation": m["config"]["perturbation"]["kind"],
                "method": m["method"],
                "hermitian": m["hermitian"],
                "steps": m["config"]["times"][2],
                "norm_drift": m["norm_drift"],
                **{k: s.get(k) for k in ("max_entropy", "max_abs_current", "current_range",
                                         "revival_fidelity", "revival_time")},
            }
        except (OSError, ValueError, KeyError, TypeError) as exc:
            _die("BadManifest", f"{type(exc).__name__}: {exc}", EXIT_INPUT, path=str(mpath))
        writer.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    if out is None:
        click.echo(buf.getvalue(), nl=False)
    else:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")


if __name__ == "__main__":
    main()
