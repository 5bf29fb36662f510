"""Command-line entry point: simulate, compare, stability, sweep.

Exit codes: 0 ok, 1 other failure, 2 scenario/validation error,
3 simulation diverged, 4 stability check failed.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import stability
from .controllers import SurfaceDegenerate
from .numerics import DimensionError
from .sim.engine import (STATE_COLUMNS, SimTrace, SimulationDiverged, run_simulation, scenario_bank,
                         scenario_surfaces, smmm_config)
from .sim.metrics import METRIC_FIELDS, Metrics, compute_metrics
from .sim.scenario import CONTROLLER_KINDS, Scenario, ScenarioError, dump_scenario, expand_sweep, parse_scenario
from .svg import emit_plot

EXIT_OK, EXIT_FAIL, EXIT_VALIDATION, EXIT_DIVERGED, EXIT_STABILITY = 0, 1, 2, 3, 4


@dataclass
class RunArtifacts:
    trace_path: Path | None = None
    metrics_path: Path | None = None
    plot_paths: list[Path] = field(default_factory=list)
    summary: str = ""


# --- files ------------------------------------------------------------------------

def write_trace_csv(trace: SimTrace, path) -> Path:
    path = Path(path)
    cols = trace.columns()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols.keys())
        data = np.column_stack(list(cols.values()))
        for row in data.tolist():
            w.writerow([repr(v) for v in row])
    return path


def read_trace_csv(path, kind: str = "") -> SimTrace:
    """Inverse of :func:`write_trace_csv` (the disturbance column is not stored)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(header))
    col = {name: data[:, i] for i, name in enumerate(header)}
    vs = sorted((h for h in header if h[0] == "v" and h[1:].isdigit()), key=lambda h: int(h[1:]))
    ss = sorted((h for h in header if h[0] == "s" and h[1:].isdigit()), key=lambda h: int(h[1:]))
    return SimTrace(
        t=col["t"], x=np.column_stack([col[c] for c in STATE_COLUMNS]), u=col["u"], s=col["s"],
        v=np.column_stack([col[h] for h in vs]) if vs else None,
        s_i=np.column_stack([col[h] for h in ss]) if ss else None, phi=None, kind=kind)


def format_metrics(m: Metrics, sc: Scenario, trace: SimTrace) -> str:
    lines = [f"controller.kind = {sc.controller_kind}",
             f"scenario.sha256 = {trace.scenario_hash}",
             f"sim.seed = {trace.seed}",
             f"sim.band = {sc.band!r}"]
    for k, v in m.as_dict().items():
        lines.append(f"metrics.{k} = {_num(v)}")
    return "\n".join(lines) + "\n"


def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    return "inf" if math.isinf(v) else repr(v)


def metrics_table(rows: list[tuple[str, Metrics]], first: str = "controller") -> str:
    head = [first] + list(METRIC_FIELDS)
    body = [[name] + [_num(getattr(m, f)) for f in METRIC_FIELDS] for name, m in rows]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    return "\n".join([fmt(head), fmt(["-" * w for w in widths])] + [fmt(r) for r in body]) + "\n"


def ordering_lines(rows: list[tuple[str, Metrics]]) -> str:
    out = []
    for f in METRIC_FIELDS:
        ranked = sorted(rows, key=lambda r: (getattr(r[1], f), r[0]))
        out.append(f"order.{f} = " + " < ".join(name for name, _ in ranked))
    return "\n".join(out) + "\n"


# --- workers ------------------------------------------------------------------------

def _worker_count(jobs: int) -> int:
    env = os.environ.get("VSSLAB_THREADS", "").strip()
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, jobs))


def _run_one(sc: Scenario):
    trace = run_simulation(sc)
    return trace, compute_metrics(trace, sc.z_ref, sc.band)


def run_many(scenarios: list[Scenario]):
    """Run independent scenarios on the worker pool; results keep input order."""
    workers = _worker_count(len(scenarios))
    if workers == 1:
        return [_run_one(sc) for sc in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, scenarios))


# --- subcommands ------------------------------------------------------------------

def load_scenario(args) -> Scenario:
    if args.scenario:
        path = Path(args.scenario)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
        sc = parse_scenario(text, str(path))
    else:
        sc = Scenario()
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.band is not None:
        kw["band"] = args.band
    return replace(sc, **kw) if kw else sc


def _write_run(sc: Scenario, trace: SimTrace, m: Metrics, out: Path, plots) -> RunArtifacts:
    out.mkdir(parents=True, exist_ok=True)
    art = RunArtifacts()
    art.trace_path = write_trace_csv(trace, out / "trace.csv")
    art.metrics_path = out / "metrics.txt"
    art.metrics_path.write_text(format_metrics(m, sc, trace))
    (out / "scenario.txt").write_text(dump_scenario(sc))
    for sig in plots:
        p = out / f"plot_{sig}.svg"
        p.write_text(emit_plot(trace, sig))
        art.plot_paths.append(p)
    return art


def _plots(args, sc: Scenario) -> list[str]:
    if not args.plots:
        return []
    return [p.strip() for p in args.plots.split(",") if p.strip()]


def _check_plots(plots, trace):
    from .svg import available_signals

    bad = [p for p in plots if p not in available_signals(trace)]
    if bad:
        raise ScenarioError(f"unknown plot signal(s) {', '.join(bad)}; available: "
                            f"{', '.join(available_signals(trace))}")


def cmd_simulate(args) -> int:
    sc = load_scenario(args)
    trace, m = _run_one(sc)
    plots = _plots(args, sc)
    _check_plots(plots, trace)
    art = _write_run(sc, trace, m, Path(args.out), plots)
    print(metrics_table([(sc.controller_kind, m)]), end="")
    print(f"trace: {art.trace_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    base = load_scenario(args)
    scenarios = [replace(base, controller_kind=k) for k in CONTROLLER_KINDS]
    results = run_many(scenarios)
    plots = _plots(args, base)
    for (trace, _), sc in zip(results, scenarios):
        _check_plots([p for p in plots if p not in ("validities", "surfaces")], trace)
    out = Path(args.out)
    rows = []
    for sc, (trace, m) in zip(scenarios, results):
        sig = [p for p in plots if p not in ("validities", "surfaces")
               or (p == "validities" and trace.v is not None) or (p == "surfaces" and trace.s_i is not None)]
        _write_run(sc, trace, m, out / sc.controller_kind, sig)
        rows.append((sc.controller_kind, m))
    text = metrics_table(rows) + "\n" + ordering_lines(rows)
    (out / "comparison.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def stability_reports(sc: Scenario) -> list[tuple[stability.StabilityReport, bool]]:
    """Every applicable check for the scenario as ``(report, required)`` pairs."""
    bank = scenario_bank(sc)
    m = sc.controller_m_bound
    multimodel = sc.is_multimodel
    if multimodel:
        bank, cfg = smmm_config(sc)
        surfaces = [cfg.surface(i) for i in range(cfg.n)]
        gains = list(cfg.gains)
        mu = list(cfg.mu)
    else:
        surfaces = list(scenario_surfaces(sc, bank)) * len(bank)
        gains = [0.0]
        mu = [1.0]
    out = []
    free = stability.find_common_p(list(bank))
    if isinstance(free, stability.Infeasible):
        rep = stability.StabilityReport("free-regime", False, free.best_margin, {"reason": free.reason})
    else:
        rep = stability.check_free_regime(bank, free)
    out.append((rep, False))

    rows = []
    for i, (model, spec) in enumerate(zip(bank, surfaces)):
        row = spec.row
        cb = float(row @ model.b)
        lin = (row @ model.a) / cb
        if not (sc.controller_kind in ("smc2", "smmm2")):
            lin = lin + m * row / cb
        rows.append(lin + gains[i] * row)
    g = [[mi.a - np.outer(mi.b, k) for k in rows] for mi in bank]
    members = [g[i][i] for i in range(len(bank))]
    members += [0.5 * (g[i][j] + g[j][i]) for i in range(len(bank)) for j in range(i + 1, len(bank))]
    p = stability.find_common_p(members)
    if isinstance(p, stability.Infeasible):
        rep = stability.StabilityReport("state-feedback", False, p.best_margin, {"reason": p.reason})
    else:
        rep = stability.check_state_feedback(bank, rows, p)
    out.append((rep, True))
    out.append((stability.check_reduced_surface(bank, surfaces), True))

    if multimodel:
        rep = stability.check_multi_gain(bank, surfaces, mu, m, gains, seed=sc.seed)
        out.append((rep, True))
    else:
        gb = stability.estimate_gain_bound(bank[0], surfaces[0], m, seed=sc.seed)
        rep = stability.StabilityReport("gain-bound", True, -gb.k_min,
                                        details={"k_min": gb.k_min, "note": gb.note,
                                                 "relay": "reaching law uses epsilon; no k relay"})
        out.append((rep, False))
    return out


def cmd_stability(args) -> int:
    sc = load_scenario(args)
    reports = stability_reports(sc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    parts = [f"controller.kind = {sc.controller_kind}\nscenario.sha256 = {sc.hash()}\n"]
    failed = []
    for i, (rep, required) in enumerate(reports):
        parts.append(f"check{i}.required = {'true' if required else 'false'}\n" + rep.to_text(f"check{i}"))
        status = "pass" if rep.passed else "FAIL"
        print(f"{rep.condition:16s} {status:4s} margin={rep.margin!r} {'(required)' if required else '(info)'}")
        if required and not rep.passed:
            failed.append(rep.condition)
    (out / "stability.txt").write_text("\n".join(parts))
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_STABILITY
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = load_scenario(args)
    if not sc.sweep:
        raise ScenarioError("sweep needs at least one 'sweep.<key> = v1, v2' line")
    combos = expand_sweep(sc)
    results = run_many([c for _, c in combos])
    keys = [k for k, _ in sc.sweep]
    rows = [(" ".join(f"{k}={v}" for k, v in combo.items()), m) for (combo, _), (_, m) in zip(combos, results)]
    text = metrics_table(rows, first="point") + f"sweep.keys = {', '.join(keys)}\n"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "compare": cmd_compare, "stability": cmd_stability, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vsslab", description="Sliding-mode / multimodel control laboratory")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--scenario", help="scenario document (key = value lines)")
    ap.add_argument("--out", default="vsslab-out", help="output directory")
    ap.add_argument("--seed", type=int, help="override sim.seed")
    ap.add_argument("--plots", help="comma-separated signals: z,u,s,validities,surfaces,omega,q,theta")
    ap.add_argument("--band", type=float, help="settling band fraction (overrides sim.band)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, DimensionError, SurfaceDegenerate) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
