"""Command-line front end: ``wavereg evolve | solitary | sweep | compare``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(blow-up or non-convergence).  Partial outputs are kept on exit 2.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as wio
from .diagnostics import EnergyReport, ReportRecorder, report, spectral_tail_ratio
from .errors import BlowUpError, ConfigError, ConvergenceError, InvertibilityError
from .solitary import DEFAULT_MAX_ITER, DEFAULT_TOL, petviashvili_solve, sweep
from .spectral import make_grid
from .systems import State, SystemKind, gaussian_ic
from .timestepper import StepConfig, evolve

log = logging.getLogger("wavereg")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


def _versions():
    return {"wavereg": __version__, "numpy": np.__version__, "python": platform.python_version()}


def _time_tag(t: float) -> str:
    return f"{t:.10g}".replace("-", "m")


def initial_state(cfg: wio.RunConfig) -> State:
    grid = cfg.grid
    if cfg.ic == "gaussian":
        return gaussian_ic(cfg.amp, cfg.width, grid, cfg.velocity, cfg.params)
    if cfg.ic == "solitary":
        kind = cfg.system if cfg.system is not SystemKind.CLASSICAL else SystemKind.REGULARIZED
        wave = petviashvili_solve(cfg.c, grid, kind, tol=cfg.tol, max_iter=cfg.max_iter, params=cfg.params)
        return wave.to_state()
    return wio.state_from_profile(cfg.path, grid)


class RunResult:
    """Outcome of one configured evolution: snapshots, diagnostics, and flags."""

    def __init__(self, cfg: wio.RunConfig):
        self.cfg = cfg
        self.reports: list[EnergyReport] = []
        self.snapshots: dict[float, State] = {}
        self.samples: list[State] = []
        self.blowup_time = None
        self.near_breaking_time = None
        self.final_state = None
        self.wall_time = 0.0


def run_config(cfg: wio.RunConfig, keep_samples: bool = False) -> RunResult:
    """Evolve ``cfg`` segment by segment so every snapshot time is hit exactly."""
    res = RunResult(cfg)
    step_cfg_kw = dict(dealias=cfg.dealias, scheme=cfg.scheme)
    state = initial_state(cfg)
    counter = itertools.count()
    last_time = [-math.inf]

    def observe(s: State):
        if s.time <= last_time[0]:
            return
        last_time[0] = s.time
        n = next(counter)
        tail = spectral_tail_ratio(s)
        if res.near_breaking_time is None and tail > cfg.breaking_threshold:
            res.near_breaking_time = s.time
        final = math.isclose(s.time, cfg.t_end, rel_tol=0, abs_tol=1e-12)
        if n % cfg.diagnostics_stride == 0 or final:
            res.reports.append(report(s, cfg.params, cfg.system, cfg.breaking_threshold))
            if keep_samples:
                res.samples.append(s)

    start = time.perf_counter()
    t = 0.0
    try:
        for t_snap in sorted(set(cfg.snapshot_times) | {cfg.t_end}):
            if t_snap > t:
                step_cfg = StepConfig(cfg.dt, t_snap - t, **step_cfg_kw)
                state = evolve(state, step_cfg, cfg.system, cfg.params, observe)
                state = state.replace(time=t_snap)
                t = t_snap
            else:
                observe(state)
            if t_snap in cfg.snapshot_times:
                res.snapshots[t_snap] = state
    except BlowUpError as exc:
        res.blowup_time = exc.time
        state = getattr(exc, "last_state", state)
    res.final_state = state
    res.wall_time = time.perf_counter() - start
    return res


def _write_run(res: RunResult, out_dir: Path, command="evolve") -> dict:
    cfg = res.cfg
    out_dir.mkdir(parents=True, exist_ok=True)
    snap_files = []
    for t_snap, s in sorted(res.snapshots.items()):
        name = f"snapshot_t{_time_tag(t_snap)}.csv"
        wio.write_profile(out_dir / name, s.grid, s.eta, s.u)
        snap_files.append(name)
    wio.write_csv(out_dir / "diagnostics.csv", EnergyReport.columns(), (r.as_row() for r in res.reports))
    h = [r.hamiltonian for r in res.reports]
    manifest = {
        "command": command,
        "config": {k: (v.value if isinstance(v, SystemKind) else v) for k, v in cfg.as_dict().items()},
        "config_text": cfg.to_text(),
        "versions": _versions(),
        "wall_time_s": res.wall_time,
        "status": "blowup" if res.blowup_time is not None else "completed",
        "blowup_time": res.blowup_time,
        "near_breaking_time": res.near_breaking_time,
        "hamiltonian_initial": h[0] if h else None,
        "hamiltonian_max_drift": float(np.max(np.abs(np.array(h) - h[0]))) if h else None,
        "depth_positive": all(r.depth_positive for r in res.reports),
        "snapshots": snap_files,
    }
    wio.write_json(out_dir / "manifest.json", manifest)
    return manifest


def cmd_evolve(args) -> int:
    cfg = wio.load_config(args.config)
    if args.system:
        cfg = cfg.with_system(args.system)
    res = run_config(cfg)
    manifest = _write_run(res, Path(args.out))
    if res.blowup_time is not None:
        print(f"blow-up at t = {res.blowup_time:.6g}; partial outputs in {args.out}", file=sys.stderr)
        return EXIT_NUMERICAL
    msg = f"{cfg.system.value}: t = {cfg.t_end:g}, |dH| = {manifest['hamiltonian_max_drift']:.3e}"
    if res.near_breaking_time is not None:
        msg += f", near-breaking from t = {res.near_breaking_time:.6g}"
    print(msg)
    return EXIT_OK


def _solitary_grid(args):
    return make_grid(args.x_left, args.x_right, args.n_modes)


def cmd_solitary(args) -> int:
    grid = _solitary_grid(args)
    try:
        wave = petviashvili_solve(args.c, grid, args.system, tol=args.tol, max_iter=args.max_iter)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = Path(args.out)
    wio.write_profile(out, grid, wave.eta, wave.u)
    summary = {
        "c": wave.c,
        "system": wave.kind.value,
        "eta0": wave.amplitude_eta,
        "u0": wave.amplitude_u,
        "iterations": wave.iterations,
        "final_increment": wave.final_increment,
        "residual_inf": wave.residual_inf,
        "stabilization": wave.stabilization,
        "grid": {"x_left": grid.x_left, "x_right": grid.x_right, "n_modes": grid.n_modes},
        "tol": args.tol,
        "versions": _versions(),
    }
    wio.write_json(Path(args.summary) if args.summary else out.with_suffix(".json"), summary)
    print(f"c = {wave.c:g}: eta(0) = {wave.amplitude_eta:.13f}, u(0) = {wave.amplitude_u:.13f}, "
          f"{wave.iterations} iterations")
    return EXIT_OK


def speed_range(c_min: float, c_max: float, step: float) -> list[float]:
    if not step > 0:
        raise ConfigError(f"step must be positive, got {step}")
    if c_min > c_max:
        return []
    n = int(math.floor((c_max - c_min) / step + 1e-9))
    return [round(c_min + i * step, 12) for i in range(n + 1)]


def worker_count(requested: int) -> int:
    cap = os.environ.get("WAVEREG_THREADS")
    if cap:
        try:
            requested = min(requested, max(int(cap), 1))
        except ValueError:
            raise ConfigError(f"WAVEREG_THREADS must be an integer, got {cap!r}") from None
    return max(requested, 1)


def cmd_sweep(args) -> int:
    grid = _solitary_grid(args)
    cs = speed_range(args.c_min, args.c_max, args.step)
    refs = [wio.load_euler_reference(p) for p in args.euler_ref or []]
    workers = worker_count(args.workers)
    rows = sweep(cs, grid, args.system, args.tol, args.max_iter, warm_start=not args.no_warm_start,
                 workers=workers)
    header = ["c", "amplitude_eta", "amplitude_u", "converged", "iterations"]
    if refs:
        header.append("epsilon")
    table = []
    for row in rows:
        line = [row.c, row.amplitude_eta, row.amplitude_u, row.converged, row.iterations]
        if refs:
            eps = math.nan
            for ref in refs:
                if row.converged and math.isclose(ref.c, row.c, rel_tol=0, abs_tol=1e-9):
                    eps = wio.relative_difference(ref.resample(grid), row.wave.eta, grid)
            line.append(eps)
        table.append(line)
    wio.write_csv(args.out, header, table)
    failed = sum(not r.converged for r in rows)
    print(f"{len(rows)} speeds, {failed} not converged -> {args.out}")
    if rows and failed == len(rows):
        return EXIT_NUMERICAL
    return EXIT_OK


def _gnuplot_script(diff_csv: str, labels: list[str], profiles: list[str]) -> str:
    lines = [
        "# gnuplot script generated by wavereg compare",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 't'",
        "set ylabel 'L-infinity difference of eta'",
        "set logscale y",
        "plot " + ", \\\n     ".join(
            f"'{diff_csv}' using 1:{3 + 2 * i} with lines title '{lab}'" for i, lab in enumerate(labels)
        ),
    ]
    for prof in profiles:
        lines += [
            "pause -1",
            "unset logscale y",
            "set xlabel 'x'",
            "set ylabel 'eta difference'",
            "plot " + ", \\\n     ".join(
                f"'{prof}' using 1:{2 + i} with lines title '{lab}'" for i, lab in enumerate(labels)
            ),
        ]
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    cfgs = [wio.load_config(p) for p in args.configs]
    if args.systems:
        if len(cfgs) != 1:
            raise ConfigError("--systems takes exactly one config")
        cfgs = [cfgs[0].with_system(s) for s in args.systems.split(",")]
    if len(cfgs) < 2:
        raise ConfigError("compare needs at least two runs")
    ref = cfgs[0]
    for cfg in cfgs[1:]:
        if cfg.grid != ref.grid:
            raise ConfigError(f"{cfg.source}: grid differs from {ref.source}")
        if (cfg.dt, cfg.t_end, cfg.diagnostics_stride, cfg.snapshot_times) != (
                ref.dt, ref.t_end, ref.diagnostics_stride, ref.snapshot_times):
            raise ConfigError(f"{cfg.source}: time stepping or outputs differ from {ref.source}")

    labels = []
    for cfg in cfgs:
        lab = cfg.system.value
        while lab in labels:
            lab += "'"
        labels.append(lab)
    results = [run_config(cfg, keep_samples=True) for cfg in cfgs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for lab, res in zip(labels, results):
        _write_run(res, out / lab.replace("'", "_b"), command="compare")

    grid = ref.grid
    pairs = list(itertools.combinations(range(len(cfgs)), 2))
    pair_names = [f"{labels[i]}-{labels[j]}" for i, j in pairs]
    n_common = min(len(r.samples) for r in results)
    header = ["time"]
    for name in pair_names:
        header += [f"{name}_l2", f"{name}_linf"]
    rows = []
    for k in range(n_common):
        row = [results[0].samples[k].time]
        for i, j in pairs:
            d = results[i].samples[k].eta - results[j].samples[k].eta
            row += [math.sqrt(grid.dx * float(np.dot(d, d))), float(np.max(np.abs(d)))]
        rows.append(row)
    wio.write_csv(out / "differences.csv", header, rows)

    profiles = []
    for t_snap in ref.snapshot_times:
        if not all(t_snap in r.snapshots for r in results):
            continue
        cols = [grid.x] + [results[i].snapshots[t_snap].eta - results[j].snapshots[t_snap].eta
                           for i, j in pairs]
        name = f"diff_t{_time_tag(t_snap)}.csv"
        wio.write_csv(out / name, ["x"] + pair_names, zip(*cols))
        profiles.append(name)
    wio.atomic_write_text(out / "compare.gp", _gnuplot_script("differences.csv", pair_names, profiles))
    if any(r.blowup_time is not None for r in results):
        print("at least one run blew up; differences truncated to common times", file=sys.stderr)
        return EXIT_NUMERICAL
    if rows:
        print("final L-inf differences: " + ", ".join(
            f"{n} {rows[-1][2 + 2 * i]:.3e}" for i, n in enumerate(pair_names)))
    return EXIT_OK


def _add_grid_args(p, x_left=-140.0, x_right=140.0, n_modes=8192):
    p.add_argument("--x-left", type=float, default=x_left)
    p.add_argument("--x-right", type=float, default=x_right)
    p.add_argument("--n-modes", type=int, default=n_modes)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavereg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=f"wavereg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="time-evolve a configured initial state")
    p.add_argument("config", help="run config file, or a manifest.json to replay")
    p.add_argument("--out", default="run", help="output directory")
    p.add_argument("--system", help="override the config's system")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("solitary", help="compute one solitary wave")
    p.add_argument("c", type=float, help="wave speed (c^2 > 1)")
    _add_grid_args(p)
    p.add_argument("--system", default="regularized", choices=["regularized", "hp"])
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--out", default="solitary.csv", help="profile CSV (x, eta, u)")
    p.add_argument("--summary", help="JSON summary path (default: next to --out)")
    p.set_defaults(func=cmd_solitary)

    p = sub.add_parser("sweep", help="amplitude-speed relation over a range of speeds")
    p.add_argument("c_min", type=float)
    p.add_argument("c_max", type=float)
    p.add_argument("step", type=float)
    _add_grid_args(p)
    p.add_argument("--system", default="regularized", choices=["regularized", "hp"])
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--euler-ref", action="append", metavar="CSV",
                   help="Euler profile (x, eta) with a '# c = ...' line; repeatable")
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--workers", type=int, default=1, help="processes when warm start is off")
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="run several systems from one initial state and diff them")
    p.add_argument("configs", nargs="+")
    p.add_argument("--systems", help="comma-separated systems to run from a single config")
    p.add_argument("--out", default="compare")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvertibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
