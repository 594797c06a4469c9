"""Command-line surface: simulate, fit, evaluate, and report.

Exit codes are a stable contract: 0 success, 1 input or I/O error,
2 numerical non-convergence (the result file is still written).
All file formats use hours as the time unit and locale-independent
decimals with 12 significant digits; day/month inputs are converted at
the boundary only.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import oracle
from .dist import SalesRateDistribution, discrete_rates
from .fit import FitOptions, RankingTrajectory, fit_pareto
from .limit import build_share_report, x_c, y_c
from .sim import SimulationConfig, run_simulation

_TIME_UNIT_HOURS = {"hour": 1.0, "day": 24.0, "month": 720.0}

_FMT = "{:.12g}"


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ensure_writable(path: str, force: bool) -> None:
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")


def _parse_grid(spec: str) -> np.ndarray:
    """start:stop:step grid specification, endpoints included."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ValueError(f"bad grid spec {spec!r}; expected start:stop:step") from None
    if step <= 0.0 or stop < start:
        raise ValueError(f"bad grid spec {spec!r}: need step > 0 and stop >= start")
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)


def _make_dist(a: float, b: float, gamma: float) -> SalesRateDistribution:
    if gamma > 0.0:
        return SalesRateDistribution.pareto_cutoff(a, b, gamma)
    return SalesRateDistribution.pareto(a, b)


def _cmd_fit(args) -> int:
    _ensure_writable(args.output, args.force)
    traj = RankingTrajectory.from_csv(args.input)
    scale = _TIME_UNIT_HOURS[args.time_unit]
    if scale != 1.0:
        traj = RankingTrajectory(traj.times * scale, traj.ranks, meta=traj.meta)
    result = fit_pareto(traj, FitOptions(workers=args.workers))
    with open(args.output, "w") as fh:
        fh.write(result.to_json() + "\n")
    print(f"fit: N*={_FMT.format(result.n_star)} a*={_FMT.format(result.a_star)}/hour "
          f"b*={_FMT.format(result.b_star)} chi2={_FMT.format(result.chi2)} "
          f"converged={result.converged}")
    return 0 if result.converged else 2


def _cmd_shares(args) -> int:
    _ensure_writable(args.output, args.force)
    dist = _make_dist(args.a, args.b, args.gamma)
    report = build_share_report(dist, _parse_grid(args.r_grid))
    report.to_csv(args.output)
    print(f"shares: wrote {len(report.r)} rows to {args.output}")
    return 0


def _cmd_eval(args) -> int:
    dist = _make_dist(args.a, args.b, args.gamma)
    if args.times:
        ts = np.array([float(x) for x in args.times.split(",")])
    else:
        ts = _parse_grid(args.t_grid)
    ts = ts * _TIME_UNIT_HOURS[args.time_unit]
    print("t_hours,y_c,x_c")
    for t in ts:
        print(f"{_FMT.format(t)},{_FMT.format(y_c(dist, t))},"
              f"{_FMT.format(x_c(dist, t, args.n))}")
    return 0


def _load_sim_config(path: str) -> tuple[SimulationConfig, bool]:
    required = {"n_items", "a", "b", "horizon", "seed", "observe_every"}
    optional = {"gamma", "track_item", "snapshots", "max_events"}
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in required | optional:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value.strip()
    missing = required - values.keys()
    if missing:
        raise ValueError(f"{path}: missing keys: {', '.join(sorted(missing))}")
    n_items = int(values["n_items"])
    a, b = float(values["a"]), float(values["b"])
    gamma = float(values.get("gamma", "0"))
    horizon = float(values["horizon"])
    every = float(values["observe_every"])
    if every <= 0.0:
        raise ValueError(f"{path}: observe_every must be positive")
    observe_times = np.arange(every, horizon * (1.0 + 1e-12), every)
    track = values.get("track_item")
    track_item = int(track) if track not in (None, "") else None
    initial_order = None
    if track_item is not None:
        # the tracked item plays the just-sold observer: it starts at rank 1
        if not 0 <= track_item < n_items:
            raise ValueError(f"{path}: track_item out of range")
        initial_order = np.empty(n_items, dtype=np.int64)
        initial_order[track_item] = 1
        others = np.arange(n_items) != track_item
        initial_order[others] = np.arange(2, n_items + 1)
    snapshots = values.get("snapshots", "0").lower() in ("1", "true", "yes")
    cfg = SimulationConfig(
        rates=discrete_rates(n_items, a, b, gamma),
        horizon=horizon,
        seed=int(values["seed"]),
        observe_times=observe_times,
        initial_order=initial_order,
        track_item=track_item,
        record_snapshots=snapshots,
        max_events=float(values.get("max_events", "1e8")),
    )
    return cfg, snapshots


def _cmd_simulate(args) -> int:
    cfg, snapshots = _load_sim_config(args.config)
    events_path = f"{args.output_prefix}_events.csv"
    traj_path = f"{args.output_prefix}_trajectory.csv"
    _ensure_writable(events_path, args.force)
    _ensure_writable(traj_path, args.force)
    run = run_simulation(cfg)
    with open(events_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "item"])
        for t, i in zip(run.event_times, run.event_items):
            writer.writerow([f"{t:.12g}", int(i)])
    if run.tracked_trajectory is not None:
        run.tracked_trajectory.to_csv(traj_path)
    if snapshots:
        for k, theta in enumerate(run.observe_times):
            snap_path = f"{args.output_prefix}_snapshot_{k:04d}.csv"
            _ensure_writable(snap_path, args.force)
            ranks = run.snapshot_at(theta)
            with open(snap_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["item", "w", "rank"])
                for i in range(run.n_items):
                    writer.writerow([i, f"{cfg.rates[i]:.12g}", int(ranks[i])])
    print(f"simulate: {run.total_events} events, wrote {events_path}")
    return 0


def _cmd_report(args) -> int:
    fit_path = f"{args.output_prefix}_fit.json"
    shares_path = f"{args.output_prefix}_shares.csv"
    _ensure_writable(fit_path, args.force)
    _ensure_writable(shares_path, args.force)
    traj = RankingTrajectory.from_csv(args.input)
    result = fit_pareto(traj, FitOptions(workers=args.workers))
    with open(fit_path, "w") as fh:
        fh.write(result.to_json() + "\n")
    dist = _make_dist(result.a_star, result.b_star, 0.0)
    report = build_share_report(dist, _parse_grid(args.r_grid))
    report.to_csv(shares_path)
    print(f"report: b*={_FMT.format(result.b_star)} "
          f"({'converged' if result.converged else 'NOT converged'}); "
          f"wrote {fit_path} and {shares_path}")
    return 0 if result.converged else 2


def _cmd_oracle(args) -> int:
    if args.what == "gamma":
        v, e = oracle.gamma_quad(args.z, args.p)
        print(f"{_FMT.format(v)} +- {e:.3g}")
    elif args.what == "laplace":
        v, e = oracle.laplace_quad(args.a, args.b, args.t, gamma=args.gamma)
        print(f"{_FMT.format(v)} +- {e:.3g}")
    elif args.what == "q":
        v = oracle.q_quad(args.b, args.r)
        resid = abs((1.0 - oracle.laplace_quad(1.0, args.b, v)[0]) - args.r)
        print(f"{_FMT.format(v)} +- residual {resid:.3g}")
    else:  # shares
        v, e = oracle.ranking_share_quad(args.a, args.b, args.r1, args.r2,
                                         gamma=args.gamma)
        print(f"{_FMT.format(v)} +- {e:.3g}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="rankflow",
                     description="stochastic ranking process toolkit")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="least-squares (N, a, b) from a trajectory CSV")
    p.add_argument("input", help="CSV with header t_hours,rank")
    p.add_argument("-o", "--output", required=True, help="FitResult JSON path")
    p.add_argument("--time-unit", choices=sorted(_TIME_UNIT_HOURS), default="hour")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("shares", help="tabulate tail sales shares over an r grid")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--r-grid", default="0.01:0.9:0.01", help="start:stop:step")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_shares)

    p = sub.add_parser("eval", help="print t, y_c(t), x_c(t) rows")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--n", type=int, required=True, help="catalog size N")
    p.add_argument("--times", help="comma-separated times")
    p.add_argument("--t-grid", help="start:stop:step")
    p.add_argument("--time-unit", choices=sorted(_TIME_UNIT_HOURS), default="hour")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("simulate", help="run the finite-N process from a config file")
    p.add_argument("config", help="flat key=value file")
    p.add_argument("-o", "--output-prefix", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="fit a trajectory, then emit its share table")
    p.add_argument("input", help="CSV with header t_hours,rank")
    p.add_argument("-o", "--output-prefix", required=True)
    p.add_argument("--r-grid", default="0.01:0.9:0.01")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("oracle", help="quadrature/bisection reference values")
    osub = p.add_subparsers(dest="what", required=True, parser_class=_Parser)
    g = osub.add_parser("gamma")
    g.add_argument("z", type=float)
    g.add_argument("p", type=float)
    lap = osub.add_parser("laplace")
    lap.add_argument("kind", choices=["pareto", "cutoff"])
    lap.add_argument("a", type=float)
    lap.add_argument("b", type=float)
    lap.add_argument("t", type=float)
    lap.add_argument("--gamma", type=float, default=0.0)
    qp = osub.add_parser("q")
    qp.add_argument("b", type=float)
    qp.add_argument("r", type=float)
    sh = osub.add_parser("shares")
    sh.add_argument("a", type=float)
    sh.add_argument("b", type=float)
    sh.add_argument("r1", type=float)
    sh.add_argument("r2", type=float)
    sh.add_argument("--gamma", type=float, default=0.0)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "what", None) == "laplace" and args.kind == "cutoff" \
            and args.gamma <= 0.0:
        parser.error("cutoff oracle needs --gamma > 0")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        print(f"rankflow: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
