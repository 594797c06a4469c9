"""Least-squares recovery of (N, a, b) from an observed ranking trajectory.

The model is rank(t) = N * y(t; a, b) with y the closed-form limit curve of
the power-law rate distribution. The descent runs in (log N, log a, b)
coordinates with a derivative-free simplex, restarted from a coarse grid of
data-scaled initial guesses; the curve's t^b rise near zero for b < 1 makes
gradient steps unreliable there.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .limit import _pareto_y_grid

__all__ = [
    "RankingTrajectory",
    "FitOptions",
    "FitResult",
    "Regime",
    "RegimeReport",
    "chi2",
    "fit_pareto",
    "classify_regime",
]

_B_GUARD = 1e-6

TRAJECTORY_HEADER = ["t_hours", "rank"]


@dataclass
class RankingTrajectory:
    """Observed (time, rank) points for one item between its own sales.

    Times are in hours with t = 0 at a sale of the observed item; ranks may
    be fractional (averaged observations) but never below 1.
    """

    times: np.ndarray
    ranks: np.ndarray
    meta: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.ranks = np.asarray(self.ranks, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.ranks.shape:
            raise ValueError("times and ranks must be matching 1-d arrays")
        if self.times.size and self.times[0] < 0.0:
            raise ValueError("times must be non-negative")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.ranks < 1.0):
            raise ValueError("ranks must be >= 1")

    @property
    def n_d(self) -> int:
        return int(self.times.size)

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.ranks.tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_HEADER)
            for t, r in zip(self.times, self.ranks):
                writer.writerow([f"{t:.12g}", f"{r:.12g}"])

    @classmethod
    def from_csv(cls, path, meta: str = "") -> "RankingTrajectory":
        times, ranks = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ValueError(f"{path}: empty file")
            if [h.strip() for h in header] != TRAJECTORY_HEADER:
                raise ValueError(f"{path}: expected header {','.join(TRAJECTORY_HEADER)}")
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise ValueError(f"{path}:{lineno}: expected two comma-separated values")
                try:
                    times.append(float(row[0]))
                    ranks.append(float(row[1]))
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: malformed number in {row!r}") from None
        if not times:
            raise ValueError(f"{path}: no observations found")
        return cls(np.array(times), np.array(ranks), meta=meta or str(path))


@dataclass
class FitOptions:
    max_iter: int = 2000
    xatol: float = 1e-9          # simplex diameter in (log N, log a, b)
    top_starts: int = 6          # descents launched from the best grid points
    workers: int = 1             # capped by RANKFLOW_THREADS
    weights: np.ndarray | None = None
    extra_starts: list[tuple[float, float, float]] = field(default_factory=list)


@dataclass
class FitResult:
    n_star: float
    a_star: float
    b_star: float
    chi2: float
    delta_y_c: float
    converged: bool
    starts_tried: int

    def to_json(self) -> str:
        return json.dumps({
            "n_star": self.n_star,
            "a_star": self.a_star,
            "b_star": self.b_star,
            "chi2": self.chi2,
            "delta_y_c": self.delta_y_c,
            "converged": self.converged,
            "starts_tried": self.starts_tried,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        d = json.loads(text)
        return cls(d["n_star"], d["a_star"], d["b_star"], d["chi2"],
                   d["delta_y_c"], d["converged"], d["starts_tried"])


def chi2(traj: RankingTrajectory, n: float, a: float, b: float,
         weights: np.ndarray | None = None) -> float:
    """Sum of squared rank residuals against the curve n * y(t; a, b)."""
    if not (n > 0.0 and a > 0.0 and 0.0 < b <= 2.0):
        raise ValueError("need n > 0, a > 0, b in (0, 2]")
    if abs(b - 1.0) < _B_GUARD:
        raise ValueError(f"b must stay outside 1 +/- {_B_GUARD}")
    resid = traj.ranks - n * _pareto_y_grid(a, b, traj.times)
    if weights is not None:
        resid = resid * np.asarray(weights, dtype=float)
    return float(resid @ resid)


def _objective(x: np.ndarray, times: np.ndarray, ranks: np.ndarray,
               weights: np.ndarray | None) -> float:
    ln_n, ln_a, b = x
    if not (_B_GUARD < b < 2.0) or abs(b - 1.0) < _B_GUARD:
        return 1e300
    if not (-700.0 < ln_n < 700.0 and -700.0 < ln_a < 700.0):
        return 1e300
    resid = ranks - math.exp(ln_n) * _pareto_y_grid(math.exp(ln_a), b, times)
    if weights is not None:
        resid = resid * weights
    return float(resid @ resid)


def _descend(args):
    x0, times, ranks, weights, max_iter, xatol = args
    f0 = _objective(np.asarray(x0), times, ranks, weights)
    res = minimize(
        _objective, x0, args=(times, ranks, weights), method="Nelder-Mead",
        options=dict(maxiter=max_iter, maxfev=4 * max_iter,
                     xatol=xatol, fatol=1e-12 * (1.0 + abs(f0))),
    )
    return float(res.fun), res.x, bool(res.success)


def _start_grid(traj: RankingTrajectory) -> list[np.ndarray]:
    max_rank = float(traj.ranks.max())
    t_span = float(traj.times[-1] - traj.times[0]) or float(traj.times[-1])
    starts = []
    for n_mult in (1.05, 2.0, 5.0, 10.0):
        for a_mult in (0.3, 1.0, 3.0, 10.0):
            for b0 in (0.3, 0.5, 0.7, 0.9, 1.2, 1.5):
                starts.append(np.array([math.log(max_rank * n_mult),
                                        math.log(a_mult / t_span), b0]))
    return starts


def _resolve_workers(requested: int) -> int:
    cap = os.environ.get("RANKFLOW_THREADS")
    if cap is not None:
        try:
            requested = min(requested, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, requested)


def fit_pareto(traj: RankingTrajectory, options: FitOptions | None = None) -> FitResult:
    """Best mean-square (N, a, b) for the observed trajectory.

    Screens a coarse data-scaled grid by residual, then runs simplex
    descents from the most promising points on each side of b = 1 and keeps
    the overall best. Non-convergence is reported through the result flag,
    not raised.
    """
    opts = options or FitOptions()
    if traj.n_d < 6:
        raise ValueError(f"insufficient observations: need at least 6, got {traj.n_d}")
    if traj.times[-1] <= traj.times[0]:
        raise ValueError("trajectory has no time span")
    if float(traj.ranks.max()) == float(traj.ranks.min()):
        raise ValueError("degenerate data: all ranks equal")

    weights = None
    if opts.weights is not None:
        weights = np.asarray(opts.weights, dtype=float)
        if weights.shape != traj.times.shape:
            raise ValueError("weights must match the number of observations")

    grid = _start_grid(traj)
    scores = np.array([_objective(x, traj.times, traj.ranks, weights) for x in grid])
    order = np.argsort(scores)
    per_side = max(1, opts.top_starts // 2)
    low_side = [grid[i] for i in order if grid[i][2] < 1.0][:per_side]
    high_side = [grid[i] for i in order if grid[i][2] > 1.0][:per_side]
    starts = low_side + high_side
    for n0, a0, b0 in opts.extra_starts:
        starts.append(np.array([math.log(n0), math.log(a0), float(b0)]))

    jobs = [(x0, traj.times, traj.ranks, weights, opts.max_iter, opts.xatol)
            for x0 in starts]
    workers = _resolve_workers(opts.workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_descend, jobs))
    else:
        outcomes = [_descend(j) for j in jobs]

    best_fun, best_x, _ = min(outcomes, key=lambda o: o[0])
    # polish from the winner; also settles ties between nearby basins
    fun, x, success = _descend((best_x, traj.times, traj.ranks, weights,
                                opts.max_iter, opts.xatol))
    if fun > best_fun:
        fun, x = best_fun, best_x
    converged = success or any(o[2] for o in outcomes)

    n_star, a_star, b_star = math.exp(x[0]), math.exp(x[1]), float(x[2])
    return FitResult(
        n_star=n_star, a_star=a_star, b_star=b_star, chi2=fun,
        delta_y_c=math.sqrt(fun / traj.n_d) / n_star,
        converged=converged, starts_tried=len(starts),
    )


class Regime(enum.Enum):
    GREAT_HITS = "great_hits"    # b < 1: top items dominate total sales
    LONG_TAIL = "long_tail"      # b > 1: the aggregate of slow sellers dominates
    INDETERMINATE = "indeterminate"


@dataclass
class RegimeReport:
    regime: Regime
    short_time_shape: str        # early trajectory shape implied by b


def classify_regime(result: FitResult, guard: float = 0.02) -> RegimeReport:
    """Which side of b = 1 the fitted exponent falls on.

    Within ``guard`` of 1 the call is indeterminate. The short-time shape
    notes whether the trajectory should leave t = 0 tangent to the ranking
    axis (like t^b, b < 1) or linearly (b > 1).
    """
    if not result.converged:
        raise ValueError("regime classification needs a converged fit")
    b = result.b_star
    if abs(b - 1.0) < guard:
        return RegimeReport(Regime.INDETERMINATE, "indeterminate")
    if b < 1.0:
        return RegimeReport(Regime.GREAT_HITS, f"concave, rises like t^{b:.4g}")
    return RegimeReport(Regime.LONG_TAIL, "linear")
