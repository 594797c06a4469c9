"""Exact event-driven simulation of the finite-catalog ranking process.

Sales form a superposition of independent exponential clocks: the next
event arrives after Exp(sum of rates) and belongs to item i with
probability w_i / W (alias-table draw, O(1) per event). Rankings are never
shifted per event; move-to-front order is recovered on demand because at
any instant the queue reads "items in reverse order of last sale, then the
never-sold in their initial order". That keeps a run at O(events) plus
O(N log N) per observation instead of O(events * N).

Runs are the Monte-Carlo oracle for the closed-form limit curves: the
scaled count of ever-sold items converges on the limit curve, and the
joint (rate, scaled rank) histogram converges on the limiting measure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dist import SalesRateDistribution
from .fit import RankingTrajectory
from .limit import y_c

__all__ = [
    "CapacityError",
    "MissingSnapshotError",
    "SimulationConfig",
    "SimulationRun",
    "run_simulation",
    "x_c_trajectory",
    "empirical_joint_measure",
    "synthesize_noisy_trajectory",
    "load_events_csv",
    "load_snapshot_csv",
]

_CHUNK = 1 << 19
_GENERATOR_NAME = "numpy PCG64 (default_rng)"


class CapacityError(RuntimeError):
    """Expected event count exceeds the configured cap."""


class MissingSnapshotError(KeyError):
    """No ranking snapshot was recorded at the requested time."""


@dataclass
class SimulationConfig:
    """Inputs of one run; identical configs give bit-identical runs.

    ``rates`` are per-item sales rates (1/hour); ``initial_order`` is the
    rank permutation at t = 0 (1-based ranks, default: item i starts at
    rank i + 1). ``observe_times`` is the sorted grid where the boundary,
    the tracked item, and optional full snapshots are recorded.
    """

    rates: np.ndarray
    horizon: float
    seed: int
    observe_times: np.ndarray = field(default_factory=lambda: np.array([]))
    initial_order: np.ndarray | None = None
    track_item: int | None = None
    record_events: bool = True
    record_snapshots: bool = False
    max_events: float = 1e8

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        if self.rates.ndim != 1 or self.rates.size == 0:
            raise ValueError("rates must be a non-empty 1-d array")
        if not np.all(self.rates > 0.0):
            raise ValueError("all rates must be strictly positive")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        self.observe_times = np.asarray(self.observe_times, dtype=float)
        if np.any(np.diff(self.observe_times) < 0.0):
            raise ValueError("observe_times must be sorted")
        if self.observe_times.size and (self.observe_times[0] < 0.0
                                        or self.observe_times[-1] > self.horizon):
            raise ValueError("observe_times must lie within [0, horizon]")
        n = self.rates.size
        if self.initial_order is None:
            self.initial_order = np.arange(1, n + 1, dtype=np.int64)
        else:
            self.initial_order = np.asarray(self.initial_order, dtype=np.int64)
            if (self.initial_order.shape != (n,)
                    or not np.array_equal(np.sort(self.initial_order),
                                          np.arange(1, n + 1))):
                raise ValueError("initial_order must be a permutation of 1..N")
        if self.track_item is not None and not 0 <= self.track_item < n:
            raise ValueError("track_item out of range")

    @property
    def n_items(self) -> int:
        return int(self.rates.size)


@dataclass
class SimulationRun:
    """Event log (optional), per-item sale summaries, and observation data."""

    config: SimulationConfig
    total_events: int
    first_sale: np.ndarray            # time of first sale per item, inf if never
    last_sale: np.ndarray             # time of latest sale per item, nan if never
    event_times: np.ndarray | None
    event_items: np.ndarray | None
    observe_times: np.ndarray
    boundary_counts: np.ndarray       # ever-sold count at each observe time
    snapshots: dict[float, np.ndarray]
    tracked_trajectory: RankingTrajectory | None
    generator: str = _GENERATOR_NAME

    @property
    def n_items(self) -> int:
        return self.config.n_items

    def y_c_boundary(self) -> np.ndarray:
        """Scaled ever-sold boundary at the observation grid."""
        return self.boundary_counts / self.config.n_items

    def snapshot_at(self, t: float) -> np.ndarray:
        for key, ranks in self.snapshots.items():
            if math.isclose(key, t, rel_tol=1e-12, abs_tol=1e-12):
                return ranks
        raise MissingSnapshotError(f"no snapshot recorded at t={t}")


def _build_alias(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Walker alias table: accept[i] threshold and alias[i] fallback."""
    n = weights.size
    scaled = weights * (n / weights.sum())
    accept = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    scaled = scaled.copy()
    while small and large:
        s = small.pop()
        g = large.pop()
        accept[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        (small if scaled[g] < 1.0 else large).append(g)
    for i in large + small:
        accept[i] = 1.0
    return accept, alias


class _State:
    """Mutable per-run arrays updated chunk by chunk."""

    def __init__(self, cfg: SimulationConfig):
        n = cfg.n_items
        self.cfg = cfg
        self.first_time = np.full(n, np.inf)
        self.last_time = np.full(n, -np.inf)
        self.last_seq = np.full(n, -1, dtype=np.int64)
        self.own_seq = -1                       # tracked item's latest own sale
        self.boundary: list[int] = []
        self.tracked_ranks: list[float] = []
        self.snapshots: dict[float, np.ndarray] = {}
        # position of each item within the never-sold block
        self.init_rank = cfg.initial_order

    def apply(self, items: np.ndarray, times: np.ndarray, seq0: int) -> None:
        if items.size == 0:
            return
        # last occurrence of each item inside this block supersedes everything
        u_rev, pos_rev = np.unique(items[::-1], return_index=True)
        pos = items.size - 1 - pos_rev
        self.last_seq[u_rev] = seq0 + pos
        self.last_time[u_rev] = times[pos]
        u_first, pos_first = np.unique(items, return_index=True)
        self.first_time[u_first] = np.minimum(self.first_time[u_first], times[pos_first])
        ti = self.cfg.track_item
        if ti is not None:
            hits = np.nonzero(items == ti)[0]
            if hits.size:
                self.own_seq = seq0 + int(hits[-1])

    def observe(self, theta: float) -> None:
        n_sold = int(np.count_nonzero(self.last_seq >= 0))
        self.boundary.append(n_sold)
        ti = self.cfg.track_item
        if ti is not None:
            self.tracked_ranks.append(float(self._rank_of(ti, n_sold)))
        if self.cfg.record_snapshots:
            self.snapshots[theta] = self._all_ranks(n_sold)

    def _rank_of(self, item: int, n_sold: int) -> int:
        if self.last_seq[item] >= 0:
            return 1 + int(np.count_nonzero(self.last_seq > self.last_seq[item]))
        never = self.last_seq < 0
        ahead = int(np.count_nonzero(never & (self.init_rank < self.init_rank[item])))
        return n_sold + ahead + 1

    def _all_ranks(self, n_sold: int) -> np.ndarray:
        sold = self.last_seq >= 0
        subkey = np.where(sold, -self.last_seq, self.init_rank)
        order = np.lexsort((subkey, ~sold))
        ranks = np.empty(self.cfg.n_items, dtype=np.int64)
        ranks[order] = np.arange(1, self.cfg.n_items + 1)
        return ranks


def run_simulation(config: SimulationConfig) -> SimulationRun:
    """Run the process to the horizon; deterministic in the seed."""
    rates = config.rates
    total_rate = float(rates.sum())
    expected = total_rate * config.horizon
    if expected > config.max_events:
        raise CapacityError(
            f"expected {expected:.3g} events exceeds cap {config.max_events:.3g}; "
            "raise max_events or shorten the horizon")

    rng = np.random.default_rng(config.seed)
    accept, alias = _build_alias(rates)
    state = _State(config)
    obs = config.observe_times
    obs_idx = 0
    ev_times: list[np.ndarray] = []
    ev_items: list[np.ndarray] = []
    t_cursor = 0.0
    seq_base = 0
    done = False

    while not done:
        gaps = rng.exponential(1.0 / total_rate, _CHUNK)
        times = t_cursor + np.cumsum(gaps)
        slots = rng.random(_CHUNK)
        coin = rng.random(_CHUNK)
        j = np.minimum((slots * rates.size).astype(np.int64), rates.size - 1)
        items = np.where(coin < accept[j], j, alias[j])

        n_valid = int(np.searchsorted(times, config.horizon, side="right"))
        done = n_valid < _CHUNK
        times = times[:n_valid]
        items = items[:n_valid]
        applied = 0
        # on the final chunk every remaining observation is reachable
        limit = config.horizon if done else float(times[-1])
        while obs_idx < obs.size and obs[obs_idx] <= limit:
            theta = obs[obs_idx]
            cut = int(np.searchsorted(times, theta, side="right"))
            if cut > applied:
                state.apply(items[applied:cut], times[applied:cut], seq_base + applied)
                applied = cut
            state.observe(theta)
            obs_idx += 1
        if applied < n_valid:
            state.apply(items[applied:], times[applied:], seq_base + applied)
        if config.record_events and n_valid:
            ev_times.append(times.copy())
            ev_items.append(items.copy())
        seq_base += n_valid
        if not done:
            t_cursor = float(times[-1])

    tracked = None
    if config.track_item is not None and obs.size:
        tracked = RankingTrajectory(
            times=obs.copy(), ranks=np.array(state.tracked_ranks),
            meta=f"simulated item {config.track_item}, seed {config.seed}")

    last_sale = np.where(state.last_seq >= 0, state.last_time, np.nan)
    return SimulationRun(
        config=config,
        total_events=seq_base,
        first_sale=state.first_time,
        last_sale=last_sale,
        event_times=np.concatenate(ev_times) if config.record_events and ev_times else (
            np.array([]) if config.record_events else None),
        event_items=np.concatenate(ev_items) if config.record_events and ev_items else (
            np.array([], dtype=np.int64) if config.record_events else None),
        observe_times=obs.copy(),
        boundary_counts=np.array(state.boundary, dtype=np.int64),
        snapshots=state.snapshots,
        tracked_trajectory=tracked,
    )


def x_c_trajectory(run: SimulationRun, item: int) -> RankingTrajectory:
    """(time, rank) series of one item at the run's observation grid."""
    if not 0 <= item < run.n_items:
        raise IndexError(f"item {item} out of range")
    if run.config.track_item == item and run.tracked_trajectory is not None:
        return run.tracked_trajectory
    if run.snapshots:
        ts, ranks = [], []
        for theta in run.observe_times:
            ts.append(theta)
            ranks.append(float(run.snapshot_at(theta)[item]))
        return RankingTrajectory(np.array(ts), np.array(ranks),
                                 meta=f"item {item} from snapshots")
    raise ValueError("item was not tracked and no snapshots were recorded")


def empirical_joint_measure(run: SimulationRun, t: float,
                            y_bins, w_bins) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint (rate, scaled rank) histogram at a snapshot time.

    Returns (H, w_edges, y_edges) with H[i, j] the item fraction whose rate
    falls in w-bin i and scaled rank (X - 1)/N in y-bin j; total mass 1
    when the bins cover everything.
    """
    ranks = run.snapshot_at(t)
    n = run.n_items
    scaled = (ranks - 1.0) / n
    h, w_edges, y_edges = np.histogram2d(run.config.rates, scaled,
                                         bins=[np.asarray(w_bins), np.asarray(y_bins)])
    return h / n, w_edges, y_edges


def load_events_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read an event-log CSV with header ``t,item``."""
    times, items = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "item"]:
            raise ValueError(f"{path}: expected header t,item")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                times.append(float(row[0]))
                items.append(int(row[1]))
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: malformed event row {row!r}") from None
    return np.array(times), np.array(items, dtype=np.int64)


def load_snapshot_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a snapshot CSV with header ``item,w,rank``."""
    items, rates, ranks = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["item", "w", "rank"]:
            raise ValueError(f"{path}: expected header item,w,rank")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                items.append(int(row[0]))
                rates.append(float(row[1]))
                ranks.append(int(row[2]))
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: malformed snapshot row {row!r}") from None
    return (np.array(items, dtype=np.int64), np.array(rates),
            np.array(ranks, dtype=np.int64))


def synthesize_noisy_trajectory(dist: SalesRateDistribution, n_titles: int,
                                observe_times, noise_sigma: float,
                                seed: int) -> RankingTrajectory:
    """Fit-test fixture: closed-form curve samples plus Gaussian rank noise,
    clamped to the valid rank range [1, n_titles]."""
    if noise_sigma < 0.0:
        raise ValueError("noise_sigma must be non-negative")
    ts = np.asarray(observe_times, dtype=float)
    ranks = n_titles * y_c(dist, ts)
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        ranks = ranks + rng.normal(0.0, noise_sigma, ts.shape)
    ranks = np.clip(ranks, 1.0, float(n_titles))
    return RankingTrajectory(ts, ranks,
                             meta=f"synthetic n={n_titles} sigma={noise_sigma} seed={seed}")
