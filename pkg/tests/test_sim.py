"""Finite-N simulator: exactness of the dynamics and convergence to the limit."""

import math

import numpy as np
import pytest

from rankflow.dist import SalesRateDistribution, discrete_rates
from rankflow.limit import stationary_joint_cdf, y_c
from rankflow.sim import (
    CapacityError,
    MissingSnapshotError,
    SimulationConfig,
    empirical_joint_measure,
    load_events_csv,
    load_snapshot_csv,
    run_simulation,
    synthesize_noisy_trajectory,
    x_c_trajectory,
)

LOW_A, LOW_B = 3.939e-4, 0.6312


def small_run(**overrides):
    kwargs = dict(rates=discrete_rates(300, 0.05, 0.8), horizon=30.0, seed=11,
                  observe_times=np.linspace(0.0, 30.0, 16), track_item=123,
                  record_snapshots=True)
    kwargs.update(overrides)
    return run_simulation(SimulationConfig(**kwargs))


def test_single_item_always_rank_one():
    cfg = SimulationConfig(rates=np.array([2.0]), horizon=5.0, seed=1,
                           observe_times=np.linspace(0.0, 5.0, 6), track_item=0)
    run = run_simulation(cfg)
    assert np.all(run.tracked_trajectory.ranks == 1.0)


def test_two_symmetric_items_split_the_top():
    cfg = SimulationConfig(rates=np.array([1.0, 1.0]), horizon=5e4, seed=7,
                           observe_times=np.arange(1.0, 5e4, 1.0), track_item=0,
                           record_events=False)
    run = run_simulation(cfg)
    frac = float(np.mean(run.tracked_trajectory.ranks == 1.0))
    # 3 sigma binomial window around 1/2 (samples are weakly correlated,
    # but the run covers ~5e4 renewal cycles)
    assert abs(frac - 0.5) <= 3.0 * 0.5 / math.sqrt(run.tracked_trajectory.n_d) * 3.0


def test_determinism_bit_identical():
    mk = lambda: SimulationConfig(rates=np.array([1.0, 2.0, 0.5]), horizon=200.0,
                                  seed=42, observe_times=np.array([100.0]))
    r1, r2 = run_simulation(mk()), run_simulation(mk())
    assert np.array_equal(r1.event_times, r2.event_times)
    assert np.array_equal(r1.event_items, r2.event_items)
    assert r1.total_events == r2.total_events


def test_snapshots_are_permutations():
    run = small_run()
    for ranks in run.snapshots.values():
        assert np.array_equal(np.sort(ranks), np.arange(1, run.n_items + 1))


def test_boundary_separates_sold_from_never_sold():
    run = small_run()
    for theta, count in zip(run.observe_times, run.boundary_counts):
        ranks = run.snapshot_at(theta)
        sold = run.first_sale <= theta
        assert int(sold.sum()) == count
        if sold.any():
            assert ranks[sold].max() == count
        if (~sold).any():
            assert ranks[~sold].min() == count + 1


def test_tracked_rank_agrees_with_snapshots():
    run = small_run()
    from_snapshots = [float(run.snapshot_at(t)[123]) for t in run.observe_times]
    np.testing.assert_allclose(run.tracked_trajectory.ranks, from_snapshots)


def test_tracked_rank_resets_and_climbs():
    run = small_run(track_item=0, horizon=60.0,
                    observe_times=np.linspace(0.0, 60.0, 400))
    traj = run.tracked_trajectory.ranks
    own_sales = run.event_times[run.event_items == 0]
    assert own_sales.size > 0
    # between consecutive own sales the rank never decreases
    for lo, hi in zip(own_sales[:-1], own_sales[1:]):
        seg = traj[(run.observe_times > lo) & (run.observe_times < hi)]
        assert np.all(np.diff(seg) >= 0.0)
    # observation right after an own sale shows rank 1
    after = np.searchsorted(run.observe_times, own_sales[0])
    if after < run.observe_times.size:
        next_other = run.event_times[(run.event_times > own_sales[0])
                                     & (run.event_items != 0)]
        if next_other.size and run.observe_times[after] < next_other[0]:
            assert traj[after] == 1.0


def test_initial_order_respected_before_any_sale():
    order = np.array([3, 1, 2], dtype=np.int64)
    cfg = SimulationConfig(rates=np.array([1e-9, 1e-9, 1e-9]), horizon=1.0,
                           seed=0, observe_times=np.array([0.5]),
                           initial_order=order, record_snapshots=True)
    run = run_simulation(cfg)
    np.testing.assert_array_equal(run.snapshot_at(0.5), order)


def test_capacity_error():
    cfg = SimulationConfig(rates=np.full(100, 10.0), horizon=1e6, seed=0,
                           max_events=1e6)
    with pytest.raises(CapacityError):
        run_simulation(cfg)


def test_x_c_trajectory_fallbacks():
    run = small_run()
    other = x_c_trajectory(run, 5)
    assert other.n_d == run.observe_times.size
    no_snap = small_run(record_snapshots=False, track_item=None)
    with pytest.raises(ValueError):
        x_c_trajectory(no_snap, 5)
    with pytest.raises(IndexError):
        x_c_trajectory(run, 10 ** 9)


def test_missing_snapshot_error():
    run = small_run()
    with pytest.raises(MissingSnapshotError):
        run.snapshot_at(123.456)


def test_boundary_converges_to_limit_curve():
    a, b = LOW_A, LOW_B
    d = SalesRateDistribution.pareto(a, b)
    obs = np.linspace(4.0, 200.0, 25)
    for n in (10 ** 3, 10 ** 4):
        cfg = SimulationConfig(rates=discrete_rates(n, a, b), horizon=200.0,
                               seed=5, observe_times=obs, record_events=False)
        run = run_simulation(cfg)
        dev = np.abs(run.y_c_boundary() - y_c(d, obs))
        assert dev.max() <= 3.0 / math.sqrt(n)
        assert dev.max() * math.sqrt(n) <= 5.0


def test_joint_measure_rank_marginal_is_uniform():
    run = small_run(horizon=50.0, observe_times=np.array([40.0]), track_item=None)
    y_edges = np.linspace(0.0, 1.0, 6)
    h, _, _ = empirical_joint_measure(run, 40.0, y_edges, np.array([0.0, np.inf]))
    np.testing.assert_allclose(h.sum(), 1.0)
    np.testing.assert_allclose(h[0], 0.2, atol=2.0 / 300)


def test_joint_measure_product_form_at_time_zero():
    # with a rate-independent initial order the t = 0 measure factorizes
    n = 2000
    rng = np.random.default_rng(8)
    rates = discrete_rates(n, 1.0, 1.5)
    order = rng.permutation(n).astype(np.int64) + 1
    cfg = SimulationConfig(rates=rates, horizon=1.0, seed=1,
                           observe_times=np.array([0.0]), initial_order=order,
                           record_snapshots=True, record_events=False)
    run = run_simulation(cfg)
    w_edges = np.array([1.0, 2.0, np.inf])
    y_edges = np.array([0.0, 0.5, 1.0])
    h, _, _ = empirical_joint_measure(run, 0.0, y_edges, w_edges)
    w_marg = h.sum(axis=1)
    y_marg = h.sum(axis=0)
    for i in range(2):
        for j in range(2):
            assert h[i, j] == pytest.approx(w_marg[i] * y_marg[j], abs=4.0 / math.sqrt(n))


def test_joint_measure_matches_nonstationary_formula():
    # early snapshot with rate-independent initial ranks: beyond the swept
    # boundary the product-form branch applies
    from rankflow.limit import nonstationary_joint_cdf
    n = 10 ** 5
    d = SalesRateDistribution.pareto(1.0, 1.5)
    t_snap = 0.5
    rng = np.random.default_rng(17)
    order = rng.permutation(n).astype(np.int64) + 1
    cfg = SimulationConfig(rates=discrete_rates(n, 1.0, 1.5), horizon=t_snap,
                           seed=31, observe_times=np.array([t_snap]),
                           initial_order=order, record_events=False,
                           record_snapshots=True)
    run = run_simulation(cfg)
    ranks = run.snapshot_at(t_snap)
    scaled = (ranks - 1.0) / n
    y_probe = 0.9
    assert y_probe > y_c(d, t_snap)
    in_band = (cfg.rates >= 1.0) & (cfg.rates <= 2.0)
    empirical = float(np.mean(in_band & (scaled <= y_probe)))
    predicted = nonstationary_joint_cdf(d, y_probe, 1.0, 2.0, t_snap)
    assert empirical == pytest.approx(predicted, abs=4.0 / math.sqrt(n))


def test_joint_measure_matches_stationary_formula_mid_scale():
    n = 20000
    d = SalesRateDistribution.pareto(1.0, 1.5)
    t_snap = 5.0
    cfg = SimulationConfig(rates=discrete_rates(n, 1.0, 1.5), horizon=t_snap,
                           seed=12, observe_times=np.array([t_snap]),
                           record_events=False, record_snapshots=True)
    run = run_simulation(cfg)
    w_bins = np.array([1.0, 2.0, np.inf])
    y_bins = np.array([0.0, 0.3, 0.7])
    h, _, _ = empirical_joint_measure(run, t_snap, y_bins, w_bins)
    for i in range(2):
        for j in range(2):
            hi = stationary_joint_cdf(d, y_bins[j + 1], w_bins[i], w_bins[i + 1])
            lo = stationary_joint_cdf(d, y_bins[j], w_bins[i], w_bins[i + 1]) \
                if y_bins[j] > 0.0 else 0.0
            assert h[i, j] == pytest.approx(hi - lo, abs=4.0 / math.sqrt(n))


def test_synthesize_noiseless_is_exact_curve():
    d = SalesRateDistribution.pareto(LOW_A, LOW_B)
    ts = np.linspace(10.0, 1900.0, 20)
    traj = synthesize_noisy_trajectory(d, 857000, ts, 0.0, seed=0)
    np.testing.assert_allclose(traj.ranks, 857000 * y_c(d, ts), rtol=1e-12)


def test_synthesize_noise_scale_and_seed_variation():
    d = SalesRateDistribution.pareto(LOW_A, LOW_B)
    ts = np.linspace(10.0, 1900.0, 77)
    sigma = math.sqrt(1.599e10 / 77)
    t1 = synthesize_noisy_trajectory(d, 857000, ts, sigma, seed=1)
    t2 = synthesize_noisy_trajectory(d, 857000, ts, sigma, seed=2)
    assert not np.array_equal(t1.ranks, t2.ranks)
    resid = t1.ranks - 857000 * y_c(d, ts)
    assert sigma / 3.0 <= resid.std() <= sigma * 3.0
    with pytest.raises(ValueError):
        synthesize_noisy_trajectory(d, 100, ts, -1.0, seed=0)


def test_event_and_snapshot_csv_readers(tmp_path):
    ev = tmp_path / "events.csv"
    ev.write_text("t,item\n0.5,3\n1.25,0\n")
    times, items = load_events_csv(ev)
    np.testing.assert_allclose(times, [0.5, 1.25])
    np.testing.assert_array_equal(items, [3, 0])
    snap = tmp_path / "snap.csv"
    snap.write_text("item,w,rank\n0,1.5,2\n1,0.7,1\n")
    items, rates, ranks = load_snapshot_csv(snap)
    np.testing.assert_array_equal(ranks, [2, 1])
    bad = tmp_path / "bad.csv"
    bad.write_text("t,item\nxx,0\n")
    with pytest.raises(ValueError, match=":2"):
        load_events_csv(bad)
