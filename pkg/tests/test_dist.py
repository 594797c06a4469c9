"""Distribution construction, Laplace transforms, and CSV ingestion."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankflow.dist import (
    SalesRateDistribution,
    band_laplace,
    band_mass,
    discrete_rates,
    laplace_transform,
    load_rates_csv,
    save_rates_csv,
)
from rankflow.oracle import laplace_quad

LOW_A, LOW_B = 3.939e-4, 0.6312


def test_validation():
    with pytest.raises(ValueError):
        SalesRateDistribution.pareto(-1.0, 0.5)
    with pytest.raises(ValueError):
        SalesRateDistribution.pareto(1.0, 0.0)
    with pytest.raises(ValueError):
        SalesRateDistribution.pareto(1.0, 2.5)
    with pytest.raises(ValueError):
        SalesRateDistribution.pareto(1.0, 1.0 + 5e-7)  # inside the guard band
    with pytest.raises(ValueError):
        SalesRateDistribution.pareto_cutoff(1.0, 0.5, -0.1)
    with pytest.raises(ValueError):
        SalesRateDistribution.empirical([1.0, 0.0, 2.0])
    with pytest.raises(ValueError):
        SalesRateDistribution.empirical([])
    # b = 2 is the admissible endpoint
    SalesRateDistribution.pareto(1.0, 2.0)


def test_laplace_at_zero_is_one():
    for d in [SalesRateDistribution.pareto(LOW_A, LOW_B),
              SalesRateDistribution.pareto(1.0, 1.5),
              SalesRateDistribution.pareto_cutoff(1.0, 0.7, 1e-3),
              SalesRateDistribution.empirical([0.3, 1.0, 7.0])]:
        assert laplace_transform(d, 0.0) == 1.0


def test_laplace_rejects_negative_time():
    d = SalesRateDistribution.pareto(1.0, 0.5)
    with pytest.raises(ValueError):
        laplace_transform(d, -0.1)


def test_empirical_single_rate_halves_at_ln2():
    d = SalesRateDistribution.empirical([1.0])
    assert laplace_transform(d, math.log(2.0)) == pytest.approx(0.5, rel=1e-12)


def test_pareto_matches_quadrature_oracle():
    d = SalesRateDistribution.pareto(LOW_A, LOW_B)
    # frozen from the scaled-variable quadrature of the density
    assert laplace_transform(d, 100.0) == pytest.approx(0.753934042845098911, rel=1e-10)
    for t in [1e-3, 1.0, 100.0, 2500.0, 2e4]:
        ref, err = laplace_quad(LOW_A, LOW_B, t)
        assert abs(laplace_transform(d, t) - ref) <= max(1e-9 * ref, 3.0 * err)


def test_pareto_b_above_one_matches_oracle():
    d = SalesRateDistribution.pareto(2.0, 1.3)
    for t in [0.01, 0.3, 2.0, 9.0]:
        ref, err = laplace_quad(2.0, 1.3, t)
        assert abs(laplace_transform(d, t) - ref) <= max(1e-9 * ref, 3.0 * err)


def test_pareto_b_equal_two_endpoint():
    d = SalesRateDistribution.pareto(1.0, 2.0)
    for t in [0.05, 0.7, 4.0]:
        ref, err = laplace_quad(1.0, 2.0, t)
        assert abs(laplace_transform(d, t) - ref) <= max(1e-9 * ref, 3.0 * err)


@settings(max_examples=60, deadline=None)
@given(t1=st.floats(0.0, 50.0), dt=st.floats(1e-3, 50.0),
       b=st.floats(0.1, 1.9).filter(lambda b: abs(b - 1.0) >= 1e-3))
def test_laplace_strictly_decreasing(t1, dt, b):
    d = SalesRateDistribution.pareto(0.5, b)
    assert laplace_transform(d, t1) > laplace_transform(d, t1 + dt)


def test_array_evaluation_matches_scalars():
    d = SalesRateDistribution.pareto(LOW_A, LOW_B)
    ts = np.array([0.0, 3.0, 77.0, 1900.0])
    arr = laplace_transform(d, ts)
    assert arr.shape == ts.shape
    for t, v in zip(ts, arr):
        assert v == pytest.approx(laplace_transform(d, float(t)), abs=1e-15)


def test_discrete_rates_reproduce_closed_form():
    # rank-indexed rates at N = 1e5 should track the continuum transform
    n = 10 ** 5
    d = SalesRateDistribution.pareto(LOW_A, LOW_B)
    emp = SalesRateDistribution.empirical(discrete_rates(n, LOW_A, LOW_B))
    ts = np.linspace(0.0, 2000.0, 41)
    dev = np.abs(laplace_transform(emp, ts) - laplace_transform(d, ts))
    assert dev.max() <= 5e-4


def test_cutoff_gamma_zero_degenerates_bitwise():
    d = SalesRateDistribution.pareto(1.0, 0.7)
    dc = SalesRateDistribution.pareto_cutoff(1.0, 0.7, 0.0)
    for t in [0.0, 0.1, 1.0, 12.0]:
        assert laplace_transform(dc, t) == laplace_transform(d, t)


def test_cutoff_approaches_pareto():
    d = SalesRateDistribution.pareto(LOW_A, LOW_B)
    dc = SalesRateDistribution.pareto_cutoff(LOW_A, LOW_B, 1e-9)
    ts = np.linspace(0.0, 1e4, 201)
    dev = np.abs(laplace_transform(dc, ts) - laplace_transform(d, ts))
    assert dev.max() <= 1e-6


def test_cutoff_matches_quadrature():
    g = 1e-3
    dc = SalesRateDistribution.pareto_cutoff(LOW_A, LOW_B, g)
    for t in [1.0, 50.0, 500.0]:
        ref, err = laplace_quad(LOW_A, LOW_B, t, gamma=g)
        assert abs(laplace_transform(dc, t) - ref) <= max(1e-9 * ref, 3.0 * err)


def test_cutoff_finite_catalog_probe_form():
    # with explicit N the transform follows the untruncated-head variant,
    # whose t -> 0 value carries the extra head mass gamma - gamma/N
    g = 1e-3
    dc = SalesRateDistribution.pareto_cutoff(1.0, 0.6, g)
    at0 = laplace_transform(dc, 0.0, n_items=10 ** 5)
    assert at0 == pytest.approx(1.0 + g - g / 10 ** 5, rel=1e-12)
    # both forms agree once t > 0 up to the vanishing head correction
    for t in [0.5, 5.0]:
        assert laplace_transform(dc, t, n_items=10 ** 5) == pytest.approx(
            laplace_transform(dc, t), abs=2.0 * g)


def test_band_helpers_match_quadrature():
    from scipy.integrate import quad
    d = SalesRateDistribution.pareto(1.0, 1.5)
    ref_mass, _ = quad(lambda w: 1.5 * w ** -2.5, 1.0, 2.0)
    assert band_mass(d, 1.0, 2.0) == pytest.approx(ref_mass, rel=1e-12)
    ref_bl, _ = quad(lambda w: math.exp(-0.7 * w) * 1.5 * w ** -2.5, 1.0, 2.0)
    assert band_laplace(d, 1.0, 2.0, 0.7) == pytest.approx(ref_bl, rel=1e-10)
    # full band reduces to the plain transform
    assert band_laplace(d, 1e-12, math.inf, 0.7) == pytest.approx(
        laplace_transform(d, 0.7), rel=1e-10)


def test_rates_csv_round_trip(tmp_path):
    path = tmp_path / "rates.csv"
    rates = [0.25, 1.0, 3.5]
    save_rates_csv(path, rates)
    d = load_rates_csv(path)
    np.testing.assert_allclose(d.rates, rates)


def test_rates_csv_errors(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("rate\n1.0\n")
    with pytest.raises(ValueError, match="header"):
        load_rates_csv(bad_header)
    bad_value = tmp_path / "v.csv"
    bad_value.write_text("w\n1.0\noops\n")
    with pytest.raises(ValueError, match=":3"):
        load_rates_csv(bad_value)
    nonpositive = tmp_path / "n.csv"
    nonpositive.write_text("w\n1.0\n0.0\n")
    with pytest.raises(ValueError, match="positive"):
        load_rates_csv(nonpositive)
