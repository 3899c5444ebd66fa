import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nv_polarimetry.dynamics import Branch, exp_weighted_averages, evolve_symmetric
from nv_polarimetry.inference import fit_cosine
from nv_polarimetry.model import DomainError, LevelModel, RateSet, ThermalBath, rates_from_detailed_balance
from nv_polarimetry.montecarlo import (
    BLOCK_SIZE,
    McConfig,
    TrajectoryBatch,
    detected_sweep,
    empirical_polarizer_sweep,
    occupation_curve,
    simulate,
    write_occupation_csv,
    write_samples_csv,
)

from oracles import emission_weighted_px

# emission-weighted E_x fraction for gamma^-1 = 20 ns, tau = 12 ns
FRACTION_X = 0.727273
# p_x(12 ns) for the same rates
PX_AT_TAU = 0.650597
# long-time E_x population at 4 K with a 5 GHz splitting
PX_STEADY_DB = 0.485006

TAU = 12.0
SYMMETRIC = RateSet.symmetric(0.05)
SWEEP = [float(a) for a in range(0, 180, 5)]


def _within(value, expect, sigma, k=4.0):
    return abs(value - expect) <= k * sigma


def test_frozen_fraction_matches_quadrature():
    assert emission_weighted_px(0.05, TAU) == pytest.approx(FRACTION_X, abs=5e-7)


def test_same_seed_same_output():
    cfg = McConfig(10_000, 11, SYMMETRIC, TAU)
    a, b = simulate(cfg), simulate(cfg)
    assert np.array_equal(a.emission_time, b.emission_time)
    assert np.array_equal(a.in_x, b.in_x)
    assert np.array_equal(a.n_flips, b.n_flips)
    c = simulate(McConfig(10_000, 12, SYMMETRIC, TAU))
    assert not np.array_equal(a.emission_time, c.emission_time)


def test_workers_do_not_change_output():
    cfg = McConfig(5 * BLOCK_SIZE + 17, 3, SYMMETRIC, TAU)
    serial = simulate(cfg)
    parallel = simulate(cfg, workers=4)
    assert len(serial) == cfg.n_trajectories
    assert np.array_equal(serial.emission_time, parallel.emission_time)
    assert np.array_equal(serial.in_x, parallel.in_x)


def test_prefix_is_stable_when_n_grows():
    small = simulate(McConfig(BLOCK_SIZE, 5, SYMMETRIC, TAU))
    large = simulate(McConfig(3 * BLOCK_SIZE, 5, SYMMETRIC, TAU))
    assert np.array_equal(small.in_x, large.in_x[:BLOCK_SIZE])


def test_zero_rates_never_flip():
    batch = simulate(McConfig(2000, 0, RateSet.symmetric(0.0), TAU, Branch.Y))
    assert not batch.in_x.any()
    assert batch.n_flips.max() == 0


def test_config_validation():
    with pytest.raises(DomainError):
        McConfig(0, 0, SYMMETRIC, TAU)
    with pytest.raises(DomainError):
        McConfig(10, 0, SYMMETRIC, 0.0)


def test_emission_fraction_from_x():
    n = 100_000
    batch = simulate(McConfig(n, 2024, SYMMETRIC, TAU))
    sigma = math.sqrt(FRACTION_X * (1 - FRACTION_X) / n)
    assert abs(batch.fraction_x - FRACTION_X) < 3 * sigma
    assert exp_weighted_averages(0.05, TAU, Branch.X).mean_p_x == pytest.approx(FRACTION_X, abs=5e-7)


def test_emission_fraction_pumping_y_is_mirrored():
    n = 50_000
    batch = simulate(McConfig(n, 9, SYMMETRIC, TAU, Branch.Y))
    sigma = math.sqrt(FRACTION_X * (1 - FRACTION_X) / n)
    assert abs((1 - batch.fraction_x) - FRACTION_X) < 4 * sigma


def test_mean_flip_count():
    # symmetric flips form a Poisson process of rate gamma, sampled at t ~ Exp(tau)
    n = 50_000
    batch = simulate(McConfig(n, 4, SYMMETRIC, TAU))
    mean = 0.05 * TAU
    var = mean + mean ** 2  # geometric count
    assert _within(batch.n_flips.mean(), mean, math.sqrt(var / n))
    assert batch.emission_time.mean() == pytest.approx(TAU, rel=4 / math.sqrt(n))


def test_occupation_at_tau():
    n = 100_000
    (pt,) = occupation_curve(McConfig(n, 1, SYMMETRIC, TAU), [TAU])
    assert _within(pt.p_x_hat, PX_AT_TAU, pt.sigma)
    lo, hi = pt.band
    assert hi - lo == pytest.approx(6 * pt.sigma)


def test_occupation_three_quarter_point():
    t = math.log(2) / (2 * 0.05)
    (pt,) = occupation_curve(McConfig(50_000, 2, SYMMETRIC, TAU), [t])
    assert _within(pt.p_x_hat, 0.75, pt.sigma)


def test_occupation_curve_tracks_closed_form():
    grid = np.linspace(0.0, 60.0, 13)
    pts = occupation_curve(McConfig(40_000, 8, SYMMETRIC, TAU), grid)
    assert pts[0].p_x_hat == 1.0
    for p in pts:
        expect = evolve_symmetric(0.05, Branch.X, p.t).p_x
        assert abs(p.p_x_hat - expect) <= 4 * max(p.sigma, 1e-3)


def test_occupation_relaxes_to_detailed_balance():
    rates = rates_from_detailed_balance(0.05, LevelModel().delta, ThermalBath(4.0))
    (pt,) = occupation_curve(McConfig(60_000, 6, rates, TAU), [300.0])
    assert _within(pt.p_x_hat, PX_STEADY_DB, pt.sigma)


def test_occupation_rejects_negative_time():
    with pytest.raises(DomainError):
        occupation_curve(McConfig(10, 0, SYMMETRIC, TAU), [-1.0])


def test_empirical_sweep_examples():
    batch = TrajectoryBatch(np.ones(4), np.array([True, True, True, False]), np.zeros(4, int))
    rows = empirical_polarizer_sweep(batch, 0.0, [0.0, 90.0])
    # at 0 deg every X photon passes and every Y photon is blocked
    assert rows == [(0.0, 0.75), (90.0, 0.25)]


def test_empirical_sweep_contrast_matches_fraction():
    n = 100_000
    batch = simulate(McConfig(n, 21, SYMMETRIC, TAU))
    rows = empirical_polarizer_sweep(batch, 30.0, SWEEP, seed=1)
    fit = fit_cosine(rows)
    expect = 2 * batch.fraction_x - 1
    assert abs(fit.contrast - expect) < 4 * fit.contrast_sigma + 1e-12
    assert (fit.phase - 30.0 + 90) % 180 - 90 == pytest.approx(0.0, abs=1.0)


def test_empirical_sweep_needs_photons():
    empty = TrajectoryBatch(np.zeros(0), np.zeros(0, bool), np.zeros(0, int))
    with pytest.raises(DomainError):
        empirical_polarizer_sweep(empty, 0.0, SWEEP)


def test_detected_sweep_reproducible_and_consistent():
    a = detected_sweep(SYMMETRIC, TAU, SWEEP, 100_000, seed=5)
    b = detected_sweep(SYMMETRIC, TAU, SWEEP, 100_000, seed=5)
    assert a == b
    fit = fit_cosine(a)
    # photons follow the linear emission-weighted mixture
    expect = 2 * FRACTION_X - 1
    assert abs(fit.contrast - expect) < 4 * fit.contrast_sigma
    # the counts behind the polarizer add up to about half the photons
    total = sum(y for _, y in a)
    assert total == pytest.approx(50_000, rel=0.02)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_fraction_in_unit_interval(seed):
    batch = simulate(McConfig(500, seed, SYMMETRIC, TAU))
    assert 0.0 <= batch.fraction_x <= 1.0
    assert np.all(batch.emission_time >= 0)
    # the branch at emission is the parity of the flip count
    assert np.array_equal(batch.in_x, batch.n_flips % 2 == 0)


def test_iteration_yields_samples():
    batch = simulate(McConfig(3, 0, SYMMETRIC, TAU))
    samples = list(batch)
    assert len(samples) == 3
    assert samples[0].branch_at_emission in (Branch.X, Branch.Y)


def test_csv_writers():
    batch = TrajectoryBatch(np.array([1.5, 2.0]), np.array([True, False]), np.array([0, 1]))
    buf = io.StringIO()
    write_samples_csv(batch, buf)
    assert buf.getvalue() == "emission_ns,branch,n_flips\n1.5,X,0\n2,Y,1\n"
    pts = occupation_curve(McConfig(100, 0, SYMMETRIC, TAU), [0.0])
    buf = io.StringIO()
    write_occupation_csv(pts, buf)
    assert buf.getvalue() == "t_ns,p_x_hat,sigma\n0,1,0\n"
