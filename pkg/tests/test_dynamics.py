import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nv_polarimetry.dynamics import (
    Averaging,
    Branch,
    PopulationState,
    Weighting,
    branch_averages,
    contrast_from_alpha,
    contrast_from_gamma,
    evolve_general,
    evolve_symmetric,
    exp_weighted_averages,
    figure4_table,
    log_grid,
    write_figure4_csv,
)
from nv_polarimetry.model import DomainError, RateSet, ThermalBath, rates_from_detailed_balance

from oracles import emission_weighted_px, expm_px, rk4_px

# frozen from the RK4 / expm / quadrature oracles in oracles.py
PX_AT_TAU = 0.650597  # gamma = 0.05/ns, t = 12 ns
PY_AT_TAU = 0.349403
PX_STEADY_DB = 0.485006  # Delta = 5 GHz, T = 4 K
ALPHA_20NS = 0.537050
C_20NS = 0.5522862  # (1 - tanh(0.6)^2) / (1 + tanh(0.6)^2)
ALPHA_3NS = 0.999329
C_3NS = 6.709e-4
PX_EXP_WEIGHTED = 0.727273  # gamma tau = 0.6


def test_oracles_agree_on_frozen_values():
    assert rk4_px(0.05, 0.05, 1.0, 12.0)[0] == pytest.approx(PX_AT_TAU, abs=1e-6)
    cxy = 0.05 * math.exp(-5.0 / ThermalBath(4.0).thermal_frequency)
    assert expm_px(cxy, 0.05, 1.0, 5000.0)[0] == pytest.approx(PX_STEADY_DB, abs=1e-6)
    assert emission_weighted_px(0.05, 12.0) == pytest.approx(PX_EXP_WEIGHTED, abs=1e-6)


def test_evolve_general_examples():
    frozen = evolve_general(RateSet(0, 0, 0), PopulationState(1, 0), 100.0)
    assert frozen.p_x == 1.0
    s = evolve_general(RateSet.symmetric(0.05), PopulationState(1, 0), 12.0)
    assert s.p_x == pytest.approx(PX_AT_TAU, abs=1e-6)
    assert s.t == 12.0
    db = rates_from_detailed_balance(0.05, 5.0, ThermalBath(4.0))
    t_long = 50.0 / max(db.c_xy, db.c_yx)
    assert evolve_general(db, PopulationState(1, 0), t_long).p_x == pytest.approx(PX_STEADY_DB, abs=1e-6)
    with pytest.raises(DomainError):
        evolve_general(db, PopulationState(1, 0), -1.0)


@given(
    c_xy=st.floats(0.0, 2.0), c_yx=st.floats(0.0, 2.0),
    px0=st.floats(0.0, 1.0), t=st.floats(0.0, 20.0),
)
def test_evolve_general_matches_matrix_exponential(c_xy, c_yx, px0, t):
    s = evolve_general(RateSet(c_xy, c_yx, 0.0), PopulationState(px0, 1.0 - px0), t)
    ref = expm_px(c_xy, c_yx, px0, t)
    assert s.p_x == pytest.approx(ref[0], abs=1e-10)
    assert abs(s.p_x + s.p_y - 1.0) <= 1e-12


def test_evolve_general_matches_rk4_asymmetric():
    db = rates_from_detailed_balance(0.2, 5.0, ThermalBath(4.0))
    for t in (0.5, 3.0, 12.0):
        ref = rk4_px(db.c_xy, db.c_yx, 0.0, t)
        assert evolve_general(db, PopulationState(0, 1), t).p_x == pytest.approx(ref[0], abs=1e-10)


@given(c_xy=st.floats(1e-3, 2.0), c_yx=st.floats(1e-3, 2.0), px0=st.floats(0.0, 1.0))
def test_detailed_balance_steady_state(c_xy, c_yx, px0):
    t_long = 50.0 / max(c_xy, c_yx)
    # total relaxation rate is c_xy + c_yx >= max, so e^-50 or smaller remains
    s = evolve_general(RateSet(c_xy, c_yx, 0.0), PopulationState(px0, 1 - px0), t_long)
    assert s.p_x == pytest.approx(c_xy / (c_xy + c_yx), abs=1e-9)


def test_evolve_symmetric_examples():
    s = evolve_symmetric(0.05, Branch.X, 12.0)
    assert (s.p_x, s.p_y) == pytest.approx((PX_AT_TAU, PY_AT_TAU), abs=1e-6)
    assert (evolve_symmetric(0.05, Branch.X, 0.0).p_x, evolve_symmetric(0.05, Branch.X, 0.0).p_y) == (1.0, 0.0)
    late = evolve_symmetric(0.05, Branch.X, 1e4)
    assert (late.p_x, late.p_y) == pytest.approx((0.5, 0.5), abs=1e-15)


@given(gamma=st.floats(0.0, 5.0), t=st.floats(0.0, 100.0))
def test_symmetric_equals_general(gamma, t):
    a = evolve_symmetric(gamma, Branch.X, t)
    b = evolve_general(RateSet.symmetric(gamma), PopulationState(1, 0), t)
    assert a.p_x == pytest.approx(b.p_x, abs=1e-12)
    assert abs(a.p_x + a.p_y - 1) <= 1e-12


@given(gamma=st.floats(0.0, 5.0), t=st.floats(0.0, 100.0))
def test_pump_symmetry(gamma, t):
    x = evolve_symmetric(gamma, Branch.X, t)
    y = evolve_symmetric(gamma, Branch.Y, t)
    assert (y.p_y, y.p_x) == (x.p_x, x.p_y)
    ax = branch_averages(gamma, 12.0, Branch.X)
    ay = branch_averages(gamma, 12.0, Branch.Y)
    assert (ay.mean_p_y, ay.mean_p_x, ay.alpha) == (ax.mean_p_x, ax.mean_p_y, ax.alpha)


def test_branch_averages_examples():
    a = branch_averages(1 / 20, 12.0, Branch.X)
    assert a.alpha == pytest.approx(ALPHA_20NS, abs=1e-6)
    assert a.alpha == pytest.approx(a.mean_p_y / a.mean_p_x, rel=1e-12)
    assert branch_averages(0.0, 12.0, Branch.X).alpha == 0.0
    assert branch_averages(1 / 3, 12.0, Branch.X).alpha == pytest.approx(ALPHA_3NS, abs=1e-6)
    low = branch_averages(1 / 20, 12.0, Branch.Y)
    assert low.alpha == pytest.approx(low.mean_p_x / low.mean_p_y, rel=1e-12)


def test_contrast_from_alpha_examples():
    assert contrast_from_alpha(math.tanh(0.6)) == pytest.approx(C_20NS, abs=1e-7)
    assert contrast_from_alpha(ALPHA_20NS) == pytest.approx(C_20NS, abs=1e-6)
    assert contrast_from_alpha(0.0) == 1.0
    assert contrast_from_alpha(1.0) == 0.0
    for bad in (-0.1, 1.1):
        with pytest.raises(DomainError):
            contrast_from_alpha(bad)


@given(a=st.floats(0.0, 1.0), b=st.floats(0.0, 1.0))
def test_contrast_strictly_decreasing(a, b):
    lo, hi = sorted((a, b))
    if hi - lo > 1e-9:
        assert contrast_from_alpha(hi) < contrast_from_alpha(lo)


def test_figure4_table_examples():
    rows = figure4_table(12.0, [20.0, 3.0, 1e6])
    assert (rows[0].gamma_inv, rows[0].contrast, rows[0].alpha) == pytest.approx((20.0, C_20NS, ALPHA_20NS), abs=1e-6)
    assert rows[1].contrast == pytest.approx(C_3NS, abs=1e-6)
    assert rows[2].contrast == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(DomainError):
        figure4_table(12.0, [0.0])


def test_figure4_monotonic_on_default_grid():
    rows = figure4_table(12.0, log_grid())
    c = np.array([r.contrast for r in rows])
    a = np.array([r.alpha for r in rows])
    assert len(rows) == 200
    assert np.all(np.diff(c) > 0)
    assert np.all(np.diff(a) < 0)


def test_figure4_csv(tmp_path):
    import io

    buf = io.StringIO()
    write_figure4_csv(figure4_table(12.0, [20.0]), buf)
    assert buf.getvalue() == "gamma_inv_ns,contrast,alpha\n20,0.552286,0.53705\n"


def test_exp_weighted_examples():
    a = exp_weighted_averages(0.05, 12.0, Branch.X)
    assert a.mean_p_x == pytest.approx(PX_EXP_WEIGHTED, abs=1e-6)
    assert exp_weighted_averages(0.0, 12.0, Branch.X).mean_p_x == 1.0
    assert exp_weighted_averages(1e9, 12.0, Branch.X).mean_p_x == pytest.approx(0.5, abs=1e-9)
    # documented gap between the two averaging rules at gamma tau = 0.6
    assert a.mean_p_x - branch_averages(0.05, 12.0, Branch.X).mean_p_x == pytest.approx(0.0767, abs=1e-4)


@given(gamma=st.floats(1e-4, 3.0), tau=st.floats(1.0, 30.0))
def test_exp_weighted_matches_quadrature(gamma, tau):
    assert exp_weighted_averages(gamma, tau, Branch.X).mean_p_x == pytest.approx(
        emission_weighted_px(gamma, tau), abs=1e-9)


def test_contrast_from_gamma_models():
    assert contrast_from_gamma(0.05, 12.0) == pytest.approx(C_20NS, abs=1e-6)
    assert contrast_from_gamma(0.05, 12.0, Averaging.EXPONENTIAL, Weighting.LINEAR) == pytest.approx(1 / 2.2, rel=1e-12)
    # point average with linear weights: C = (1 - alpha)/(1 + alpha) = exp(-2 gamma tau)
    assert contrast_from_gamma(0.05, 12.0, "point", "linear") == pytest.approx(math.exp(-1.2), rel=1e-12)


def test_limits():
    assert contrast_from_gamma(0.0, 12.0) == 1.0
    assert contrast_from_gamma(1e3 / 12.0, 12.0) < 1e-12


def test_population_state_validation():
    with pytest.raises(DomainError):
        PopulationState(0.7, 0.7)
    with pytest.raises(DomainError):
        PopulationState(1.2, -0.2)
