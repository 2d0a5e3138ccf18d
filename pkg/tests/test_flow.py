"""Tests for the stable-field flow, sections, first returns, and the
integral-vs-Birkhoff link.

At beta = 0 the flow is a straight translation along the stable
eigendirection and everything (return times, displacements, line
integrals) has a closed form; those are the oracles. At beta = -2 the
checks are structural: group law, time reversal, commutation with the
map, monotonicity of the return lift, and the link inequality.
"""

import math

import numpy as np
import pytest

from torusflow._kernels import BN, LAM, LAMI2
from torusflow.dfa import DfaParams, TorusPoint
from torusflow.flow import (
    OBSERVABLES,
    FlowConfig,
    LogFit,
    Section,
    TransversalityLost,
    build_return_map,
    commutation_residual,
    compare_integral_to_birkhoff,
    ergodic_integral,
    first_return,
    integrate,
    log_growth_experiment,
    orbit_order_check,
    return_orbit,
    section_observable,
    transversality_margin,
)

GOLDEN = LAM - 1.0  # (sqrt(5) - 1) / 2


def cfg0():
    return FlowConfig(params=DfaParams(beta=0.0))


def cfgm2(step=1e-3):
    return FlowConfig(params=DfaParams(beta=-2.0), step=step)


def rotation_of_section(p: int, q: int) -> float:
    return Section(p, q).linear_rotation()


# ------------------------------------------------------------- integration

def test_unperturbed_flow_is_translation():
    z = integrate(cfg0(), TorusPoint(0.2, 0.7), 1.3)
    expected = TorusPoint(0.2 - 1.3 / BN, 0.7 + 1.3 * LAM / BN)
    assert z.distance(expected) < 1e-8


def test_integral_of_one_is_elapsed_time():
    for T in (0.0, 0.37, 3.7, 10.0):
        H = ergodic_integral(cfg0(), OBSERVABLES["one"], TorusPoint(0.1, 0.9), T)
        assert abs(H - T) < 1e-10 * max(T, 1.0)
    H = ergodic_integral(cfgm2(), OBSERVABLES["one"], TorusPoint(0.3, 0.4), 5.0)
    assert abs(H - 5.0) < 1e-9


def test_ergodic_integral_closed_form_unperturbed():
    x0, T = 0.25, 7.3
    vx = -1.0 / BN
    H = ergodic_integral(cfg0(), OBSERVABLES["sin_x"], TorusPoint(x0, 0.5), T)
    exact = (math.cos(2 * math.pi * x0)
             - math.cos(2 * math.pi * (x0 + vx * T))) / (2 * math.pi * vx)
    assert abs(H - exact) < 1e-9


def test_flow_group_law():
    cfg = cfgm2()
    x = TorusPoint(0.2, 0.7)
    once = integrate(cfg, integrate(cfg, x, 0.7), 0.7)
    twice = integrate(cfg, x, 1.4)
    assert once.distance(twice) < 1e-7


def test_flow_reversal():
    cfg = cfgm2()
    x = TorusPoint(0.81, 0.33)
    back = integrate(cfg, integrate(cfg, x, 1.1), -1.1)
    assert back.distance(x) < 1e-7


def test_integral_additivity_off_grid_times():
    cfg = cfgm2()
    f = OBSERVABLES["cos_sum"]
    x = TorusPoint(0.15, 0.62)
    S, T = 0.35687, 0.91234
    H_full = ergodic_integral(cfg, f, x, S + T)
    H_split = ergodic_integral(cfg, f, x, S) + ergodic_integral(
        cfg, f, integrate(cfg, x, S), T)
    # steps straddling the bump-support circle (a derivative corner of the
    # quartic field) dominate the regrid error; measured 1.2e-7 here
    assert abs(H_full - H_split) < 1e-6
    # the unperturbed field is smooth and the same split is exact
    H0_full = ergodic_integral(cfg0(), f, x, S + T)
    H0_split = ergodic_integral(cfg0(), f, x, S) + ergodic_integral(
        cfg0(), f, integrate(cfg0(), x, S), T)
    assert abs(H0_full - H0_split) < 1e-9


def test_negative_integration_time_rejected_for_integrals():
    with pytest.raises(ValueError):
        ergodic_integral(cfg0(), OBSERVABLES["one"], TorusPoint(0.1, 0.1), -1.0)


def test_commutation_with_the_map():
    # f(flow_t(x)) = flow_{t/L^2}(f(x)); exact for the raw stable field
    rng = np.random.default_rng(7)
    for cfg in (cfg0(), cfgm2()):
        worst = 0.0
        for _ in range(10):
            x = TorusPoint(*rng.random(2))
            t = float(rng.uniform(0.0, 2.0))
            worst = max(worst, commutation_residual(cfg, x, t))
        assert worst < 1e-5
    assert commutation_residual(cfgm2(), TorusPoint(0.4, 0.9), 0.0) < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(params=DfaParams(beta=0.0), step=0.0)
    with pytest.raises(ValueError):
        FlowConfig(params=DfaParams(beta=-2.5))  # outside the field window
    with pytest.raises(ValueError):
        FlowConfig(params=DfaParams(beta=0.0), integrator="euler")


# ------------------------------------------------------------- sections

def test_section_validation():
    with pytest.raises(ValueError):
        Section(2, 2)
    with pytest.raises(ValueError):
        Section(0, 1)
    with pytest.raises(ValueError):
        Section(1, 1, margin_min=1.5)
    s = Section(3, 2)
    assert abs(s.length - math.sqrt(13)) < 1e-15
    assert abs(float(s.w @ s.wperp)) < 1e-15


def test_section_parametrization_roundtrip():
    for p, q in ((1, 1), (1, 2), (2, 1), (2, 3), (3, 5)):
        sec = Section(p, q)
        for theta in np.linspace(0.0, 1.0, 97, endpoint=False):
            back = sec.theta_of(sec.point(float(theta)))
            assert abs((back - theta + 0.5) % 1.0 - 0.5) < 1e-10


def test_theta_of_rejects_off_section_points():
    sec = Section(1, 1)
    with pytest.raises(ValueError):
        sec.theta_of(TorusPoint(0.3, 0.8))


def test_transversality_margin_healthy():
    for cfg in (cfg0(), cfgm2()):
        for p, q in ((1, 1), (1, 2)):
            assert transversality_margin(cfg, Section(p, q), 64) > 0.5


# ------------------------------------------------------------- first returns

def test_first_return_unperturbed_diagonal_section():
    sec = Section(1, 1)
    tp, u = first_return(cfg0(), sec, 0.2, renormalized=True)
    assert abs(u - 1.0 / math.sqrt(2.0)) < 1e-9
    assert abs((tp - 0.2) % 1.0 - GOLDEN) < 1e-9
    # raw field: same displacement, time scaled by the normal speed
    tp, u = first_return(cfg0(), sec, 0.8, renormalized=False)
    assert abs((tp - 0.8) % 1.0 - GOLDEN) < 1e-9
    assert abs(u - BN / (1.0 + LAM)) < 1e-9


def test_first_return_rotation_matches_derived_formula():
    for p, q in ((1, 1), (1, 2), (2, 1)):
        sec = Section(p, q)
        alpha = rotation_of_section(p, q)
        for theta in (0.0, 0.37, 0.81):
            tp, u = first_return(cfg0(), sec, theta, renormalized=True)
            assert abs((tp - theta) % 1.0 - alpha) < 1e-9
            assert abs(u - 1.0 / sec.length) < 1e-9
    assert abs(rotation_of_section(1, 1) - GOLDEN) < 1e-15
    assert abs(rotation_of_section(1, 2) - LAMI2) < 1e-15


def test_return_time_constant_for_renormalized_field():
    cfg = cfgm2()
    sec = Section(1, 1)
    us = [first_return(cfg, sec, t, True)[1] for t in np.linspace(0, 1, 20, endpoint=False)]
    us = np.array(us)
    tau = 1.0 / sec.length
    assert abs(us.mean() - tau) < 1e-8
    assert us.std() / us.mean() < 1e-5


def test_section_observable_closed_form():
    sec = Section(1, 1)
    tau = 1.0 / math.sqrt(2.0)
    wsx = -math.sqrt(2.0) / (1.0 + LAM)
    for theta in (0.1, 0.35, 0.62):
        g = section_observable(cfg0(), sec, OBSERVABLES["sin_x"], theta, True)
        exact = (math.cos(2 * math.pi * theta)
                 - math.cos(2 * math.pi * (theta + wsx * tau))) / (2 * math.pi * wsx)
        assert abs(g - exact) < 1e-8


def test_return_lift_monotone_and_degree_one():
    cfg = cfgm2()
    data = build_return_map(cfg, Section(1, 1), renormalized=True)
    grid = np.linspace(0.0, 1.0, 200, endpoint=False)
    lifts = np.array([data.R.lift(float(t)) for t in grid])
    assert np.all(np.diff(lifts) > 0.0)
    assert abs(data.R.lift(grid[0] + 1.0) - lifts[0] - 1.0) < 1e-9
    assert data.tau == pytest.approx(1.0 / math.sqrt(2.0))


def test_return_map_has_no_short_periodic_orbit():
    cfg = cfgm2()
    sec = Section(1, 1)
    for theta0 in np.linspace(0.0, 1.0, 100, endpoint=False):
        orbit = return_orbit(cfg, sec, float(theta0), 51, True)
        d = np.abs((orbit[1:] - orbit[0] + 0.5) % 1.0 - 0.5)
        assert float(d.min()) > 1e-6


def test_transversality_guard_raises():
    sec = Section(1, 1, margin_min=0.995)
    with pytest.raises(TransversalityLost):
        first_return(cfg0(), sec, 0.3, renormalized=True)


# ------------------------------------------------------------- the link

def test_link_unperturbed():
    rep = compare_integral_to_birkhoff(
        cfg0(), Section(1, 1), OBSERVABLES["sin_x"], TorusPoint(0.33, 0.77), 20.0)
    assert rep.gap <= rep.bound + 1e-4
    assert rep.decomposition_residual <= rep.bound + 1e-4
    assert rep.n_window_ok
    assert rep.n >= 25  # about T / tau = 20 sqrt(2) crossings


def test_link_perturbed():
    rep = compare_integral_to_birkhoff(
        cfgm2(), Section(1, 1), OBSERVABLES["cos_sum"], TorusPoint(0.61, 0.13), 30.0)
    assert rep.gap <= rep.bound + 1e-4
    assert rep.n_window_ok


def test_link_short_time_no_crossing():
    rep = compare_integral_to_birkhoff(
        cfgm2(), Section(1, 1), OBSERVABLES["sin_x"], TorusPoint(0.61, 0.13), 0.3)
    assert rep.n == 0
    assert rep.birkhoff == 0.0
    assert rep.gap == abs(rep.integral)
    assert rep.gap <= rep.bound + 1e-4


def test_link_start_on_section():
    sec = Section(1, 1)
    x = sec.point(0.4)
    rep = compare_integral_to_birkhoff(
        cfg0(), sec, OBSERVABLES["cos_x"], x, 10.0)
    assert rep.tau_back == 0.0
    assert abs((rep.theta0 - 0.4 + 0.5) % 1.0 - 0.5) < 1e-9
    assert rep.gap <= rep.bound + 1e-4


def test_link_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        compare_integral_to_birkhoff(
            cfg0(), Section(1, 1), OBSERVABLES["one"], TorusPoint(0.2, 0.5), 0.0)


# ------------------------------------------------------------- orbit order

def test_orbit_order_unperturbed_matches_rigid_rotation():
    rep = orbit_order_check(cfg0(), Section(1, 1), n_points=100, n_returns=800)
    assert rep.isomorphic
    assert rep.first_mismatch is None
    assert rep.decoder_consistent
    assert rep.rho_lo < GOLDEN < rep.rho_hi
    assert rep.rho_width < 1.0 / (4 * 100 * 100)
    assert abs(rep.naive_estimate - GOLDEN) < 2e-3


def test_orbit_order_negative_control():
    rep = orbit_order_check(cfg0(), Section(1, 1), n_points=100, n_returns=800,
                            alpha_shift=0.01)
    assert not rep.isomorphic
    assert rep.first_mismatch is not None


# ------------------------------------------------------------- log growth

def test_log_growth_unperturbed_matches_closed_form():
    cfg = cfg0()
    x0 = TorusPoint(0.25, 0.5)
    series, fit = log_growth_experiment(cfg, OBSERVABLES["sin_x"], x0,
                                        T_max=100.0, samples=12)
    vx = -1.0 / BN
    exact = (np.cos(2 * np.pi * 0.25)
             - np.cos(2 * np.pi * (0.25 + vx * series.T))) / (2 * np.pi * vx)
    assert float(np.max(np.abs(series.H - exact))) < 1e-6
    assert series.mean_used == 0.0
    assert not fit.mean_flagged
    assert fit.max_ratio < 1.0
    ratio = LogFit.window_ratio(series, 10.0, 100.0)
    assert 0.0 <= ratio <= fit.max_ratio + 1e-12


def test_log_growth_zero_observable():
    series, fit = log_growth_experiment(cfg0(), OBSERVABLES["zero"],
                                        TorusPoint(0.1, 0.1), 50.0, 8)
    assert float(np.max(np.abs(series.H))) == 0.0
    assert fit.max_ratio == 0.0


def test_log_growth_validation():
    with pytest.raises(ValueError):
        log_growth_experiment(cfg0(), OBSERVABLES["sin_x"], TorusPoint(0, 0),
                              0.5, 10)
    with pytest.raises(ValueError):
        LogFit.window_ratio(
            log_growth_experiment(cfg0(), OBSERVABLES["sin_x"],
                                  TorusPoint(0, 0), 10.0, 4)[0], 500.0, 900.0)
