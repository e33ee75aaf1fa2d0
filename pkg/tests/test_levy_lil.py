import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from escapelab.escape import LogPower, PowerLog
from escapelab.levy_lil import (
    BrownianConfig,
    HittingSample,
    brownian_hitting,
    brownian_last_exit,
    duality_check,
    hitting_probability_bound_check,
    hitting_statistic,
    ks_censored,
    laplace_check,
    last_exit_residual_slope,
    level_hitting_cdf,
    lil_hitting_experiment,
    lil_sup_experiment,
    stable_small_ball,
    type_I_integral_test,
)
from escapelab.distributions import PositiveStable, sample


# --------------------------------------------------------- stable laws

def test_small_ball_probabilities_nondecreasing():
    for alpha in (0.3, 0.5, 0.7):
        sb = stable_small_ball(alpha, seed=1)
        assert np.all(np.diff(sb.p_hat) >= 0)
        assert sb.slope_ok


def test_half_stable_oracle_on_fixed_grid():
    r = 1 / (4 * special.erfcinv(np.geomspace(1e-5, 0.3, 12)) ** 2)
    sb = stable_small_ball(0.5, r_grid=r, seed=4)
    assert np.max(np.abs(sb.oracle_z())) <= 3


def test_zero_hit_radii_are_flagged():
    sb = stable_small_ball(0.5, r_grid=[1e-3, 0.01, 0.1, 0.2, 0.5, 1.0], seed=0)
    assert sb.excluded[0] and not sb.excluded[-1]


@pytest.mark.parametrize("alpha", [0.3, 0.5])
def test_subordinator_values_pass_laplace_check(alpha):
    x = sample(PositiveStable(alpha), 10**6, 0)
    assert np.all(np.abs(laplace_check(x, alpha)) <= 3)


def test_small_ball_domain():
    with pytest.raises(ValueError):
        stable_small_ball(0.9)
    with pytest.raises(ValueError):
        stable_small_ball(0.5, count=1000)


# --------------------------------------------------- Brownian hitting

@pytest.mark.parametrize("d", [1, 2, 3])
def test_mean_hitting_time(d):
    hs = brownian_hitting(BrownianConfig(d=d, N=10**4, seed=d), [1.0, 2.0])
    for k, r in enumerate(hs.radii):
        T = hs.T[:, k]
        assert abs(T.mean() - r * r / d) <= 3 * T.std(ddof=1) / math.sqrt(T.size)


def test_dt_refinement_is_within_band():
    stats = []
    for dt in (1e-2, 5e-3):
        hs = brownian_hitting(BrownianConfig(d=1, N=2 * 10**4, dt=dt, seed=2), [1.0], mode="level")
        T = np.where(hs.flagged, np.inf, hs.T[:, 0])
        stats.append(ks_censored(T, level_hitting_cdf, 1000.0))
    assert all(s.passed for s in stats)
    assert abs(stats[0].statistic - stats[1].statistic) <= stats[0].critical


def test_hitting_sample_invariant():
    cfg = BrownianConfig()
    with pytest.raises(AssertionError):
        HittingSample(np.array([1.0, 2.0]), np.array([[1.0, 0.5]]), None, np.array([False]), cfg, "norm", True)
    with pytest.raises(AssertionError):
        HittingSample(np.array([1.0]), np.array([[1.0]]), np.array([[0.5]]), np.array([False]), cfg, "norm", True)


def test_last_exit_after_first_hit_and_small_ball_form():
    hs = brownian_last_exit(BrownianConfig(d=3, N=5 * 10**4, dt=0.04, refine=5, seed=5), [1.0])
    assert np.all(hs.L >= hs.T)
    assert abs(last_exit_residual_slope(hs.L[:, 0])) <= 0.05


def test_workers_do_not_change_results():
    cfg = BrownianConfig(d=2, N=5000, seed=9)
    one = brownian_hitting(cfg, [1.0, 2.0], workers=1)
    two = brownian_hitting(cfg, [1.0, 2.0], workers=2)
    assert np.array_equal(one.T, two.T)


def test_domain_checks():
    with pytest.raises(ValueError):
        brownian_hitting(BrownianConfig(d=2), [1.0], mode="level")
    with pytest.raises(ValueError):
        brownian_last_exit(BrownianConfig(d=2), [1.0])
    with pytest.raises(ValueError):
        brownian_hitting(BrownianConfig(), [2.0, 1.0])
    with pytest.raises(ValueError):
        BrownianConfig(dt=0)


# -------------------------------------------------------- LIL statistics

@pytest.fixture(scope="module")
def hitting_report():
    return lil_hitting_experiment(BrownianConfig(d=3, seed=21), K=12, replicates=30)


@pytest.fixture(scope="module")
def sup_report():
    return lil_sup_experiment(BrownianConfig(d=1, seed=21), K=12, replicates=30)


def test_hitting_monotone_in_N(hitting_report):
    assert np.all(hitting_report.raw[2] >= hitting_report.raw[1])
    assert np.all(hitting_report.median(2) > hitting_report.median(1))


def test_sup_monotone_in_N(sup_report):
    assert np.all(sup_report.running[2] <= sup_report.running[1])


def test_running_curves_are_monotone(hitting_report, sup_report):
    assert np.all(np.diff(hitting_report.running[1], axis=1) <= 0)
    assert np.all(np.diff(sup_report.running[1], axis=1) >= 0)


def test_duality_is_bit_exact(hitting_report):
    for N in (1, 2):
        assert duality_check(hitting_report, N).bit_equal


@given(c=st.floats(1.5, 50.0), r=st.floats(3.0, 1e4), t=st.floats(0.1, 1e6))
def test_radius_unit_change(c, r, t):
    lhs = hitting_statistic(np.array(c * c * t), np.array(c * r))
    rhs = hitting_statistic(np.array(t), np.array(r)) * math.log(math.log(c * r)) / math.log(math.log(r))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_lil_argument_checks():
    with pytest.raises(ValueError):
        lil_hitting_experiment(BrownianConfig(d=3), K=5)
    with pytest.raises(ValueError):
        lil_hitting_experiment(BrownianConfig(d=3), K=10, k0=2)


# ------------------------------------------------------ bound and type I

@pytest.mark.parametrize("process", ["brownian", "stable"])
def test_hitting_probability_bound(process):
    res = hitting_probability_bound_check(process, 1.0, 2.0, 1.0, 1.0, count=2 * 10**5)
    assert res.holds and res.margin > 0


@pytest.mark.parametrize("process", ["brownian", "stable"])
def test_bound_saturates_for_large_gamma(process):
    # the stable tail P(S > gamma) decays like gamma^-1/2, so gamma must be huge
    res = hitting_probability_bound_check(process, 1.0, 2.0, 1e10, 1.0, count=10**5)
    assert res.lhs == pytest.approx(1.0, abs=1e-3) and res.rhs >= 1.0


def test_degenerate_denominator_is_flagged():
    with pytest.raises(ValueError, match="degenerate"):
        hitting_probability_bound_check("stable", 1.0, 2.0, 1e-300, 1e-10, count=1000)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_type_I_table(d):
    rows = type_I_integral_test(2.0 if d > 2 else 1.5, d)
    assert [(r.series, r.liminf) for r in rows] == [("diverges", "0"), ("converges", "inf"), ("diverges", "0")]
    assert all(r.method == "symbolic" for r in rows)


def test_type_I_numeric_fallback():
    rows = type_I_integral_test(1.5, 3, [LogPower(-1.0, start=3), PowerLog(0.5)])
    assert rows[0].method == "numeric" and rows[0].liminf == "0"
    assert rows[1].liminf == "inf"
    with pytest.raises(ValueError):
        type_I_integral_test(2.0, 2)
