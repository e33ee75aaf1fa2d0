import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from escapelab.distributions import BernoulliScaled, Exponential, Gaussian, Mixture, PointMass
from escapelab.escape import (
    ClassifierReport,
    KWFunction,
    LogPower,
    PowerLog,
    SmallBallCDF,
    Staircase,
    Tabulated,
    TypeAGaugeError,
    audit_type_a_gauge,
    construct_type_a_gauge,
    dominated_variation_test,
    escape_constant,
    gauge_from_config,
    k_w,
    liminf_estimate,
    proposition_1_1_check,
    sum_classifier,
)
from escapelab.sequences import SequenceParams, build_ensemble, w0_samples

LINEAR = SmallBallCDF.power(1.0)


# ------------------------------------------------------------- classifier

def test_harmonic_series_diverges():
    rep = sum_classifier(LINEAR, PowerLog(1.0))
    assert set(rep.verdicts) == {"diverges"}
    assert rep.C_low == 0.0 and rep.C_high == min(d for d, _ in rep.per_delta)
    assert rep.type_label == "B"


def test_log_squared_series_converges():
    rep = sum_classifier(LINEAR, PowerLog(1.0, 2.0))
    assert set(rep.verdicts) == {"converges"}
    assert math.isinf(rep.C_high)


def test_boundary_series_is_not_forced():
    rep = sum_classifier(LINEAR, PowerLog(1.0, 1.0))
    assert "converges" not in rep.verdicts


def test_stable_half_bracket_contains_quarter():
    g = LogPower(-1.0, start=3)
    rep = sum_classifier(SmallBallCDF.stable_half(), g, np.linspace(0.05, 1.0, 39))
    assert rep.C_low <= 0.25 <= rep.C_high
    assert rep.C_high - rep.C_low <= 0.05


@given(p=st.floats(0.2, 3.0), q=st.floats(-1.0, 3.0))
def test_classifier_monotone_in_delta(p, q):
    # __post_init__ raises on a non-monotone verdict sequence
    rep = sum_classifier(LINEAR, PowerLog(p, q, start=10), np.geomspace(1e-2, 1e2, 7))
    assert isinstance(rep, ClassifierReport)
    assert rep.C_low <= rep.C_high


def test_empirical_f_never_converges_below_resolution():
    x = w0_samples(BernoulliScaled(0.5, (1.0,)), 2.0, 10**4, seed=1)
    F = SmallBallCDF.empirical(x)
    rep = sum_classifier(F, PowerLog(1.0, 2.0))
    assert "converges" not in rep.verdicts


def test_short_horizon_rejected():
    with pytest.raises(ValueError):
        sum_classifier(LINEAR, PowerLog(1.0), horizon=100)


# --------------------------------------------------- dominated variation

@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 3.0])
def test_power_laws_have_dominated_variation(beta):
    rep = dominated_variation_test(SmallBallCDF.power(beta))
    assert rep.verdict == "yes"
    if beta == 2.0:
        assert np.allclose(rep.ratio, 4.0)


@pytest.mark.parametrize("F", [SmallBallCDF.exp_inverse(), SmallBallCDF.exp_inverse(0.5, -0.5)],
                         ids=["exp", "hitting-form"])
def test_exponential_small_balls_do_not(F):
    assert dominated_variation_test(F).verdict == "no"


# ------------------------------------------------------------- staircase

@pytest.mark.parametrize("a,steps", [(2.0, 10), (3.0, 6), (math.e, 6)])
def test_staircase_passes_audit(a, steps):
    # larger a spaces the levels faster, so fewer steps fit below the gap cap
    F = SmallBallCDF.exp_inverse()
    g = construct_type_a_gauge(F, a, steps=steps)
    assert audit_type_a_gauge(g, F, a).passed
    assert len(g.starts) == len(g.levels) + 1


def test_staircase_gap_cap_is_reported():
    with pytest.raises(TypeAGaugeError, match="gap"):
        construct_type_a_gauge(SmallBallCDF.exp_inverse(), 3.0, steps=10)


def test_staircase_fails_for_power_law():
    with pytest.raises(TypeAGaugeError, match="dominated variation"):
        construct_type_a_gauge(SmallBallCDF.power(1.0), 2.0)


def test_audit_catches_tampering():
    F = SmallBallCDF.exp_inverse()
    g = construct_type_a_gauge(F, 2.0)
    starts = list(g.starts)
    starts[-1] = starts[-2] + 1
    bad = Staircase(g.levels, tuple(starts))
    assert not audit_type_a_gauge(bad, F, 2.0).passed


# ------------------------------------------------------------------- K_W

LAM, A = 0.5, 2.0
BERN = BernoulliScaled(LAM, (1.0,))


def test_kw_at_one():
    assert k_w(1.0, BERN.laplace, LAM, A) == 1.0


def test_kw_dual_quadrature():
    r = 2.0**-10
    q = k_w(r, BERN.laplace, LAM, A, "quad")
    t = k_w(r, BERN.laplace, LAM, A, "trapezoid")
    assert abs(q - t) <= 1e-6 * q


@pytest.mark.parametrize("c", [2.0, 10.0])
def test_kw_regular_variation(c):
    kw = KWFunction(BERN.laplace, LAM, A)
    r = 2.0**-40
    assert kw(c * r) / kw(r) == pytest.approx(c**kw.index, rel=0.02)
    assert math.log(kw(r)) / math.log(1 / r) == pytest.approx(-kw.index, rel=0.02)


# -------------------------------------------------------------- liminf

def _bernoulli_paths(count=100, n_max=10**4, seed=3):
    return build_ensemble("Y", SequenceParams(2.0, 1, 0, n_max), BERN, count, seed=seed)


def test_liminf_divergent_branch_keeps_falling():
    paths = _bernoulli_paths()
    rep = liminf_estimate(paths, PowerLog(1.0))
    med = rep.median
    i128, i1024 = (int(np.searchsorted(rep.schedule, k)) for k in (128, 1024))
    assert np.all(np.diff(med) <= 0)
    # still falling over each of the last decades
    assert med[i1024] < 0.9 * med[i128] and med[-1] < 0.9 * med[i1024]
    # a summable gauge on the same paths has flattened out by then
    flat = liminf_estimate(paths, PowerLog(1.0, 2.0)).median
    assert flat[-1] == flat[i1024]


def test_liminf_convergent_branch_stabilizes():
    paths = _bernoulli_paths()
    rep = liminf_estimate(paths, PowerLog(3.0))
    ratio = rep.running  # running minima; recover the per-n ratio minimum location
    n = rep.n
    window = (n >= 100)
    vals = np.linalg.norm(paths.values[:, n[0] - paths.params.n_min:], axis=-1) / PowerLog(3.0).base(n)
    where = n[window][np.argmin(vals[:, window], axis=1)]
    assert np.mean(where < 1000) >= 0.9
    assert ratio.shape == vals.shape


def test_liminf_scale_equivariance():
    paths = _bernoulli_paths(count=20, n_max=1000)
    g = PowerLog(1.0)
    for c in (0.3, 2.0, 7.0):
        assert np.array_equal(liminf_estimate(paths, g.scaled(c)).running, liminf_estimate(paths, g).running / c)


def test_liminf_point_mass_constant():
    paths = build_ensemble("Y", SequenceParams(2.0, 1, 0, 1000), PointMass((1.0,)), 5, seed=0)
    rep = liminf_estimate(paths, PowerLog(0.0))
    assert np.allclose(rep.running, 2.0, atol=1e-8)


# ------------------------------------------------- escape constant, Prop 1.1

def test_escape_constants():
    assert escape_constant(PointMass((1.0,)), 2.0) == (2.0, 2.0, True)
    assert escape_constant(BERN, 2.0) == (0.0, 0.0, True)
    assert escape_constant(Exponential((1.0,)), 2.0).exact
    mix = Mixture((0.5, 0.5), (PointMass((1.0,)), PointMass((-1.0,))))
    d = escape_constant(mix, 3.0)
    assert not d.exact and d.low == 0.0 and d.high == pytest.approx(1.5)


def test_atom_at_zero_decides_type_a_gauge():
    rep = proposition_1_1_check(Exponential((1.0,)), 2.0)
    assert rep.type_a_exists and rep.classifier is None
    rep = proposition_1_1_check(BERN, 2.0)
    assert not rep.type_a_exists
    assert rep.kw_index == pytest.approx(1.0)
    assert set(rep.classifier.verdicts) == {"diverges"}
    rep = proposition_1_1_check(PointMass((1.0,)), 2.0)
    assert "D = 2" in rep.caveat
    with pytest.raises(ValueError):
        proposition_1_1_check(Gaussian.standard(1), 2.0)


# ---------------------------------------------------------------- gauges

@given(p=st.floats(0.0, 3.0), q=st.floats(0.0, 3.0))
def test_powerlog_decreasing(p, q):
    g = PowerLog(p, q)
    g.check_decreasing(upto=10**4)
    v = g(np.arange(g.n0, 2000))
    assert np.all(np.diff(v) <= 1e-15)


def test_gauge_config_round_trip():
    for g in (PowerLog(1.0, 2.0, scale=3.0), LogPower(-1.0, start=3), Tabulated((3.0, 2.0, 1.0))):
        again = gauge_from_config(g.to_config())
        assert np.allclose(again(np.arange(again.n0, again.n0 + 3)), g(np.arange(g.n0, g.n0 + 3)))
    with pytest.raises(ValueError):
        gauge_from_config({"kind": "powerlog", "p": 1, "typo": 2})
    with pytest.raises(ValueError):
        Tabulated((1.0, 2.0)).check_decreasing()
