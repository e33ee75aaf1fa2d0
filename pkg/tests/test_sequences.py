import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from escapelab.distributions import BernoulliScaled, Exponential, Gaussian, PointMass, Uniform
from escapelab.sequences import (
    PathSample,
    SequenceParams,
    build_ensemble,
    build_w_path,
    build_y_path,
    ergodic_average,
    lamperti,
    log_growth_slope,
    test_shift_selfsimilarity as shift_test,
)

laws = st.sampled_from([Gaussian.standard(1), BernoulliScaled(0.5, (1.0,)), Exponential((2.0,)),
                        Uniform((-1.0,), (1.0,)), Gaussian.standard(2)])


@given(law=laws, a=st.floats(1.1, 4.0), n_min=st.integers(-5, 5), length=st.integers(1, 20),
       seed=st.integers(0, 2**32))
def test_increment_identities(law, a, n_min, length, seed):
    p = SequenceParams(a, law.dim, n_min, n_min + length)
    w = build_w_path(p, law, seed=seed)
    y = build_y_path(p, law, seed=seed)
    for n in range(n_min + 1, n_min + length + 1):
        assert np.allclose(w.at(n) - w.at(n - 1), a**n * w.x(n), rtol=1e-12, atol=1e-12 * a**n)
        assert np.allclose(y.at(n) - y.at(n - 1) / a, y.x(n), rtol=1e-12, atol=1e-12)


@given(law=laws, a=st.floats(1.1, 4.0), seed=st.integers(0, 2**32))
def test_lamperti_round_trip(law, a, seed):
    p = SequenceParams(a, law.dim, -3, 12)
    w = build_w_path(p, law, seed=seed)
    y = build_y_path(p, law, seed=seed)
    back = lamperti(lamperti(w))
    assert np.allclose(back.values, w.values, rtol=1e-12, atol=0)
    assert np.allclose(lamperti(y).values, w.values, rtol=1e-12, atol=1e-300)


@given(law=laws, a=st.floats(1.2, 4.0), seed=st.integers(0, 2**32))
def test_w_vanishes_at_minus_infinity(law, a, seed):
    p = SequenceParams(a, law.dim, -6, 0)
    w = build_w_path(p, law, seed=seed)
    xmax = np.max(np.linalg.norm(w.increments, axis=1))
    assert np.linalg.norm(w.at(-6)) <= w.truncation_bound + a**-6 * a / (a - 1) * xmax + 1e-12


def test_point_mass_geometric_series():
    p = SequenceParams(2.0, 1, 0, 3)
    w = build_w_path(p, PointMass((1.0,)), truncation_depth=30)
    assert np.allclose(w.values[:, 0], 2.0 ** (np.arange(4) + 1) - 2.0**-30, rtol=0, atol=1e-12)
    y = build_y_path(p, PointMass((1.0,)))
    assert np.allclose(y.values[:, 0], 2.0, atol=1e-8)


def test_bernoulli_mean_of_w0():
    ens = build_ensemble("W", SequenceParams(2.0, 1, 0, 0), BernoulliScaled(0.5, (1.0,)), 10**4, seed=2)
    x = ens.at(0)[:, 0]
    assert abs(x.mean() - 1.0) <= 3 * x.std(ddof=1) / math.sqrt(x.size)


def test_gaussian_stationary_covariance():
    ens = build_ensemble("Y", SequenceParams(math.e, 2, 0, 0), Gaussian.standard(2), 10**4, seed=4)
    cov = np.cov(ens.at(0).T)
    target = 1 / (1 - math.exp(-2))
    assert np.allclose(np.diag(cov), target, rtol=0.05)
    assert abs(cov[0, 1]) <= 0.05 * target


def test_constant_w_gives_constant_y():
    p = SequenceParams(3.0, 1, 0, 5)
    vals = (3.0 ** p.window * 1.7)[:, None]
    w = PathSample("W", p, vals, np.empty((0, 1)), 0, 0.0)
    assert np.allclose(lamperti(w).values, 1.7)


def test_shift_selfsimilarity_passes_and_controls():
    p = SequenceParams(2.0, 1, 0, 3)
    ens = build_ensemble("W", p, Gaussian.standard(1), 2000, seed=8)
    assert shift_test(ens).passed
    wrong = build_ensemble("W", SequenceParams(2.0, 1, 0, 3), Gaussian.standard(1), 2000, seed=8)
    # a path family scaled as if a were 3: W'(n) = 3^n Y(n)
    y = lamperti(wrong)
    corrupted = type(wrong)("W", p, y.values * 3.0 ** p.window[None, :, None], wrong.truncation_depth,
                            wrong.truncation_bound)
    assert not shift_test(corrupted).passed
    pm = build_ensemble("W", p, PointMass((1.0,)), 1000, seed=1)
    rep = shift_test(pm)
    assert rep.passed and np.all(rep.statistics == 0)


def test_stationarity_transfer():
    # the Lamperti image of a shift selfsimilar W is stationary: Y(n+1) =d Y(n)
    p = SequenceParams(2.0, 1, 0, 4)
    ens = build_ensemble("W", p, Exponential((1.0,)), 2000, seed=9)
    y = lamperti(ens).values[:, :, 0]
    h = len(ens) // 2
    pv = [stats.ks_2samp(y[:h, i + 1], y[h:, i]).pvalue for i in range(4)]
    assert shift_test(ens).passed == (min(pv) > 0.01 / 4)


def test_ergodic_averages():
    a = math.e
    p = SequenceParams(a, 1, 0, 10**5)
    y = build_y_path(p, Gaussian.standard(1), seed=13)
    sd = math.sqrt(1 / (1 - a**-2))
    rng = np.random.default_rng(1)
    for x, delta in zip(rng.uniform(-2, 2, 20), rng.uniform(0.2, 1.5, 20)):
        exact = stats.norm.cdf((x + delta) / sd) - stats.norm.cdf((x - delta) / sd)
        assert abs(ergodic_average(y, [x], delta) - exact) <= 0.02
    assert ergodic_average(y, [1e6], 1.0) == 0.0
    pm = build_y_path(SequenceParams(2.0, 1, 0, 50), PointMass((1.0,)))
    assert ergodic_average(pm, [2.0], 1e-6) == 1.0


def test_log_growth():
    a = 2.0
    p = SequenceParams(a, 1, 0, 60)
    for s in range(10):
        w = build_w_path(p, Gaussian.standard(1), seed=s)
        assert abs(log_growth_slope(w) - math.log(a)) <= 0.05 * math.log(a)


def test_ensemble_worker_independence():
    p = SequenceParams(2.0, 1, 0, 10)
    one = build_ensemble("Y", p, Gaussian.standard(1), 9000, seed=5, workers=1)
    many = build_ensemble("Y", p, Gaussian.standard(1), 9000, seed=5, workers=3)
    assert np.array_equal(one.values, many.values)


def test_validation():
    with pytest.raises(ValueError):
        SequenceParams(1.0)
    with pytest.raises(ValueError):
        SequenceParams(2.0, 1, 5, 3)
    with pytest.raises(ValueError):
        build_w_path(SequenceParams(2.0, 1, 0, 2000), Gaussian.standard(1))
    with pytest.raises(ValueError):
        build_w_path(SequenceParams(2.0, 2, 0, 3), Gaussian.standard(1))
    flagged = build_w_path(SequenceParams(2.0, 1, 0, 3), Gaussian.standard(1), truncation_depth=2, tolerance=1e-6)
    assert flagged.flagged
