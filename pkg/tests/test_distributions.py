import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from escapelab.distributions import (
    BernoulliScaled,
    Exponential,
    Gaussian,
    Mixture,
    PointMass,
    PositiveStable,
    Uniform,
    cf_exact,
    describe,
    is_full,
    laplace_exact,
    law_from_config,
    log_moment,
    sample,
)

LAWS = [
    PointMass((1.0,)),
    PointMass((1.0, -2.0)),
    BernoulliScaled(0.5, (1.0,)),
    BernoulliScaled(0.3, (0.5, 2.0)),
    Exponential((1.0,)),
    Exponential((1.0, 3.0)),
    Uniform((-1.0,), (2.0,)),
    Gaussian.standard(1),
    Gaussian((0.0, 1.0), ((2.0, 0.5), (0.5, 1.0))),
    PositiveStable(0.5),
    PositiveStable(0.3),
    Mixture((0.5, 0.5), (PointMass((1.0,)), PointMass((-1.0,)))),
]
POSITIVE_1D = [law for law in LAWS if law.on_positive_orthant and law.dim == 1]


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
@given(z=st.lists(st.floats(-20, 20), min_size=1, max_size=1))
def test_cf_bounded_and_hermitian(law, z):
    zz = np.array(z * law.dim, dtype=float)
    v = cf_exact(law, zz)
    assert abs(v) <= 1 + 1e-12
    assert np.allclose(cf_exact(law, -zz), np.conj(v), atol=1e-12)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_cf_at_zero(law):
    assert np.allclose(cf_exact(law, np.zeros(law.dim)), 1.0)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_empirical_cf_matches(law):
    count = 10**5
    x = sample(law, count, seed=3)
    rng = np.random.default_rng(0)
    zs = rng.uniform(-3, 3, size=(20, law.dim))
    emp = np.exp(1j * x @ zs.T).mean(axis=0)
    assert np.max(np.abs(emp - cf_exact(law, zs))) <= 5 / math.sqrt(count)


@pytest.mark.parametrize("law", POSITIVE_1D, ids=lambda l: l.kind)
def test_laplace_decreasing_to_atom(law):
    u = np.geomspace(1e-3, 1e3, 60)
    v = laplace_exact(law, u)
    assert laplace_exact(law, 0.0) == pytest.approx(1.0)
    assert np.all(np.diff(v) <= 1e-15)
    assert laplace_exact(law, 1e12) == pytest.approx(law.atom_at_zero, abs=1e-5)


def test_point_mass_samples():
    assert np.array_equal(sample(PointMass((1.0,)), 3, seed=99)[:, 0], [1.0, 1.0, 1.0])


def test_bernoulli_mean():
    x = sample(BernoulliScaled(0.5, (1.0,)), 10**5, seed=1)
    assert abs(x.mean() - 0.5) <= 0.005


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
def test_stable_laplace_oracle(alpha, u):
    x = sample(PositiveStable(alpha), 10**5, seed=5)[:, 0]
    e = np.exp(-u * x)
    assert abs(e.mean() - math.exp(-(u**alpha))) <= 3 * e.std(ddof=1) / math.sqrt(x.size)


def test_closed_forms():
    assert cf_exact(BernoulliScaled(0.3, (1.0,)), 2.0) == pytest.approx(0.3 + 0.7 * np.exp(2j))
    assert cf_exact(PointMass((2.0,)), 1.5) == pytest.approx(np.exp(3j))
    z = np.array([0.3, -1.2])
    assert cf_exact(Gaussian.standard(2), z) == pytest.approx(math.exp(-z @ z / 2))
    assert laplace_exact(PointMass((1.0,)), 1.0) == pytest.approx(math.exp(-1))
    u = np.array([0.1, 1.0, 5.0])
    assert np.allclose(laplace_exact(BernoulliScaled(0.3, (1.0,)), u), 0.3 + 0.7 * np.exp(-u))
    assert np.allclose(laplace_exact(PositiveStable(0.4), u), np.exp(-(u**0.4)))


def test_log_moments():
    assert log_moment(PointMass((0.0,))).value == pytest.approx(math.log(2))
    assert log_moment(PointMass((0.6, 0.8))).value == pytest.approx(math.log(3))
    mc = log_moment(Exponential((1.0,)), mode="mc", count=10**6, seed=2)
    exact, _ = integrate.quad(lambda x: math.log(2 + x) * math.exp(-x), 0, np.inf)
    assert abs(mc.value - exact) <= 3 * mc.stderr
    for law in LAWS:
        lm = log_moment(law)
        assert math.isfinite(lm.value)
        if lm.upper_bound:
            est = log_moment(law, mode="mc", count=10**5, seed=1)
            assert est.value <= lm.value + 3 * est.stderr


def test_invalid_parameters():
    with pytest.raises(ValueError):
        PositiveStable(1.0)
    with pytest.raises(ValueError):
        Gaussian((0.0, 0.0), ((1.0, 1.0), (1.0, 1.0)))
    with pytest.raises(ValueError):
        Gaussian((0.0, 0.0), ((1.0, 0.2), (0.1, 1.0)))
    with pytest.raises(ValueError):
        Mixture((0.6, 0.6), (PointMass((1.0,)), PointMass((2.0,))))
    with pytest.raises(ValueError):
        BernoulliScaled(1.5, (1.0,))
    with pytest.raises(ValueError):
        laplace_exact(Gaussian.standard(1), 1.0)


def test_fullness():
    assert is_full(Gaussian.standard(3))
    assert not is_full(Mixture((0.5, 0.5), (PointMass((0.0, 0.0)), PointMass((1.0, 1.0)))))
    assert is_full(Mixture((0.3, 0.3, 0.4), (PointMass((0.0, 0.0)), PointMass((1.0, 0.0)),
                                            PointMass((0.0, 1.0)))))
    with pytest.raises(ValueError):
        law_from_config({"kind": "bernoulli", "lam": 0.5, "v": [1.0, 1.0]})


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_config_round_trip(law):
    again = law_from_config(law.to_config()) if is_full(law) else None
    if again is not None:
        z = np.full(law.dim, 0.7)
        assert cf_exact(again, z) == pytest.approx(cf_exact(law, z))


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown keys"):
        law_from_config({"kind": "point_mass", "c": [1.0], "extra": 1})
    with pytest.raises(ValueError, match="unknown law kind"):
        law_from_config({"kind": "cauchy"})


def test_describe():
    desc = describe(BernoulliScaled(0.25, (1.0,)))
    assert desc.atom_at_zero == 0.25
    assert desc.laplace(np.inf) == pytest.approx(0.25)
    assert describe(Gaussian.standard(1)).laplace is None


def test_sampling_is_pure():
    law = Gaussian.standard(2)
    assert np.array_equal(sample(law, 10, 4), sample(law, 10, 4))
