import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from cspolytope import randsrc
from cspolytope.randsrc import RngStream

N = 100_000


@given(seed=st.integers(0, 2**63 - 1), sid=st.integers(0, 2**40))
@settings(max_examples=25, deadline=None)
def test_same_parameters_same_sequence(seed, sid):
    a = randsrc.uniform01(RngStream(seed, sid), 50)
    b = randsrc.uniform01(RngStream(seed, sid), 50)
    assert np.array_equal(a, b)


def test_streams_differ_and_look_independent():
    a = randsrc.uniform01(RngStream(1, 0), 10_000)
    b = randsrc.uniform01(RngStream(1, 1), 10_000)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(10_000)


def test_uniform_range_and_mean():
    u = randsrc.uniform01(RngStream(2), N)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


def test_scalar_draw_is_float():
    s = RngStream(3)
    assert isinstance(randsrc.uniform01(s), float)
    assert isinstance(randsrc.sample_gaussian(s), float)
    assert isinstance(randsrc.sample_symmetric_weibull(s, 1.5), float)


def test_gaussian_moments():
    g = randsrc.sample_gaussian(RngStream(4), N)
    assert abs(g.var() - 1) < 0.02
    assert abs(g.mean()) < 0.015


def test_weibull_survival_and_variance():
    s = RngStream(5)
    y = randsrc.sample_symmetric_weibull(s, 1.0, N)
    assert abs(np.mean(np.abs(y) >= 2) - math.exp(-2)) < 0.005
    assert abs(y.mean()) < 0.02
    y2 = randsrc.sample_symmetric_weibull(s, 2.0, N)
    assert abs(y2.var() - 1) < 0.02


@pytest.mark.parametrize("r, expected", [(1.0, 2.0), (2.0, 1.0)])
def test_weibull_variance_closed_form(r, expected):
    assert randsrc.weibull_variance(r) == pytest.approx(expected, rel=1e-14)


def test_weibull_variance_four_thirds_against_monte_carlo():
    y = randsrc.sample_symmetric_weibull(RngStream(6), 4 / 3, 400_000)
    assert np.mean(y * y) == pytest.approx(randsrc.weibull_variance(4 / 3), rel=0.01)


def test_rademacher_exponential():
    s = RngStream(7)
    r = randsrc.sample_rademacher(s, N)
    assert set(np.unique(r)) == {-1.0, 1.0}
    assert abs(r.mean()) < 0.015
    assert abs(randsrc.sample_exponential(s, 1.0, N).mean() - 1) < 0.02
    assert abs(randsrc.sample_symmetric_exponential(s, N).var() - 1) < 0.02
    with pytest.raises(ValueError):
        randsrc.sample_exponential(s, 0.0)


@pytest.mark.parametrize("name, draw, cdf", [
    ("gaussian", lambda s: randsrc.sample_gaussian(s, 10_000), stats.norm.cdf),
    ("weibull1", lambda s: np.abs(randsrc.sample_symmetric_weibull(s, 1.0, 10_000)), stats.expon.cdf),
    ("weibull2", lambda s: np.abs(randsrc.sample_symmetric_weibull(s, 2.0, 10_000)), stats.weibull_min(2).cdf),
    ("exponential", lambda s: randsrc.sample_exponential(s, 3.0, 10_000), stats.expon(scale=1 / 3).cdf),
    ("uniform", lambda s: randsrc.uniform01(s, 10_000), stats.uniform.cdf),
])
def test_kolmogorov_smirnov(name, draw, cdf):
    res = stats.kstest(draw(RngStream(11, 0)), cdf)
    assert res.pvalue > 1e-3, name


def test_metadata_names_the_generator():
    md = RngStream(9, 4).metadata()
    assert md == {"seed": 9, "stream_id": 4, "algorithm_id": randsrc.ALGORITHM_ID}
