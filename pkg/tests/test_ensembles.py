import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cspolytope import randsrc
from cspolytope.ensembles import (
    H2_THRESHOLD,
    EnsembleSpec,
    SensingMatrix,
    check_h1,
    check_h2,
    estimate_psi_r_norm,
    generate_matrix,
    isotropic_scale_factor,
    register_custom,
    sample_lp_ball_point,
)
from cspolytope.randsrc import RngStream

ISOTROPIC = [EnsembleSpec.gaussian(), EnsembleSpec.rademacher(), EnsembleSpec.iid_entries(1.0),
             EnsembleSpec.iid_entries(1.5), EnsembleSpec.lp_ball(1.0), EnsembleSpec.lp_ball(3.0),
             EnsembleSpec.sphere()]


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec.iid_entries(2.5)
    with pytest.raises(ValueError):
        EnsembleSpec.iid_entries(0.5)
    with pytest.raises(ValueError):
        EnsembleSpec.lp_ball(0.5)
    with pytest.raises(ValueError):
        EnsembleSpec("nonsense")


@pytest.mark.parametrize("spec", ISOTROPIC + [EnsembleSpec.masked_bernoulli()])
def test_token_round_trip(spec):
    assert EnsembleSpec.parse(spec.token()) == spec


def test_gaussian_column_energy():
    A = generate_matrix(EnsembleSpec.gaussian(), 100, 400, 1)
    assert abs(np.mean(A.column_norms() ** 2 / 100) - 1) < 0.05


@pytest.mark.parametrize("spec", ISOTROPIC, ids=lambda s: s.token())
def test_isotropy_on_average(spec):
    A = generate_matrix(spec, 200, 200, 2)
    assert 0.9 <= np.mean(A.column_norms() ** 2 / 200) <= 1.1


def test_masked_bernoulli_zero_columns():
    A = generate_matrix(EnsembleSpec.masked_bernoulli(), 20, 400, 3)
    zero = np.all(A.entries == 0, axis=0)
    assert abs(zero.mean() - 0.5) < 0.05
    nonzero = A.entries[:, ~zero]
    assert np.allclose(np.abs(nonzero), math.sqrt(2))
    rep = check_h2(A)
    assert rep.h2_max_deviation == pytest.approx(1.0) and not rep.h2_pass


def test_generation_is_pure():
    a = generate_matrix(EnsembleSpec.iid_entries(1.5), 7, 9, 42)
    b = generate_matrix(EnsembleSpec.iid_entries(1.5), 7, 9, 42)
    c = generate_matrix(EnsembleSpec.iid_entries(1.5), 7, 9, 43)
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, c.entries)


def test_columns_depend_only_on_their_index():
    wide = generate_matrix(EnsembleSpec.gaussian(), 5, 12, 8)
    narrow = generate_matrix(EnsembleSpec.gaussian(), 5, 4, 8)
    assert np.array_equal(wide.entries[:, :4], narrow.entries)


def test_sphere_norms_exact():
    A = generate_matrix(EnsembleSpec.sphere(), 37, 50, 4)
    assert np.max(np.abs(A.column_norms() / math.sqrt(37) - 1)) < 1e-10
    assert check_h2(A).h2_max_deviation < 1e-10 and check_h2(A).h2_pass


@given(p=st.floats(1.0, 8.0), n=st.integers(1, 12), seed=st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_lp_ball_membership(p, n, seed):
    x = sample_lp_ball_point(RngStream(seed), p, n, 200)
    assert np.all(np.sum(np.abs(x) ** p, axis=1) <= 1 + 1e-12)


def test_lp_ball_second_moment():
    x = sample_lp_ball_point(RngStream(5), 2.0, 3, 100_000)
    assert abs(np.mean(np.sum(x * x, axis=1)) - 0.6) < 0.01


def test_cross_polytope_variance_against_rejection():
    s = RngStream(6)
    x = sample_lp_ball_point(s, 1.0, 2, 100_000)
    cube = 2 * randsrc.uniform01(s, (400_000, 2)) - 1
    ref = cube[np.abs(cube).sum(axis=1) <= 1]
    assert x[:, 0].var() == pytest.approx(ref[:, 0].var(), rel=0.02)


def test_lp_ball_rejects_small_p():
    with pytest.raises(ValueError):
        sample_lp_ball_point(RngStream(0), 0.5, 3)


def test_scale_factor_for_euclidean_ball(tmp_path, monkeypatch):
    monkeypatch.setenv("CSPOLYTOPE_CACHE_DIR", str(tmp_path))
    f = isotropic_scale_factor(2.0, 3, RngStream(7), samples=100_000, persist=False)
    assert f == pytest.approx(math.sqrt(5), rel=0.01)


def test_scale_factor_large_p_approaches_cube():
    f = isotropic_scale_factor(60.0, 2, RngStream(8), samples=100_000, persist=False)
    assert f == pytest.approx(math.sqrt(3), rel=0.05)


def test_lp_columns_isotropic_covariance():
    A = generate_matrix(EnsembleSpec.lp_ball(1.0), 3, 20_000, 9)
    cov = A.entries @ A.entries.T / A.N
    assert np.max(np.abs(cov - np.eye(3))) < 0.05


def test_psi_estimates():
    s = RngStream(10)
    assert estimate_psi_r_norm(np.zeros(1000), 1.0) == 0.0
    lap = randsrc.sample_symmetric_weibull(s, 1.0, 100_000)
    assert 0.5 <= estimate_psi_r_norm(lap, 1.0) <= 8
    g = randsrc.sample_gaussian(s, 100_000)
    assert math.sqrt(8 / 3) / 4 <= estimate_psi_r_norm(g, 2.0) <= 4 * math.sqrt(8 / 3)
    with pytest.raises(ValueError):
        estimate_psi_r_norm([], 1.0)


def test_h1_modes():
    A = generate_matrix(EnsembleSpec.gaussian(), 10, 30, 11)
    rep = check_h1(A, 2.0, directions=10, samples=2000)
    assert rep.h1_mode == "ensemble" and 0.2 < rep.h1_psi_estimate < 3
    bare = SensingMatrix(A.entries)
    rep2 = check_h1(bare, 2.0)
    assert rep2.h1_mode == "instance" and rep2.notes
    with pytest.raises(ValueError):
        check_h1(A, 2.0, directions=5)


def _h2_pass_probability(n, N):
    # each |X_i|^2 is chi-square with n degrees of freedom
    from scipy.stats import chi2

    p_col = chi2.sf(n * (1 + H2_THRESHOLD), n) + chi2.cdf(n * (1 - H2_THRESHOLD), n)
    return (1 - p_col) ** N


def test_h2_pass_rate_matches_chi_square_law():
    passes = sum(check_h2(generate_matrix(EnsembleSpec.gaussian(), 400, 100, s)).h2_pass for s in range(100))
    p = _h2_pass_probability(400, 100)
    assert abs(passes / 100 - p) <= 4 * math.sqrt(p * (1 - p) / 100)


@pytest.mark.xfail(strict=True, reason="exact chi-square probability of passing is 0.694, not >= 0.95")
def test_h2_pass_rate_gaussian_at_least_95_percent():
    passes = sum(check_h2(generate_matrix(EnsembleSpec.gaussian(), 400, 100, s)).h2_pass for s in range(100))
    assert passes >= 95


def test_h2_pass_rate_high_dimension():
    assert _h2_pass_probability(800, 100) > 0.99
    passes = sum(check_h2(generate_matrix(EnsembleSpec.gaussian(), 800, 100, s)).h2_pass for s in range(100))
    assert passes >= 95


def test_h2_flag_matches_threshold():
    for s in range(20):
        rep = check_h2(generate_matrix(EnsembleSpec.gaussian(), 20, 10, s))
        assert rep.h2_pass == (rep.h2_max_deviation < H2_THRESHOLD)


def test_custom_ensemble():
    register_custom("ones", lambda stream, n: np.ones(n))
    A = generate_matrix(EnsembleSpec.custom("ones"), 4, 3, 0)
    assert np.array_equal(A.entries, np.ones((4, 3)))
    assert A.metadata()["spec"] == "custom(name=ones)"


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_serialization_round_trip(tmp_path, suffix):
    A = generate_matrix(EnsembleSpec.iid_entries(1.5), 6, 8, 12)
    path = tmp_path / f"a{suffix}"
    A.save(path)
    B = SensingMatrix.load(path)
    assert np.array_equal(A.entries, B.entries)
    assert B.spec == A.spec and B.seed == 12 and B.algorithm_id == A.algorithm_id


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=6, max_size=6))
@settings(max_examples=50, deadline=None)
def test_csv_bit_exact(vals):
    A = SensingMatrix(np.array(vals).reshape(2, 3))
    assert np.array_equal(SensingMatrix.from_csv(A.to_csv()).entries, A.entries)


def test_csv_header_row():
    A = generate_matrix(EnsembleSpec.gaussian(), 2, 3, 5)
    assert A.to_csv().splitlines()[0] == "2,3,gaussian,5,sfc64-seedseq"


def test_invalid_matrix():
    with pytest.raises(ValueError):
        SensingMatrix(np.array([[np.nan]]))
