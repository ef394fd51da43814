import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cspolytope.ensembles import EnsembleSpec, generate_matrix
from cspolytope.linalg import nullspace_basis
from cspolytope.randsrc import RngStream, uniform01
from cspolytope.recovery import (
    LpFailure,
    SignedSupport,
    Verdict,
    all_sparse_recovery_check,
    basis_pursuit,
    count_signed_supports,
    decode_l1,
    dual_certificate_value,
    exact_recovery_trial,
    nsp_signed_value,
    nullspace_property_check,
    signed_supports,
)
from cspolytope.rip import BudgetExceeded

HAND = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])


def orthonormal_scaled(n, N, seed=0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, N)))
    return math.sqrt(n) * Q


def gaussian(n, N, seed):
    return generate_matrix(EnsembleSpec.gaussian(), n, N, seed).entries


# -- signed supports ---------------------------------------------------------

def test_parse_and_label_round_trip():
    S = SignedSupport.parse("5:-, 3:+")
    assert S.indices == (2, 4) and S.signs == (1, -1)
    assert S.label() == "3:+,5:-"
    assert SignedSupport.parse(S.label()) == S
    assert SignedSupport.parse("2").signs == (1,)


@pytest.mark.parametrize("bad", [((), ()), ((1, 1), (1, 1)), ((2, 1), (1, 1)), ((0,), (2,)), ((0, 1), (1,))])
def test_support_invariants_rejected(bad):
    with pytest.raises(ValueError):
        SignedSupport(*bad)


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        SignedSupport.parse("3:*")


def test_enumeration_order_and_count():
    sups = list(signed_supports(4, 2))
    assert len(sups) == count_signed_supports(4, 2) == 4 * 2 + 6 * 4
    assert sups[0] == SignedSupport((0,), (1,)) and sups[1] == SignedSupport((0,), (-1,))
    pairs = [s.indices for s in sups if s.size == 2][::4]
    # colexicographic: ordered by the largest index first
    assert pairs == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
    assert len(set(sups)) == len(sups)
    assert list(signed_supports(4, 2, signed=False))[4:] == [SignedSupport(p, (1, 1)) for p in pairs]


@given(st.lists(st.tuples(st.integers(0, 30), st.sampled_from([-1, 1])), min_size=1, max_size=6,
                unique_by=lambda p: p[0]))
def test_vector_round_trip(pairs):
    pairs.sort()
    S = SignedSupport(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))
    assert SignedSupport.from_vector(S.vector(31)) == S
    assert S.negated().negated() == S


# -- basis pursuit -----------------------------------------------------------

def test_bp_hand_example():
    out = basis_pursuit(HAND, [1.0, 1.0])
    np.testing.assert_allclose(out.solution, [0, 0, 1], atol=1e-12)
    assert out.l1_objective == pytest.approx(1.0)


def test_bp_zero_and_orthonormal():
    X = orthonormal_scaled(6, 6)
    np.testing.assert_allclose(basis_pursuit(X, np.zeros(6)).solution, 0.0, atol=1e-14)
    e1 = np.eye(6)[0]
    np.testing.assert_allclose(basis_pursuit(X, X @ e1).solution, e1, atol=1e-9)


def test_bp_infeasible_raises():
    X = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(LpFailure):
        basis_pursuit(X, [1.0, 0.0])


def test_recovery_trial_hand_cases():
    assert exact_recovery_trial(HAND, np.zeros(3)).success
    assert exact_recovery_trial(HAND, [0, 0, 1.0]).success
    out = exact_recovery_trial(HAND, [1.0, 1.0, 0])
    assert not out.success
    np.testing.assert_allclose(out.solution, [0, 0, 1], atol=1e-12)
    assert out.l1_objective == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_bp_feasible_and_not_worse_than_input(seed, m):
    X = gaussian(12, 30, seed)
    z = np.zeros(30)
    z[:m] = np.linspace(-2, 3, m) + 0.1
    out = exact_recovery_trial(X, z)
    assert np.abs(X @ out.solution - X @ z).max() <= 1e-8 * (1 + np.abs(X @ z).max())
    assert out.l1_objective <= np.abs(z).sum() + 1e-8


@pytest.mark.parametrize("seed", range(6))
def test_scale_invariance(seed):
    X = gaussian(15, 30, seed)
    s = RngStream(seed, 3)
    z = np.zeros(30)
    z[[2, 9, 17, 23]] = np.where(uniform01(s, 4) < 0.5, -1.0, 1.0) * (0.5 + uniform01(s, 4))
    verdicts = {exact_recovery_trial(X, lam * z).success for lam in (1e-3, 1.0, 1e3)}
    assert len(verdicts) == 1


# -- decoding ------------------------------------------------------------------

def test_decode_exact_measurements():
    X = gaussian(5, 20, 1)
    x0 = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
    np.testing.assert_allclose(decode_l1(X, X.T @ x0), x0, atol=1e-8)


def test_decode_one_dimensional_is_median():
    y = np.array([3.0, -1.0, 7.0, 2.0, 10.0])
    assert decode_l1(np.ones((1, 5)), y)[0] == pytest.approx(np.median(y))


def test_decode_wrong_length():
    with pytest.raises(ValueError):
        decode_l1(HAND, [1.0, 2.0])


def test_decode_one_corruption_frequency():
    hits = 0
    for seed in range(100):
        X = gaussian(20, 80, seed)
        s = RngStream(seed, 99)
        x0 = uniform01(s, 20) * 2 - 1
        y = X.T @ x0
        j = int(uniform01(s, 1)[0] * 80)
        y[j] += 5.0
        hits += np.abs(decode_l1(X, y) - x0).max() <= 1e-6
    assert hits >= 95


# -- dual certificates ---------------------------------------------------------

def test_certificate_hand_examples():
    c = dual_certificate_value(HAND, SignedSupport.parse("3:+"))
    assert c.gamma == pytest.approx(0.5) and c.verdict is Verdict.CERTIFIED
    np.testing.assert_allclose(c.w, [0.5, 0.5], atol=1e-12)
    c = dual_certificate_value(HAND, SignedSupport.parse("1:+,2:+"))
    assert c.gamma == pytest.approx(2.0) and c.verdict is Verdict.FAILED


def test_certificate_orthonormal_is_zero():
    X = orthonormal_scaled(6, 5)
    for S in signed_supports(5, 2):
        c = dual_certificate_value(X, S)
        assert c.gamma == pytest.approx(0.0, abs=1e-9)
        assert c.verdict is Verdict.CERTIFIED


def test_certificate_dependent_columns():
    X = np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 1.0]])
    c = dual_certificate_value(X, SignedSupport.parse("1,2"))
    assert c.verdict is Verdict.FAILED and "dependent" in c.reason


def test_certificate_sign_symmetry():
    X = gaussian(8, 12, 5)
    for S in list(signed_supports(12, 2))[:40]:
        assert dual_certificate_value(X, S).gamma == pytest.approx(dual_certificate_value(X, S.negated()).gamma,
                                                                    rel=1e-7, abs=1e-9)


# -- exhaustive checks -----------------------------------------------------------

def test_all_sparse_hand():
    r1 = all_sparse_recovery_check(HAND, 1)
    assert r1.passed and r1.examined == 6
    r2 = all_sparse_recovery_check(HAND, 2)
    assert not r2.passed
    assert SignedSupport.parse("1:+,2:+") in r2.failures
    assert r2.to_dict()["failures"][0] == "1:+,2:+"


def test_all_sparse_orthonormal_passes_every_order():
    X = orthonormal_scaled(5, 5)
    for m in range(1, 6):
        assert all_sparse_recovery_check(X, m).passed


def test_all_sparse_budget():
    with pytest.raises(BudgetExceeded):
        all_sparse_recovery_check(np.ones((2, 30)), 3, budget=100)


def test_nsp_hand():
    assert nullspace_property_check(HAND, 1).passed
    rep = nullspace_property_check(HAND, 2)
    assert not rep.passed and rep.mode == "exhaustive" and rep.kernel_dim == 1
    # ker = span(1, 1, -1): E = {1,2} gives 2 against 1
    v = nsp_signed_value(nullspace_basis(HAND), SignedSupport.parse("1:+,2:+"))
    assert v.value == pytest.approx(2.0)
    v = nsp_signed_value(nullspace_basis(HAND), SignedSupport.parse("3:-"))
    assert v.value == pytest.approx(0.5)


def test_nsp_trivial_kernel():
    X = orthonormal_scaled(6, 4)
    for m in (1, 2, 4):
        rep = nullspace_property_check(X, m)
        assert rep.passed and rep.kernel_dim == 0


def test_nsp_sampled_mode_finds_violation():
    X = gaussian(10, 40, 0)
    rep = nullspace_property_check(X, 15, samples=2000)
    assert rep.mode == "sampled" and not rep.passed and rep.failures


@pytest.mark.parametrize("seed", range(8))
def test_three_oracles_agree(seed):
    X = gaussian(6, 10, seed)
    for m in (1, 2, 3):
        a = all_sparse_recovery_check(X, m).passed
        b = nullspace_property_check(X, m).passed
        assert a == b


def test_per_support_certificate_matches_trials():
    X = gaussian(8, 12, 2)
    s = RngStream(2, 5)
    for S in itertools.islice(signed_supports(12, 3, sizes=[3]), 0, 400, 7):
        cert = dual_certificate_value(X, S)
        if cert.verdict is Verdict.INDETERMINATE:
            continue
        z = S.vector(12, 0.5 + uniform01(s, 3))
        assert exact_recovery_trial(X, z).success == (cert.verdict is Verdict.CERTIFIED)


# -- numerical regressions -------------------------------------------------------

def test_certificate_with_roundoff_pivot_in_phase_one():
    X = gaussian(8, 12, 21)
    S = SignedSupport.parse("4:-,7:-,8:-")
    cert = dual_certificate_value(X, S)
    assert np.isfinite(cert.gamma)
    assert cert.verdict is nsp_signed_value(nullspace_basis(X), S).verdict


def test_decoding_with_roundoff_reduced_cost():
    X = gaussian(20, 80, 62)
    s = RngStream(62, 99)
    x0 = uniform01(s, 20) * 2 - 1
    y = X.T @ x0
    y[int(uniform01(s, 1)[0] * 80)] += 5.0
    np.testing.assert_allclose(decode_l1(X, y), x0, atol=1e-6)
