from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from lwpir.ratedist import (
    DomainError,
    RateDistortionCurve,
    TradeoffCurve,
    UnsupportedCurveError,
    binary_entropy,
    eval_rd,
    is_convex_nonincreasing,
    lower_convex_envelope,
    lower_hull,
    pwl_approximate,
    rd_derivative,
    rd_derivative_inverse,
    rd_inverse,
    uniform_grid,
)

B = RateDistortionCurve.binary()


def test_binary_values():
    assert eval_rd(B, 0) == 1
    assert eval_rd(B, 0.5) == pytest.approx(0)
    assert eval_rd(B, 0.11) == pytest.approx(1 - binary_entropy(0.11))


def test_kary_at_zero_is_log_k():
    assert eval_rd(RateDistortionCurve.kary(64), 0) == pytest.approx(6)
    assert RateDistortionCurve.kary(64).d_max == pytest.approx(63 / 64)


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_rd(B, 0.6)
    with pytest.raises(DomainError):
        eval_rd(B, -0.1)
    pw = RateDistortionCurve.piecewise_linear([(0, 1), (F(1, 2), 0)])
    with pytest.raises(UnsupportedCurveError):
        rd_derivative(pw, F(1, 4))


def test_pwl_is_exact_with_fractions():
    pw = RateDistortionCurve.piecewise_linear([(F(0), F(1)), (F(1, 4), F(1, 4)), (F(1, 2), F(0))])
    assert eval_rd(pw, F(1, 8)) == F(5, 8)
    assert isinstance(eval_rd(pw, F(1, 8)), F)


def test_json_roundtrip():
    pw, _ = pwl_approximate(B, uniform_grid(B, 11, exact=True), exact=True)
    assert RateDistortionCurve.from_json(pw.to_json()) == pw
    assert RateDistortionCurve.from_json(B.to_json()) == B


def test_pwl_error_bound_is_attained_and_shrinks():
    errs = []
    for s in (11, 41, 201):
        pw, err = pwl_approximate(B, uniform_grid(B, s))
        fine = [0.5 * i / 20000 for i in range(20001)]
        worst = max(pw(d) - B(d) for d in fine)
        assert worst <= err + 1e-12
        assert worst >= 0.99 * err
        errs.append(err)
    assert errs[0] > errs[1] > errs[2]


@given(st.floats(0.001, 0.499))
def test_derivative_inverse_roundtrip(D):
    assert rd_derivative_inverse(B, rd_derivative(B, D)) == pytest.approx(D, abs=1e-12)


@given(st.floats(0.0, 1.0))
def test_rd_inverse(R):
    D = rd_inverse(B, R)
    assert eval_rd(B, D) <= R + 1e-9
    if 0 < R < 1:
        assert eval_rd(B, max(D - 1e-6, 0)) > R


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=30))
def test_lower_hull_is_convex_and_below(points):
    hull = lower_hull(points)
    curve = TradeoffCurve(tuple(hull))
    lo, hi = hull[0][0], hull[-1][0]
    for d, r in points:
        if lo <= d <= hi:
            assert curve(d) <= r + 1e-12
    # convexity: slopes increase
    slopes = [(r1 - r0) / (d1 - d0) for (d0, r0), (d1, r1) in zip(hull, hull[1:])]
    assert all(a < b for a, b in zip(slopes, slopes[1:]))


def test_envelope_of_two_curves():
    a = TradeoffCurve(((0, 2), (1, 0)))
    b = TradeoffCurve(((0, 3), (0.5, 0.2), (1, 0.1)))
    env = lower_convex_envelope([a, b])
    for d in (0, 0.25, 0.5, 0.75, 1):
        assert env(d) <= min(a(d), b(d)) + 1e-12
    assert env(0.5) < a(0.5)


def test_convex_linter():
    assert is_convex_nonincreasing([(0, 1), (0.25, 0.4), (0.5, 0)])
    assert not is_convex_nonincreasing([(0, 1), (0.25, 0.9), (0.5, 0)])
    assert not is_convex_nonincreasing([(0, 1), (0.5, 1.2)])


def test_binary_entropy_symmetric():
    assert binary_entropy(0.5) == 1
    assert binary_entropy(0.2) == pytest.approx(binary_entropy(0.8))
    assert binary_entropy(0) == 0 and binary_entropy(1) == 0
