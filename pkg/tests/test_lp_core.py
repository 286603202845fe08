import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from lwpir.lp_core import (
    QueryDistribution,
    build_and_solve_lp,
    curves_from_csv,
    curves_to_csv,
    leakage,
    lp_optimum,
    scheme_from_solution,
    tradeoff_sweep,
)
from lwpir.ratedist import TradeoffCurve, is_convex_nonincreasing
from lwpir.response_enum import partition_responses
from lwpir.schemes import evaluate

POOL = list(partition_responses(2, 2, 1))


def test_leakage_endpoints():
    uniform = QueryDistribution(((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2))))
    direct = QueryDistribution(((1, 0), (0, 1)))
    assert leakage(uniform) == F(1, 2)
    assert leakage(direct) == 1


def test_rows_must_sum_to_one():
    with pytest.raises(ValueError):
        QueryDistribution(((F(1, 2), F(1, 3)),))
    with pytest.raises(ValueError):
        QueryDistribution(((F(3, 2), -F(1, 2)),))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 8), st.integers(0, 8))
def test_solution_is_feasible_and_rebuilds(di, li):
    D, L = F(di, 16), F(1, 2) + F(li, 16)
    sol = build_and_solve_lp(POOL, 2, D, L)
    assert sol.ok and sol.exact
    rep = evaluate(scheme_from_solution(POOL, sol))
    assert rep.rate == sol.objective
    assert rep.distortion <= D
    assert rep.leakage <= L
    assert sol.dual_objective == sol.objective


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_optimum_monotone_in_targets(seed):
    rng = random.Random(seed)
    D1, D2 = sorted(F(rng.randint(0, 8), 16) for _ in range(2))
    L1, L2 = sorted(F(1, 2) + F(rng.randint(0, 8), 16) for _ in range(2))
    assert lp_optimum(POOL, 2, D2, L1) <= lp_optimum(POOL, 2, D1, L1)
    assert lp_optimum(POOL, 2, D1, L2) <= lp_optimum(POOL, 2, D1, L1)


def test_infeasible_leakage_below_uniform():
    assert build_and_solve_lp(POOL, 2, F(0), F(1, 3)).status == "infeasible"


def test_float_and_exact_agree():
    for D, L in ((0.1, 0.6), (0.3, 0.9), (0.0, 0.5)):
        ex = lp_optimum(POOL, 2, F(D).limit_denominator(100), F(L).limit_denominator(100))
        fl = lp_optimum(POOL, 2, D, L, exact=False)
        assert float(ex) == pytest.approx(fl, abs=1e-9)


def test_pool_point_length_checked():
    with pytest.raises(ValueError):
        build_and_solve_lp([(1, 0)], 2, 0, 1)


def test_sweep_convex_with_gaps():
    grid = [F(i, 8) for i in range(5)]
    c = tradeoff_sweep(POOL, 2, F(1, 2), grid)
    assert is_convex_nonincreasing(c.points, tol=0)
    assert c.gaps == ()
    c2 = tradeoff_sweep(POOL, 2, F(1, 4), grid)
    assert c2.points == () and len(c2.gaps) == 5


def test_csv_roundtrip():
    c = TradeoffCurve(((0.0, 2.0), (0.25, 1.0)), 0.5, "x")
    text = curves_to_csv([c])
    assert text.splitlines()[0] == "distortion,rate,leakage,label"
    back = curves_from_csv(text)
    assert back[0].points == c.points and back[0].label == "x"
