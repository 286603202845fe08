"""Optimal tradeoff for asymptotically long files.

With infinite file length each (query, file) pair can be compressed at any
point of the rate-distortion curve, so the scheme design reduces to choosing
a query distribution and a distortion level per requested file.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from scipy import optimize, sparse

from .lp_core import InfeasibleError, QueryDistribution, leakage
from .ratedist import (
    PWL,
    RateDistortionCurve,
    TradeoffCurve,
    eval_rd,
    lower_convex_envelope,
    pwl_approximate,
    rd_derivative_inverse,
    uniform_grid,
)
from .simplex import OPTIMAL, solve_lp, solve_sparse_float

NO_LEAKAGE = "no-leakage"
NO_PRIVACY = "no-privacy"
DEFAULT_BUDGET = 2_000_000


class BudgetExceededError(ValueError):
    pass


@dataclass
class DistortionAllocation:
    """Per-file, per-query distortion levels ``D[m][q]`` and the multiplier."""

    D: tuple
    lam: float
    rate: float
    P: QueryDistribution = None

    def total_distortion(self):
        P = self.P
        return sum(P.joint(m, q) * self.D[m][q] for m in range(P.M) for q in range(P.num_queries))


def _joint_float(P: QueryDistribution):
    M, Q = P.M, P.num_queries
    pmq = [[float(P.P[m][q]) / M for q in range(Q)] for m in range(M)]
    pq = [sum(pmq[m][q] for m in range(M)) for q in range(Q)]
    return pmq, pq


def _allocation_rate(curve, pmq, pq, D):
    M, Q = len(pmq), len(pq)
    rate = 0.0
    for q in range(Q):
        if pq[q] <= 0:
            continue
        rate += pq[q] * sum(eval_rd(curve, D[m][q]) for m in range(M) if pmq[m][q] > 0)
    return rate


def kkt_inner_solve(P: QueryDistribution, curve: RateDistortionCurve, D_target):
    """Best distortion allocation for a fixed query distribution.

    Each supported entry gets the distortion where the scaled slope
    (P_Q(q)/P(m,q)) r'(D) equals a common multiplier, which is then tuned so
    the average distortion hits the target.  Unrequested entries sit at D_max
    where the rate is zero.
    """
    if not curve.is_analytic:
        raise ValueError("KKT allocation needs an analytic curve")
    D_target = float(D_target)
    dmax = float(curve.d_max)
    if D_target < 0:
        raise ValueError("distortion target must be nonnegative")
    pmq, pq = _joint_float(P)
    M, Q = P.M, P.num_queries
    support = [(m, q) for m in range(M) for q in range(Q) if pmq[m][q] > 0]

    def alloc(lam):
        D = [[dmax] * Q for _ in range(M)]
        for m, q in support:
            D[m][q] = rd_derivative_inverse(curve, lam * pmq[m][q] / pq[q])
        return D

    def total(D):
        return sum(pmq[m][q] * D[m][q] for m, q in support)

    if D_target == 0:
        D = [[0.0 if pmq[m][q] > 0 else dmax for q in range(Q)] for m in range(M)]
        return DistortionAllocation(_tup(D), -math.inf, _allocation_rate(curve, pmq, pq, D), P)
    if D_target >= dmax:
        D = [[dmax] * Q for _ in range(M)]
        return DistortionAllocation(_tup(D), 0.0, 0.0, P)

    # u = log2(-lambda); allocated distortion decreases in u
    f = lambda u: total(alloc(-(2.0 ** u))) - D_target
    lo, hi = -1.0, 1.0
    steps = 0
    while f(lo) <= 0:
        lo -= 2 * (hi - lo)
        steps += 1
        if steps > 200:
            raise ArithmeticError("could not bracket the multiplier")
    while f(hi) >= 0:
        hi += 2 * (hi - lo)
        steps += 1
        if steps > 200:
            raise ArithmeticError("could not bracket the multiplier")
    u = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    lam = -(2.0 ** u)
    D = alloc(lam)
    if abs(total(D) - D_target) > 1e-10:
        raise ArithmeticError("multiplier search did not converge")
    return DistortionAllocation(_tup(D), lam, _allocation_rate(curve, pmq, pq, D), P)


def _tup(D):
    return tuple(tuple(row) for row in D)


def extreme_leakage_rate(M, curve, D, which):
    """Closed-form optimum at the two leakage extremes."""
    r = eval_rd(curve, D)
    if which == NO_LEAKAGE:
        return M * r
    if which == NO_PRIVACY:
        return r
    raise ValueError(f"which must be {NO_LEAKAGE!r} or {NO_PRIVACY!r}")


def wpir_lc_rate(rate_fn, N, alpha, D, M=None):
    """Leakage and rate of time-sharing subset sizes N and N+1 with compression.

    ``rate_fn`` is a curve or any callable giving the compression rate at D.
    """
    if N < 1 or (M is not None and N > M - 1):
        raise ValueError("need 1 <= N <= M-1")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    exact = all(isinstance(v, (int, Fraction)) for v in (N, alpha))
    if exact:
        L = Fraction(alpha) / N + (1 - Fraction(alpha)) / (N + 1)
    else:
        L = alpha / N + (1 - alpha) / (N + 1)
    r = rate_fn(D)
    return L, (N + 1 - alpha) * r


def subset_query_distribution(M, weights):
    """Queries are file subsets; a size-k subset containing m gets w_k / C(M-1, k-1).

    ``weights`` maps subset size to its total probability.
    """
    subsets = []
    for k in sorted(weights):
        if weights[k]:
            subsets.extend(itertools.combinations(range(M), k))
    rows = []
    for m in range(M):
        row = []
        for S in subsets:
            k = len(S)
            w = weights[k]
            if m in S:
                row.append(Fraction(w) / comb(M - 1, k - 1) if isinstance(w, (int, Fraction)) else w / comb(M - 1, k - 1))
            else:
                row.append(0)
        rows.append(tuple(row))
    return QueryDistribution(tuple(rows), tuple(subsets))


@dataclass
class FamilySolution:
    status: str
    rate: object = None
    weights: dict = field(default_factory=dict)
    levels: dict = field(default_factory=dict)
    exact: bool = False

    @property
    def ok(self):
        return self.status == OPTIMAL

    @property
    def leakage(self):
        return sum((w / k for k, w in self.weights.items()), 0)

    def to_json(self):
        def num(v):
            return str(v) if isinstance(v, Fraction) else float(v)
        return {
            "status": self.status,
            "rate": None if self.rate is None else num(self.rate),
            "weights": {str(k): num(w) for k, w in self.weights.items()},
            "levels": {str(k): [[num(d), num(p)] for d, p in lv] for k, lv in self.levels.items()},
        }


def _pwl_or_convert(curve, s=201):
    if curve.kind == PWL:
        return curve
    return pwl_approximate(curve, uniform_grid(curve, s))[0]


def symmetric_family_solve(M, curve, L_target, D_target, exact=None):
    """Optimum over queries asking a random size-k subset at one grid level.

    One LP column per (k, grid point): rate k r_j, distortion D_j and leakage
    1/k.  ``levels[k]`` lists the (D_j, weight) pairs chosen for size k.
    """
    curve = _pwl_or_convert(curve)
    if exact is None:
        exact = curve.is_exact and all(isinstance(v, (int, Fraction)) for v in (L_target, D_target))
    below = L_target < Fraction(1, M) if exact else float(L_target) < 1 / M - 1e-12
    if below:
        raise InfeasibleError(f"leakage {L_target} is below 1/M")
    bps = curve.breakpoints
    cols = [(k, j) for k in range(1, M + 1) for j in range(len(bps))]
    if exact:
        bps = [(Fraction(d), Fraction(r)) for d, r in bps]
        L_target, D_target = Fraction(L_target), Fraction(D_target)
    else:
        bps = [(float(d), float(r)) for d, r in bps]
        L_target, D_target = float(L_target), float(D_target)
    c = [k * bps[j][1] for k, j in cols]
    A_ub = [[bps[j][0] for k, j in cols], [Fraction(1, k) if exact else 1 / k for k, j in cols]]
    b_ub = [D_target, L_target]
    A_eq = [[1] * len(cols)]
    res = solve_lp(c, A_ub, b_ub, A_eq, [1], exact=exact)
    if res.status != OPTIMAL:
        return FamilySolution(res.status, exact=exact)
    weights, levels = {}, {}
    for (k, j), x in zip(cols, res.x):
        if x > (0 if exact else 1e-12):
            weights[k] = weights.get(k, 0) + x
            levels.setdefault(k, []).append((bps[j][0], x))
    return FamilySolution(OPTIMAL, res.objective, weights, levels, exact)


@dataclass
class ProfileLpResult:
    status: str
    rate: float = None
    active: list = field(default_factory=list)  # (profile distortions, P(q|m) column)
    num_queries: int = 0

    @property
    def ok(self):
        return self.status == OPTIMAL


def pwl_lp_solve(M, curve, L_target, D_target, budget=DEFAULT_BUDGET, tol=1e-10):
    """Optimum over all per-file distortion profiles drawn from the PWL grid.

    Each query fixes one grid level per file; the query distribution is then
    optimized by the rate LP.  The result is the optimum for the PWL curve.
    """
    curve = _pwl_or_convert(curve)
    bps = [(float(d), float(r)) for d, r in curve.breakpoints]
    s = len(bps)
    NQ = s ** M
    if NQ > budget:
        raise BudgetExceededError(
            f"{s}^{M} = {NQ} distortion profiles exceed the budget {budget}; use symmetric_family_solve"
        )
    L_target, D_target = float(L_target), float(D_target)
    if L_target < 1 / M - 1e-12:
        return ProfileLpResult("infeasible", num_queries=NQ)
    grid_d = np.array([d for d, _ in bps])
    grid_r = np.array([r for _, r in bps])
    q = np.arange(NQ)
    digits = np.empty((M, NQ), dtype=np.int64)
    rest = q.copy()
    for m in range(M - 1, -1, -1):
        digits[m] = rest % s
        rest //= s
    Rq = grid_r[digits].sum(axis=0)
    Dmq = grid_d[digits]
    nx = M * NQ
    n = nx + NQ
    c = np.concatenate([np.tile(Rq / M, M), np.zeros(NQ)])
    # equality: each file's query distribution sums to one
    rows = np.repeat(np.arange(M), NQ)
    A_eq = sparse.csr_matrix((np.ones(nx), (rows, np.arange(nx))), shape=(M, n))
    b_eq = np.ones(M)
    # inequalities: distortion, leakage, and P(q|m) <= xi_q
    r_idx = [np.zeros(nx, dtype=np.int64), np.ones(NQ, dtype=np.int64)]
    c_idx = [np.arange(nx), nx + np.arange(NQ)]
    vals = [Dmq.reshape(-1), np.ones(NQ)]
    link_rows = 2 + np.arange(nx)
    r_idx += [link_rows, link_rows]
    c_idx += [np.arange(nx), nx + np.tile(np.arange(NQ), M)]
    vals += [np.ones(nx), -np.ones(nx)]
    A_ub = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(r_idx), np.concatenate(c_idx))), shape=(2 + nx, n)
    )
    b_ub = np.concatenate([[M * D_target, M * L_target], np.zeros(nx)])
    res = solve_sparse_float(c, A_ub, b_ub, A_eq, b_eq)
    if res.status != OPTIMAL:
        return ProfileLpResult(res.status, num_queries=NQ)
    x = np.asarray(res.x[:nx]).reshape(M, NQ)
    active = []
    for qq in np.nonzero(x.max(axis=0) > tol)[0]:
        active.append((tuple(float(v) for v in Dmq[:, qq]), tuple(float(v) for v in x[:, qq])))
    return ProfileLpResult(OPTIMAL, res.objective, active, NQ)


def fixed_query_pwl_solve(P: QueryDistribution, curve, D_target):
    """PWL counterpart of the KKT allocation for a fixed query distribution.

    Each supported (m, q) entry mixes grid levels; since the PWL curve is
    convex this equals evaluating it at the mixture mean.
    """
    curve = _pwl_or_convert(curve)
    bps = [(float(d), float(r)) for d, r in curve.breakpoints]
    pmq, pq = _joint_float(P)
    support = [(m, q) for m in range(P.M) for q in range(P.num_queries) if pmq[m][q] > 0]
    s = len(bps)
    n = len(support) * s
    c = np.zeros(n)
    dist = np.zeros(n)
    eq_r, eq_c = [], []
    b_eq = []
    for e, (m, q) in enumerate(support):
        for j, (d, r) in enumerate(bps):
            k = e * s + j
            c[k] = r
            # z sums to P_Q(q); the file's distortion weight is P(m,q)/P_Q(q)
            dist[k] = d * pmq[m][q] / pq[q]
            eq_r.append(e)
            eq_c.append(k)
        b_eq.append(pq[q])
    A_eq = sparse.csr_matrix((np.ones(n), (eq_r, eq_c)), shape=(len(support), n))
    A_ub = sparse.csr_matrix(dist.reshape(1, -1))
    res = solve_sparse_float(c, A_ub, np.array([float(D_target)]), A_eq, np.array(b_eq))
    if res.status != OPTIMAL:
        return None
    return res.objective


def active_query_count(result: ProfileLpResult):
    """Number of distinct queries carrying probability (equal profiles merged)."""
    return len({prof for prof, _ in result.active})


def asymptotic_curve(M, curve, L_target, D_grid, method="auto", label=None):
    """Asymptotic optimum sampled on a distortion grid."""
    if method == "auto":
        if L_target == 1 or float(L_target) == 1.0:
            method = NO_PRIVACY
        elif float(L_target) == 1 / M:
            method = NO_LEAKAGE
        else:
            method = "symmetric-family"
    pts, params = [], []
    for D in D_grid:
        if method in (NO_LEAKAGE, NO_PRIVACY):
            pts.append((D, extreme_leakage_rate(M, curve, D, method)))
        elif method == "symmetric-family":
            sol = symmetric_family_solve(M, curve, L_target, D)
            pts.append((D, sol.rate))
            params.append(sol.to_json())
        elif method == "profile-lp":
            sol = pwl_lp_solve(M, curve, L_target, D)
            pts.append((D, sol.rate))
        else:
            raise ValueError(f"unknown method {method!r}")
    name = label or (method if method != "symmetric-family" else "symmetric-family bound")
    return TradeoffCurve(tuple(pts), L_target, name), params


# two-file-subset versus mixed-subset comparison for K-ary sources

def singles_and_triple_distribution():
    """Singletons with total weight 1/4, the full set of three with 3/4."""
    return subset_query_distribution(3, {1: Fraction(1, 4), 3: Fraction(3, 4)})


def pairs_and_triple_distribution():
    """Pairs with total weight 1/2, the full set of three with 1/2."""
    return subset_query_distribution(3, {2: Fraction(1, 2), 3: Fraction(1, 2)})


def mixed_subset_curves(K=64, s=201):
    """Curves 2 r_X, the mixed-subset rate and their lower convex envelope (M=3, L=1/2)."""
    curve = RateDistortionCurve.kary(K)
    grid = uniform_grid(curve, s)
    P2 = singles_and_triple_distribution()
    two = TradeoffCurve(tuple((d, 2 * eval_rd(curve, d)) for d in grid), Fraction(1, 2), "2r_X")
    mixed = TradeoffCurve(
        tuple((d, kkt_inner_solve(P2, curve, d).rate) for d in grid), leakage(P2), "R_P2"
    )
    env = lower_convex_envelope([two, mixed], label="envelope")
    return {"2r_X": two, "R_P2": mixed, "envelope": env}
