"""Rate minimization over a pool of response functions.

For fixed targets (D, L) the optimal query distribution solves

    min  (1/M) sum_{m,q} P(q|m) R_q
    s.t. sum_q P(q|m) = 1                          for every m
         (1/M) sum_{m,q} P(q|m) D_q^(m) <= D
         (1/M) sum_q xi_q <= L
         0 <= P(q|m) <= xi_q

where xi_q stands in for max_m P(q|m).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .ratedist import TradeoffCurve, is_convex_nonincreasing
from .simplex import INFEASIBLE, OPTIMAL, solve_lp


class InfeasibleError(ValueError):
    pass


def _is_exact(v):
    return isinstance(v, (int, Fraction))


@dataclass(frozen=True)
class QueryDistribution:
    """Conditional query distribution P(q|m); ``P[m][q]``."""

    P: tuple
    queries: tuple = None

    def __post_init__(self):
        P = tuple(tuple(row) for row in self.P)
        object.__setattr__(self, "P", P)
        if not P or not P[0]:
            raise ValueError("empty query distribution")
        nq = len(P[0])
        if self.queries is None:
            object.__setattr__(self, "queries", tuple(range(nq)))
        if len(self.queries) != nq:
            raise ValueError("query ids do not match the number of columns")
        for row in P:
            if len(row) != nq:
                raise ValueError("ragged query distribution")
            if any(p < 0 for p in row):
                raise ValueError("negative probability")
            s = sum(row)
            if all(_is_exact(p) for p in row):
                if s != 1:
                    raise ValueError(f"row sums to {s}, not 1")
            elif abs(s - 1) > 1e-9:
                raise ValueError(f"row sums to {s}, not 1")

    @property
    def M(self):
        return len(self.P)

    @property
    def num_queries(self):
        return len(self.P[0])

    @property
    def exact(self):
        return all(_is_exact(p) for row in self.P for p in row)

    def marginal(self):
        """P_Q(q) under a uniform file index."""
        M = self.M
        zero = Fraction(0) if self.exact else 0.0
        return tuple(sum((self.P[m][q] for m in range(M)), zero) / M for q in range(self.num_queries))

    def joint(self, m, q):
        return self.P[m][q] / self.M

    def column(self, q):
        return [self.P[m][q] for m in range(self.M)]


def leakage(P: QueryDistribution):
    """Success probability of the server's ML guess of the file index."""
    zero = Fraction(0) if P.exact else 0.0
    return sum((max(P.column(q)) for q in range(P.num_queries)), zero) / P.M


def pool_points(pool):
    """(R_q, D_q^(1..M)) for each pool entry (response objects or tuples)."""
    pts = []
    for item in pool:
        pts.append(tuple(item.point) if hasattr(item, "point") else tuple(item))
    return pts


@dataclass
class LpSolution:
    status: str
    objective: object = None
    P: QueryDistribution | None = None
    xi: tuple = ()
    D_target: object = None
    L_target: object = None
    exact: bool = True
    dual_objective: object = None
    points: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == OPTIMAL

    def support(self, tol=0):
        """Queries with positive marginal probability."""
        if self.P is None:
            return []
        pq = self.P.marginal()
        return [q for q, p in enumerate(pq) if p > tol]


def build_and_solve_lp(pool, M, D_target, L_target, exact=None):
    """Solve the rate LP over the pool at targets (D, L).

    Exact rational simplex when the pool values and both targets are
    rational (or when ``exact=True``), HiGHS otherwise.  Infeasible targets
    are reported through ``status``.
    """
    pts = pool_points(pool)
    if not pts:
        raise ValueError("empty pool")
    if any(len(p) != M + 1 for p in pts):
        raise ValueError(f"pool points must have {M + 1} coordinates")
    if exact is None:
        exact = all(_is_exact(v) for p in pts for v in p) and _is_exact(D_target) and _is_exact(L_target)
    if exact:
        pts = [tuple(Fraction(v) for v in p) for p in pts]
        D_target, L_target = Fraction(D_target), Fraction(L_target)
    Q = len(pts)
    n = M * Q + Q
    pidx = lambda m, q: m * Q + q
    xidx = lambda q: M * Q + q
    c = [0] * n
    for m in range(M):
        for q in range(Q):
            c[pidx(m, q)] = Fraction(pts[q][0], M) if exact else pts[q][0] / M
    A_eq, b_eq = [], []
    for m in range(M):
        row = [0] * n
        for q in range(Q):
            row[pidx(m, q)] = 1
        A_eq.append(row)
        b_eq.append(1)
    A_ub, b_ub = [], []
    row = [0] * n
    for m in range(M):
        for q in range(Q):
            row[pidx(m, q)] = pts[q][1 + m]
    A_ub.append(row)
    b_ub.append(M * D_target)
    row = [0] * n
    for q in range(Q):
        row[xidx(q)] = 1
    A_ub.append(row)
    b_ub.append(M * L_target)
    for m in range(M):
        for q in range(Q):
            row = [0] * n
            row[pidx(m, q)] = 1
            row[xidx(q)] = -1
            A_ub.append(row)
            b_ub.append(0)
    res = solve_lp(c, A_ub, b_ub, A_eq, b_eq, exact=exact)
    if res.status != OPTIMAL:
        return LpSolution(INFEASIBLE if res.status == INFEASIBLE else res.status,
                          D_target=D_target, L_target=L_target, exact=exact, points=pts)
    x = res.x
    P = []
    for m in range(M):
        row = [max(x[pidx(m, q)], 0) for q in range(Q)]
        if not exact:
            s = sum(row)
            row = [v / s for v in row]
        P.append(tuple(row))
    xi = tuple(x[xidx(q)] for q in range(Q))
    return LpSolution(
        OPTIMAL, res.objective, QueryDistribution(tuple(P)), xi, D_target, L_target, exact,
        res.dual_objective(b_ub, b_eq), pts,
    )


def lp_optimum(pool, M, D_target, L_target, exact=None):
    sol = build_and_solve_lp(pool, M, D_target, L_target, exact=exact)
    return sol.objective if sol.ok else None


def tradeoff_sweep(pool, M, L_fixed, D_grid, exact=None, label="", tol=1e-9, return_solutions=False):
    """Optimal rate on a distortion grid at fixed leakage.

    Infeasible grid points are left out of the curve and listed in
    ``curve.gaps``.  Raises if the solved values are not convex and
    nonincreasing.
    """
    D_grid = list(D_grid)
    if any(b < a for a, b in zip(D_grid, D_grid[1:])):
        raise ValueError("distortion grid must be sorted")
    points, gaps, solutions = [], [], []
    for D in D_grid:
        sol = build_and_solve_lp(pool, M, D, L_fixed, exact=exact)
        solutions.append(sol)
        if sol.ok:
            points.append((D, sol.objective))
        else:
            gaps.append(D)
    exact_run = all(s.exact for s in solutions)
    if not is_convex_nonincreasing(points, tol=0 if exact_run else tol):
        raise ArithmeticError("swept rates are not convex and nonincreasing")
    curve = TradeoffCurve(tuple(points), L_fixed, label, tuple(gaps))
    if return_solutions:
        return curve, solutions
    return curve


def scheme_from_solution(pool, sol: LpSolution, tol=0):
    """Scheme using the queries that carry positive probability."""
    from .schemes import Scheme

    if not sol.ok:
        raise InfeasibleError("cannot build a scheme from a non-optimal solution")
    keep = sol.support(tol)
    M = sol.P.M
    rows = []
    for m in range(M):
        row = [sol.P.P[m][q] for q in keep]
        if not sol.exact:
            s = sum(row)
            row = [v / s for v in row]
        rows.append(tuple(row))
    responses = tuple(pool[q] for q in keep)
    first = responses[0]
    return Scheme(
        first.alphabet_size, M, first.file_len,
        QueryDistribution(tuple(rows), tuple(keep)), responses,
    )


def _fmt(v):
    return f"{float(v):.12g}"


def curves_to_csv(curves: Sequence[TradeoffCurve], fh=None):
    """Write curves as ``distortion,rate,leakage,label`` rows."""
    own = fh is None
    fh = fh or io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["distortion", "rate", "leakage", "label"])
    for c in curves:
        for d, r in c.points:
            w.writerow([_fmt(d), _fmt(r), "" if c.leakage is None else _fmt(c.leakage), c.label])
    if own:
        return fh.getvalue()
    return None


def curves_from_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    grouped = {}
    for r in rows:
        key = (r["label"], r["leakage"])
        grouped.setdefault(key, []).append((float(r["distortion"]), float(r["rate"])))
    return [
        TradeoffCurve(tuple(pts), float(leak) if leak else None, label)
        for (label, leak), pts in grouped.items()
    ]
