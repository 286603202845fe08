"""Linear programming backends.

``solve_lp`` minimizes ``c @ x`` subject to ``A_ub @ x <= b_ub``,
``A_eq @ x == b_eq`` and ``x >= 0``.  The exact backend is a two-phase dense
tableau simplex over :class:`fractions.Fraction` with Bland's rule; the
float backend delegates to HiGHS through scipy.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    x: list | None = None
    objective: object = None
    duals_ub: list | None = None
    duals_eq: list | None = None
    exact: bool = True

    @property
    def ok(self):
        return self.status == OPTIMAL

    def dual_objective(self, b_ub=None, b_eq=None):
        total = Fraction(0) if self.exact else 0.0
        for y, b in zip(self.duals_ub or [], b_ub or []):
            total += y * b
        for y, b in zip(self.duals_eq or [], b_eq or []):
            total += y * b
        return total


def _frac(v):
    return v if isinstance(v, Fraction) else Fraction(v)


class _Tableau:
    def __init__(self, rows, rhs, ncols):
        self.rows = rows
        self.rhs = rhs
        self.ncols = ncols
        self.basis = [None] * len(rows)

    def pivot(self, r, j):
        row = self.rows[r]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for k in range(self.ncols):
                if row[k]:
                    row[k] *= inv
            self.rhs[r] *= inv
        nz = [k for k in range(self.ncols) if row[k]]
        rr = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[j]
            if f:
                for k in nz:
                    other[k] -= f * row[k]
                self.rhs[i] -= f * rr
        self.basis[r] = j

    def reduced_costs(self, cost):
        d = list(cost)
        z = Fraction(0)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for k in range(self.ncols):
                    if row[k]:
                        d[k] -= cb * row[k]
                z += cb * self.rhs[i]
        return d, z

    def run(self, cost, allowed, max_iter=100000):
        """Bland's-rule simplex on the current basis; returns status."""
        d, _ = self.reduced_costs(cost)
        for _ in range(max_iter):
            enter = None
            for k in range(self.ncols):
                if allowed[k] and d[k] < 0:
                    enter = k
                    break
            if enter is None:
                return OPTIMAL
            leave = None
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return UNBOUNDED
            self.pivot(leave, enter)
            f = d[enter]
            row = self.rows[leave]
            for k in range(self.ncols):
                if row[k]:
                    d[k] -= f * row[k]
        raise RuntimeError("simplex iteration limit reached")


def _solve_exact(c, A_ub, b_ub, A_eq, b_eq):
    n = len(c)
    c = [_frac(v) for v in c]
    raw = []
    for a, b in zip(A_ub, b_ub):
        raw.append(([_frac(v) for v in a], _frac(b), "ub"))
    for a, b in zip(A_eq, b_eq):
        raw.append(([_frac(v) for v in a], _frac(b), "eq"))
    m = len(raw)
    # column layout: x (n) | one identity column per row (m)
    # identity column is a slack for ub rows with b >= 0, otherwise artificial;
    # ub rows with b < 0 also get a surplus column appended after.
    surplus_rows = [i for i, (_, b, kind) in enumerate(raw) if kind == "ub" and b < 0]
    ncols = n + m + len(surplus_rows)
    rows, rhs, sign, artificial = [], [], [], [False] * ncols
    surplus_col = {r: n + m + k for k, r in enumerate(surplus_rows)}
    for i, (a, b, kind) in enumerate(raw):
        row = [Fraction(0)] * ncols
        s = -1 if b < 0 else 1
        for k, v in enumerate(a):
            if v:
                row[k] = s * v
        row[n + i] = Fraction(1)
        if kind == "ub" and b < 0:
            row[surplus_col[i]] = Fraction(-1)
            artificial[n + i] = True
        elif kind == "eq":
            artificial[n + i] = True
        rows.append(row)
        rhs.append(s * b)
        sign.append(s)
    tab = _Tableau(rows, rhs, ncols)
    for i in range(m):
        tab.basis[i] = n + i
    if any(artificial):
        phase1 = [Fraction(1) if artificial[k] else Fraction(0) for k in range(ncols)]
        allowed = [True] * ncols
        tab.run(phase1, allowed)
        _, z = tab.reduced_costs(phase1)
        if z != 0:
            return LPResult(INFEASIBLE, exact=True)
        # drive remaining (zero-valued) artificials out of the basis
        for i in range(m):
            if artificial[tab.basis[i]]:
                for k in range(ncols):
                    if not artificial[k] and tab.rows[i][k] != 0:
                        tab.pivot(i, k)
                        break
    cost = c + [Fraction(0)] * (ncols - n)
    allowed = [not artificial[k] for k in range(ncols)]
    status = tab.run(cost, allowed)
    if status != OPTIMAL:
        return LPResult(status, exact=True)
    x = [Fraction(0)] * n
    for i, b in enumerate(tab.basis):
        if b < n:
            x[b] = tab.rhs[i]
    d, z = tab.reduced_costs(cost)
    # the identity column of row i has zero cost, so its reduced cost is -y_i
    y = [-d[n + i] * sign[i] for i in range(m)]
    n_ub = len(A_ub)
    return LPResult(OPTIMAL, x, z, y[:n_ub], y[n_ub:], exact=True)


def _solve_float(c, A_ub, b_ub, A_eq, b_eq):
    from scipy.optimize import linprog

    n = len(c)
    kw = {}
    if A_ub:
        kw["A_ub"] = np.asarray(A_ub, dtype=float).reshape(len(A_ub), n)
        kw["b_ub"] = np.asarray(b_ub, dtype=float)
    if A_eq:
        kw["A_eq"] = np.asarray(A_eq, dtype=float).reshape(len(A_eq), n)
        kw["b_eq"] = np.asarray(b_eq, dtype=float)
    res = linprog(np.asarray(c, dtype=float), bounds=(0, None), method="highs", **kw)
    if res.status == 2:
        return LPResult(INFEASIBLE, exact=False)
    if res.status == 3:
        return LPResult(UNBOUNDED, exact=False)
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    duals_ub = list(res.ineqlin.marginals) if A_ub else []
    duals_eq = list(res.eqlin.marginals) if A_eq else []
    return LPResult(OPTIMAL, list(res.x), float(res.fun), duals_ub, duals_eq, exact=False)


def _exact_pricing(c, A_ub, A_eq, y_ub, y_eq, cols):
    """Columns among ``cols`` with negative exact reduced cost."""
    bad = []
    for j in cols:
        d = _frac(c[j])
        for a, y in zip(A_ub, y_ub):
            if a[j] and y:
                d -= y * _frac(a[j])
        for a, y in zip(A_eq, y_eq):
            if a[j] and y:
                d -= y * _frac(a[j])
        if d < 0:
            bad.append(j)
    return bad


def _solve_exact_colgen(c, A_ub, b_ub, A_eq, b_eq, max_rounds=50):
    """Exact optimum via restricted exact solves seeded by a float solve.

    Every returned optimum is certified by exact pricing of all columns.
    Falls back to the full exact simplex when the float solve is not
    conclusive.
    """
    n = len(c)
    fl = _solve_float(
        [float(v) for v in c], [[float(v) for v in a] for a in A_ub], [float(v) for v in b_ub],
        [[float(v) for v in a] for a in A_eq], [float(v) for v in b_eq],
    )
    if fl.status != OPTIMAL:
        return _solve_exact(c, A_ub, b_ub, A_eq, b_eq)
    # float reduced costs (scipy marginals share the sign convention used here)
    red = np.asarray(c, dtype=float).copy()
    if A_ub:
        red -= np.asarray(fl.duals_ub) @ np.asarray(A_ub, dtype=float)
    if A_eq:
        red -= np.asarray(fl.duals_eq) @ np.asarray(A_eq, dtype=float)
    scale = 1e-7 * max(1.0, float(np.abs(red).max()))
    cols = sorted(set(np.nonzero(np.asarray(fl.x) > 1e-12)[0]) | set(np.nonzero(red <= scale)[0]))
    for _ in range(max_rounds):
        sub = lambda rows: [[a[j] for j in cols] for a in rows]
        res = _solve_exact([c[j] for j in cols], sub(A_ub), b_ub, sub(A_eq), b_eq)
        if res.status != OPTIMAL:
            break
        colset = set(cols)
        rest = [j for j in range(n) if j not in colset]
        bad = _exact_pricing(c, A_ub, A_eq, res.duals_ub, res.duals_eq, rest)
        if not bad:
            x = [Fraction(0)] * n
            for j, v in zip(cols, res.x):
                x[j] = v
            return LPResult(OPTIMAL, x, res.objective, res.duals_ub, res.duals_eq, exact=True)
        cols = sorted(colset | set(bad))
    return _solve_exact(c, A_ub, b_ub, A_eq, b_eq)


COLGEN_MIN_COLUMNS = 40


def solve_lp(c, A_ub=(), b_ub=(), A_eq=(), b_eq=(), exact=True):
    A_ub, b_ub, A_eq, b_eq = list(A_ub), list(b_ub), list(A_eq), list(b_eq)
    if len(A_ub) != len(b_ub) or len(A_eq) != len(b_eq):
        raise ValueError("constraint matrix and right-hand side sizes differ")
    if exact:
        if len(c) >= COLGEN_MIN_COLUMNS:
            return _solve_exact_colgen(c, A_ub, b_ub, A_eq, b_eq)
        return _solve_exact(c, A_ub, b_ub, A_eq, b_eq)
    return _solve_float(c, A_ub, b_ub, A_eq, b_eq)


def solve_sparse_float(c, A_ub, b_ub, A_eq, b_eq, method="highs-ipm"):
    """HiGHS on scipy sparse matrices, for the large profile LPs.

    Interior point (with crossover) is far faster than simplex on these.
    """
    from scipy.optimize import linprog

    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method=method)
    if res.status == 2:
        return LPResult(INFEASIBLE, exact=False)
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return LPResult(OPTIMAL, res.x, float(res.fun), None, None, exact=False)
