"""Curve bundles for the two comparison plots.

fig1: asymptotic rates of two-subset requests versus a mixed-subset query
distribution for a 64-ary source.  fig2: finite-length schemes for 16 binary
files of 20 bits against asymptotic references at three leakage levels.
"""
from __future__ import annotations

from fractions import Fraction

from .asymptotic import asymptotic_curve, mixed_subset_curves, symmetric_family_solve
from .compressors import catalog, kv_wpir_lc_curve, two_file_pool
from .lp_core import build_and_solve_lp, scheme_from_solution
from .ratedist import RateDistortionCurve, TradeoffCurve, lower_hull, pwl_approximate, uniform_grid
from .schemes import block_split, evaluate, file_subset_compose, reencode_joint


def fig1(K=64, s=201):
    return mixed_subset_curves(K, s)


def _hull_curve(points, leakage, label):
    hull = lower_hull(points)
    return TradeoffCurve(tuple(hull), leakage, label)


def composed_point(D, L, M, beta):
    """Rate of the small-scheme construction at (D, L), or None if unreachable.

    Leakage in [1/M, 2/M]: optimal two-file scheme on 2-bit files, split into
    beta/2 blocks, jointly re-encoded, repeated over M/2 file pairs.  Leakage
    1: optimal single-file scheme on 4-bit blocks, re-encoded, for the
    requested file only.
    """
    L = Fraction(L)
    if L == 1:
        pool = [c.response for c in catalog(1)]
        sol = build_and_solve_lp(pool, 1, Fraction(D), Fraction(1))
        if not sol.ok or beta % 4:
            return None
        s = scheme_from_solution(pool, sol)
        s = reencode_joint(block_split(s, beta // 4), cap=None)
        return evaluate(s).rate
    if M % 2 or beta % 2:
        return None
    G = M // 2
    L0 = L * G
    if not Fraction(1, 2) <= L0 <= 1:
        return None
    pool = two_file_pool()
    sol = build_and_solve_lp(pool, 2, Fraction(D), L0)
    if not sol.ok:
        return None
    s = scheme_from_solution(pool, sol)
    s = reencode_joint(block_split(s, beta // 2), cap=None)
    s = file_subset_compose(s, G)
    return evaluate(s).rate


def sa_pool_curve(specs):
    """PWL per-file curve from searched compressors (lower hull of their points)."""
    pts = [(float(c.distortion), float(c.rate)) for c in specs]
    if not any(d == 0 for d, _ in pts):
        raise ValueError("compressor pool needs a lossless entry")
    hull = lower_hull(pts)
    # only the nonincreasing part is useful; extend to D = 1/2 with zero rate
    out = []
    for d, r in hull:
        if out and r > out[-1][1]:
            break
        out.append((d, r))
    if out[-1][0] < 0.5:
        out.append((0.5, 0.0))
    return RateDistortionCurve.piecewise_linear(out)


def fig2(D_grid, sa_specs=None, M=16, beta=20, leakages=(Fraction(1, 16), Fraction(1, 8), Fraction(1)),
         kv_points=51):
    """All curves of the finite-length comparison, keyed by (kind, leakage)."""
    binary = RateDistortionCurve.binary()
    out = {}
    kv_grid = [i / (kv_points - 1) for i in range(kv_points)]
    for L in leakages:
        ref, _ = asymptotic_curve(M, binary, L, [float(d) for d in D_grid], label=f"asymptotic L={L}")
        out[("asymptotic", L)] = ref
        N = Fraction(1) / Fraction(L)
        if N.denominator == 1:
            kv = kv_wpir_lc_curve(M, beta, [int(N)], kv_grid)[int(N)]
            out[("kv", L)] = TradeoffCurve(kv.points, L, f"kv L={L}")
        rep = []
        for D in D_grid:
            r = composed_point(D, L, M, beta)
            if r is not None:
                rep.append((Fraction(D), r))
        if rep:
            out[("rep", L)] = _hull_curve(rep, L, f"rep L={L}")
        if sa_specs:
            pw = sa_pool_curve(sa_specs)
            pts = []
            for D in D_grid:
                sol = symmetric_family_solve(M, pw, float(L), float(D))
                if sol.ok:
                    pts.append((float(D), sol.rate))
            out[("rnd", L)] = TradeoffCurve(tuple(pts), L, f"rnd L={L}")
    return out


def ordering_violations(curves, M=16, tol=1e-9, s=201):
    """(kind, L, D, finite, asymptotic) wherever a finite curve dips below the reference.

    The reference is solved at each finite-curve distortion rather than
    interpolated from its grid, which would overstate a convex curve.  For
    intermediate leakage it comes from the PWL curve, so it is lowered by the
    PWL error bound M * eps to stay a valid lower bound.
    """
    binary = RateDistortionCurve.binary()
    pw, eps = pwl_approximate(binary, uniform_grid(binary, s))
    bad = []
    for (kind, L), c in curves.items():
        if kind == "asymptotic":
            continue
        for d, r in c.points:
            d = float(d)
            a = _reference_value(L, d, binary, pw, eps, M)
            if float(r) < a - tol:
                bad.append((kind, L, d, float(r), a))
    return bad


def _reference_value(L, D, curve, pw, eps, M):
    if L == 1:
        return curve(D)
    if L == Fraction(1, M):
        return M * curve(D)
    return symmetric_family_solve(M, pw, float(L), D).rate - M * eps
