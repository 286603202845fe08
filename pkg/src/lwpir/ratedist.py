"""Rate-distortion curves for uniform sources under Hamming distortion.

Two closed-form families are supported (binary and K-ary) together with a
piecewise-linear container.  Rates are in bits per symbol.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

BINARY = "binary-hamming"
KARY = "kary-hamming"
PWL = "piecewise-linear"

FLOAT_TOL = 1e-9


class DomainError(ValueError):
    pass


class UnsupportedCurveError(TypeError):
    pass


def binary_entropy(p):
    """Hb(p) in bits, with Hb(0) = Hb(1) = 0."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class RateDistortionCurve:
    kind: str
    K: int = 2
    breakpoints: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in (BINARY, KARY, PWL):
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.kind == BINARY and self.K != 2:
            raise ValueError("binary curve has K = 2")
        if self.kind == KARY and self.K < 2:
            raise ValueError("K must be at least 2")
        if self.kind == PWL:
            bps = tuple((d, r) for d, r in self.breakpoints)
            if len(bps) < 2:
                raise ValueError("a piecewise-linear curve needs at least two breakpoints")
            for (d0, _), (d1, _) in zip(bps, bps[1:]):
                if not d1 > d0:
                    raise ValueError("breakpoints must be strictly increasing in D")
            object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def binary(cls):
        return cls(BINARY, 2)

    @classmethod
    def kary(cls, K):
        return cls(KARY, int(K))

    @classmethod
    def piecewise_linear(cls, breakpoints, K=2):
        return cls(PWL, K, tuple(breakpoints))

    @property
    def is_analytic(self):
        return self.kind != PWL

    @property
    def is_exact(self):
        """True when every breakpoint coordinate is a Fraction or int."""
        return self.kind == PWL and all(
            isinstance(v, (int, Fraction)) for bp in self.breakpoints for v in bp
        )

    @property
    def d_max(self):
        if self.kind == PWL:
            return self.breakpoints[-1][0]
        return 1.0 - 1.0 / self.K

    @property
    def grid(self):
        return [d for d, _ in self.breakpoints]

    @property
    def values(self):
        return [r for _, r in self.breakpoints]

    def __call__(self, D):
        return eval_rd(self, D)

    def to_json(self):
        out = {"kind": self.kind, "K": self.K}
        if self.kind == PWL:
            out["breakpoints"] = [[_num_to_json(d), _num_to_json(r)] for d, r in self.breakpoints]
        else:
            out["breakpoints"] = []
        return out

    @classmethod
    def from_json(cls, obj):
        kind = obj["kind"]
        bps = tuple((_num_from_json(d), _num_from_json(r)) for d, r in obj.get("breakpoints", []))
        return cls(kind, int(obj.get("K", 2)), bps)


def _num_to_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return v


def _num_from_json(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


def _check_domain(curve, D):
    dmax = curve.d_max
    tol = 0 if isinstance(D, Fraction) and curve.is_exact else FLOAT_TOL
    if D < -tol or D > dmax + tol:
        raise DomainError(f"distortion {D} outside [0, {dmax}]")


def eval_rd(curve: RateDistortionCurve, D):
    _check_domain(curve, D)
    if curve.kind == PWL:
        return _eval_pwl(curve.breakpoints, D)
    D = min(max(float(D), 0.0), curve.d_max)
    if curve.kind == BINARY:
        return max(0.0, 1.0 - binary_entropy(D))
    K = curve.K
    if D >= curve.d_max:
        return 0.0
    val = math.log2(K) - binary_entropy(D) - (D * math.log2(K - 1) if K > 2 else 0.0)
    return max(0.0, val)


def _eval_pwl(bps, D):
    ds = [d for d, _ in bps]
    if D <= ds[0]:
        return bps[0][1]
    if D >= ds[-1]:
        return bps[-1][1]
    i = bisect.bisect_right(ds, D) - 1
    (d0, r0), (d1, r1) = bps[i], bps[i + 1]
    if D == d0:
        return r0
    return r0 + (r1 - r0) * (D - d0) / (d1 - d0)


def rd_derivative(curve: RateDistortionCurve, D):
    """Slope of the analytic curve at an interior distortion."""
    if curve.kind == PWL:
        raise UnsupportedCurveError("derivative is only defined for analytic curves")
    D = float(D)
    if not 0.0 < D < curve.d_max:
        raise DomainError(f"derivative needs 0 < D < {curve.d_max}, got {D}")
    slope = math.log2(D / (1.0 - D))
    if curve.kind == KARY and curve.K > 2:
        slope -= math.log2(curve.K - 1)
    return slope


def rd_derivative_inverse(curve: RateDistortionCurve, slope):
    """Distortion at which the analytic curve has the given slope (< 0)."""
    if curve.kind == PWL:
        raise UnsupportedCurveError("inverse derivative is only defined for analytic curves")
    if slope >= 0:
        return curve.d_max
    c = 1.0 if curve.kind == BINARY else float(curve.K - 1)
    # D / (1 - D) = c * 2**slope
    t = c * 2.0 ** slope
    return t / (1.0 + t)


def rd_inverse(curve: RateDistortionCurve, rate):
    """Smallest distortion whose rate does not exceed ``rate``."""
    rate = float(rate)
    if rate >= eval_rd(curve, 0):
        return 0.0
    if rate <= 0:
        return float(curve.d_max)
    lo, hi = 0.0, float(curve.d_max)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if eval_rd(curve, mid) > rate:
            lo = mid
        else:
            hi = mid
    return hi


def uniform_grid(curve, s=201, exact=False):
    dmax = Fraction(1, 2) if curve.kind == BINARY else Fraction(curve.K - 1, curve.K)
    if curve.kind == PWL:
        dmax = curve.d_max
    if exact:
        dmax = Fraction(dmax)
        return [dmax * i / (s - 1) for i in range(s)]
    return [float(dmax) * i / (s - 1) for i in range(s)]


def pwl_approximate(curve: RateDistortionCurve, grid: Sequence, exact=False):
    """Chord interpolation through the curve on ``grid``.

    Returns ``(pwl_curve, error_bound)``.  For analytic curves the bound is the
    largest chord-to-curve gap, located per segment at the tangent point where
    the curve slope equals the chord slope.  With ``exact=True`` the breakpoint
    rates are stored as the exact rationals of their float values.
    """
    grid = list(grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be strictly increasing")
    if abs(grid[0]) > FLOAT_TOL or abs(grid[-1] - curve.d_max) > FLOAT_TOL:
        raise DomainError("grid must cover [0, D_max] including both endpoints")
    if curve.kind == PWL:
        bps = [(d, eval_rd(curve, d)) for d in grid]
        out = RateDistortionCurve.piecewise_linear(bps, K=curve.K)
        err = 0.0
        for d, r in curve.breakpoints:
            err = max(err, float(abs(eval_rd(out, d) - r)))
        return out, err
    vals = [eval_rd(curve, d) for d in grid]
    if exact:
        bps = [(Fraction(d), Fraction(v)) for d, v in zip(grid, vals)]
    else:
        bps = [(float(d), v) for d, v in zip(grid, vals)]
    err = 0.0
    for (d0, r0), (d1, r1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        d0, d1 = float(d0), float(d1)
        slope = (r1 - r0) / (d1 - d0)
        dt = min(max(rd_derivative_inverse(curve, slope), d0), d1)
        gap = r0 + slope * (dt - d0) - eval_rd(curve, dt)
        err = max(err, gap)
    return RateDistortionCurve.piecewise_linear(bps, K=curve.K), err


@dataclass(frozen=True)
class TradeoffCurve:
    """Piecewise-linear rate versus distortion at a fixed leakage."""

    points: tuple
    leakage: object = None
    label: str = ""
    gaps: tuple = ()

    def __post_init__(self):
        pts = tuple(sorted(((d, r) for d, r in self.points), key=lambda p: p[0]))
        object.__setattr__(self, "points", pts)

    @property
    def distortions(self):
        return [d for d, _ in self.points]

    @property
    def rates(self):
        return [r for _, r in self.points]

    def __call__(self, D):
        return _eval_pwl(self.points, D)

    def as_rd_curve(self):
        return RateDistortionCurve.piecewise_linear(self.points)

    @classmethod
    def from_function(cls, f, grid, leakage=None, label=""):
        return cls(tuple((d, f(d)) for d in grid), leakage, label)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(points: Iterable):
    """Lower convex hull of 2-D points, sorted by the first coordinate."""
    pts = sorted(set((p[0], p[1]) for p in points))
    # keep the lowest value at each abscissa
    dedup = []
    for p in pts:
        if dedup and dedup[-1][0] == p[0]:
            continue
        dedup.append(p)
    hull = []
    for p in dedup:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def lower_convex_envelope(curves: Sequence[TradeoffCurve], label="envelope", tol=FLOAT_TOL):
    """Greatest convex function below the pointwise minimum of the curves.

    For piecewise-linear inputs this is the lower hull of the union of all
    breakpoints, since each segment lies in the hull of its endpoints.
    """
    if not curves:
        raise ValueError("need at least one curve")
    lo = curves[0].points[0][0]
    hi = curves[0].points[-1][0]
    for c in curves[1:]:
        if abs(c.points[0][0] - lo) > tol or abs(c.points[-1][0] - hi) > tol:
            raise DomainError("curves are defined on different distortion intervals")
    hull = lower_hull(p for c in curves for p in c.points)
    leak = curves[0].leakage
    return TradeoffCurve(tuple(hull), leak, label)


def is_convex_nonincreasing(points, tol=FLOAT_TOL):
    pts = sorted(points)
    for (d0, r0), (d1, r1) in zip(pts, pts[1:]):
        if r1 > r0 + tol:
            return False
    for a, b, c in zip(pts, pts[1:], pts[2:]):
        if _cross(a, b, c) < -tol * max(1.0, float(c[0] - a[0])):
            return False
    return True
