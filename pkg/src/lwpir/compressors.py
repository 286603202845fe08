"""Finite-length lossy compressors for binary files.

Holds a fixed catalog of 4-bit compressors, a simulated-annealing search over
balanced maps, and a random-coding bound on average Hamming distortion.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from .ratedist import TradeoffCurve, lower_hull
from .source_coding import ResponseFunction, product_response

MAX_SA_BITS = 24


@dataclass(frozen=True)
class CompressorSpec:
    """A compressor on ``beta_in`` bits, as a partition or as a balanced map."""

    beta_in: int
    rate: object
    distortion: object
    response: ResponseFunction = None
    bins: tuple = None
    name: str = ""

    @property
    def point(self):
        return (self.rate, self.distortion)

    def to_json(self):
        out = {"name": self.name, "beta_in": self.beta_in, "rate": str(self.rate), "distortion": str(self.distortion)}
        if self.bins is not None:
            out["bins"] = list(self.bins)
        if self.response is not None:
            out["response"] = self.response.to_json()
        return out

    @classmethod
    def from_json(cls, obj):
        resp = ResponseFunction.from_json(obj["response"]) if "response" in obj else None
        bins = tuple(obj["bins"]) if "bins" in obj else None
        return cls(obj["beta_in"], Fraction(obj["rate"]), Fraction(obj["distortion"]), resp, bins, obj.get("name", ""))


# 4-bit catalog: merged sets with their reconstruction, everything else a singleton
_CATALOG = [
    ("compressor-1", [
        (["0000", "0001", "1001", "0101", "0011"], "0001"),
        (["1110", "1101", "1011", "0111", "1111"], "1111"),
    ], True),
    ("compressor-2", [
        (["0000", "0010", "1010", "0110", "0011"], "0010"),
        (["1000", "0001", "1001", "1101", "1011"], "1001"),
        (["0100", "1100", "1110"], "1100"),
        (["0101", "0111", "1111"], "0111"),
    ], False),
    ("compressor-3", [
        (["1100", "1010", "0110", "1110", "1111"], "1110"),
    ], "rest:0001"),
]


def _catalog_response(groups, rest, num_files=1, file_len=4):
    parts = [g for g, _ in groups]
    recs = [r for _, r in groups]
    listed = {s for g in parts for s in g}
    others = [format(i, "04b") for i in range(16) if format(i, "04b") not in listed]
    if rest is True:
        for s in others:
            parts.append([s])
            recs.append(s)
    elif isinstance(rest, str) and rest.startswith("rest:"):
        parts.append(others)
        recs.append(rest[5:])
    elif others:
        raise ValueError("catalog entry does not cover all inputs")
    split = lambda r: tuple(r[m * file_len:(m + 1) * file_len] for m in range(num_files))
    return ResponseFunction.from_strings(parts, 2, num_files, file_len, reconstructions=[split(r) for r in recs])


def catalog(num_files=1):
    """The five 4-bit compressors.

    With ``num_files=2`` the same maps act on two 2-bit files (first two bits
    are file one), giving responses for the two-file, length-two model.
    """
    if num_files not in (1, 2):
        raise ValueError("catalog inputs are 4 bits: one file of 4 or two files of 2")
    b = 4 // num_files
    out = []
    for name, groups, rest in _CATALOG:
        rf = _catalog_response(groups, rest, num_files, b)
        out.append(_spec_from_response(rf, name))
    out.append(_spec_from_response(ResponseFunction.identity(2, num_files, b), "no-distortion"))
    out.append(_spec_from_response(ResponseFunction.trivial(2, num_files, b), "random-guess"))
    return out


def _spec_from_response(rf, name):
    D = sum(rf.distortions, Fraction(0)) / rf.num_files
    return CompressorSpec(rf.num_symbols, rf.rate * rf.file_len / rf.num_symbols, D, rf, None, name)


def two_file_pool():
    """Catalog maps on two 2-bit files plus per-file lossless/guess products."""
    pool = [c.response for c in catalog(num_files=2)]
    ident = ResponseFunction.identity(2, 1, 2)
    guess = ResponseFunction.trivial(2, 1, 2)
    pool.append(product_response([ident, guess], 2))
    pool.append(product_response([guess, ident], 2))
    return pool


# balanced maps

def balanced_distortion_counts(bins, beta_in, n_bins):
    """Total bit errors of ML reconstruction, per bin and bit position."""
    bins = np.asarray(bins, dtype=np.int64)
    x = np.arange(1 << beta_in, dtype=np.int64)
    total = 0
    for i in range(beta_in):
        bit = (x >> (beta_in - 1 - i)) & 1
        ones = np.bincount(bins, weights=bit, minlength=n_bins).astype(np.int64)
        size = np.bincount(bins, minlength=n_bins).astype(np.int64)
        total += int(np.minimum(ones, size - ones).sum())
    return total


def balanced_distortion(bins, beta_in, n_bins):
    return Fraction(balanced_distortion_counts(bins, beta_in, n_bins), beta_in << beta_in)


def balanced_map_response(bins, beta_in):
    n_bins = max(bins) + 1
    parts = [[] for _ in range(n_bins)]
    for x, b in enumerate(bins):
        parts[b].append(x)
    return ResponseFunction.from_partition(parts, 2, 1, beta_in)


def is_balanced(bins, n_bins):
    counts = np.bincount(np.asarray(bins), minlength=n_bins)
    return len(counts) == n_bins and bool((counts == counts[0]).all())


def exhaustive_two_bin_optimum(beta_in):
    """Smallest distortion over all balanced 2-bin maps (small inputs only)."""
    N = 1 << beta_in
    if N > 16:
        raise ValueError("exhaustive search only for inputs of at most 4 bits")
    best = None
    for first in itertools.combinations(range(1, N), N // 2 - 1):
        bins = [1] * N
        for x in (0,) + first:
            bins[x] = 0
        c = balanced_distortion_counts(bins, beta_in, 2)
        best = c if best is None else min(best, c)
    return Fraction(best, beta_in * N)


@njit(cache=True)
def _xorshift(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * np.uint64(2685821657736338717)


@njit(cache=True)
def _uniform(state):
    return (_xorshift(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _randint(state, n):
    return np.int64(_xorshift(state) % np.uint64(n))


@njit(cache=True)
def _cost_from_ones(ones, size):
    c = 0
    for b in range(ones.shape[0]):
        for i in range(ones.shape[1]):
            o = ones[b, i]
            c += min(o, size - o)
    return c


@njit(cache=True)
def _ones_from_bins(bins, n_bins, beta):
    ones = np.zeros((n_bins, beta), dtype=np.int64)
    for x in range(bins.shape[0]):
        b = bins[x]
        for i in range(beta):
            ones[b, i] += (x >> (beta - 1 - i)) & 1
    return ones


@njit(cache=True)
def _sa_kernel(bins, beta, n_bins, iters, t0, t_end, seed, check_every, full_check, local_frac):
    N = bins.shape[0]
    size = N // n_bins
    ones = _ones_from_bins(bins, n_bins, beta)
    cost = _cost_from_ones(ones, size)
    best = bins.copy()
    best_cost = cost
    last_snap = 0
    state = np.zeros(1, dtype=np.uint64)
    state[0] = np.uint64(seed) | np.uint64(1)
    for _ in range(8):
        _xorshift(state)
    decay = (t_end / t0) ** (1.0 / max(iters, 1))
    T = t0
    drift = 0
    snap_gap = max(N // 4, 1)
    for it in range(iters):
        x = _randint(state, N)
        if _uniform(state) < local_frac:
            # partner differs from x in one to three random bits
            y = x
            nflip = 1 + _randint(state, 3)
            for _f in range(nflip):
                y ^= np.int64(1) << _randint(state, beta)
        else:
            y = _randint(state, N)
        a = bins[x]
        b = bins[y]
        if a == b:
            T *= decay
            continue
        delta = 0
        for i in range(beta):
            xi = (x >> (beta - 1 - i)) & 1
            yi = (y >> (beta - 1 - i)) & 1
            if xi != yi:
                oa = ones[a, i]
                ob = ones[b, i]
                na = oa + yi - xi
                nb = ob + xi - yi
                delta += min(na, size - na) - min(oa, size - oa) + min(nb, size - nb) - min(ob, size - ob)
        accept = delta <= 0
        if not accept and T > 0:
            accept = _uniform(state) < math.exp(-delta / T)
        if accept:
            for i in range(beta):
                xi = (x >> (beta - 1 - i)) & 1
                yi = (y >> (beta - 1 - i)) & 1
                if xi != yi:
                    ones[a, i] += yi - xi
                    ones[b, i] += xi - yi
            bins[x] = b
            bins[y] = a
            cost += delta
            if cost < best_cost and (it - last_snap >= snap_gap or cost == 0):
                best[:] = bins
                best_cost = cost
                last_snap = it
        T *= decay
        if check_every > 0 and (it + 1) % check_every == 0:
            if full_check:
                ref = _ones_from_bins(bins, n_bins, beta)
                for bb in range(n_bins):
                    for i in range(beta):
                        if ref[bb, i] != ones[bb, i]:
                            drift += 1
            if _cost_from_ones(ones, size) != cost:
                drift += 1
    if cost <= best_cost:
        best[:] = bins
        best_cost = cost
    return best, best_cost, drift


def _initial_bins(beta_in, n_bins, init, rng):
    N = 1 << beta_in
    size = N // n_bins
    if init == "truncate":
        return (np.arange(N, dtype=np.int64) // size).astype(np.int64)
    bins = np.repeat(np.arange(n_bins, dtype=np.int64), size)
    rng.shuffle(bins)
    return bins


@dataclass
class SearchResult:
    spec: CompressorSpec
    best_costs: list
    drift: int
    restart: int


def sa_search(beta_in, R, iterations=200_000, restarts=32, seed=0, t0=2.0, t_end_ratio=1e-4,
              init="random", check_every=10_000, full_check=False, local_frac=0.9):
    """Simulated annealing over balanced maps of ``beta_in`` bits into 2^(beta_in R) bins.

    A move swaps two inputs from different bins.  With probability
    ``local_frac`` the partner is the first input with one to three bits
    flipped, otherwise uniform.  A move raising the bit-error count by delta
    passes with probability exp(-delta/T), T cooling geometrically from ``t0``
    to ``t_end_ratio * t0`` (both in bit errors).  Restarts use seeds derived
    from ``seed``; ties go to the lowest restart index.
    """
    if not 1 <= beta_in <= MAX_SA_BITS:
        raise ValueError(f"beta_in must lie in [1, {MAX_SA_BITS}]")
    k = Fraction(R) * beta_in
    if k.denominator != 1 or not 0 <= k <= beta_in:
        raise ValueError("beta_in * R must be an integer number of output bits")
    k = int(k)
    n_bins = 1 << k
    seeds = np.random.SeedSequence(seed).generate_state(restarts, dtype=np.uint64)
    best = None
    history = []
    drift_total = 0
    for r in range(restarts):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seeds[r]))))
        bins = _initial_bins(beta_in, n_bins, init, rng)
        if n_bins == 1 or n_bins == (1 << beta_in):
            out, cost, drift = bins, balanced_distortion_counts(bins, beta_in, n_bins), 0
        else:
            out, cost, drift = _sa_kernel(bins, beta_in, n_bins, iterations, float(t0), float(t0) * t_end_ratio,
                                          int(seeds[r]) & ((1 << 63) - 1), check_every, full_check,
                                          float(local_frac))
        drift_total += drift
        if best is None or cost < best[1]:
            best = (out.copy(), int(cost), r)
        history.append(best[1])
    bins, cost, r = best
    exact = balanced_distortion_counts(bins, beta_in, n_bins)
    if exact != cost:
        drift_total += 1
    spec = CompressorSpec(beta_in, Fraction(k, beta_in), Fraction(exact, beta_in << beta_in), None,
                          tuple(int(v) for v in bins), f"sa-{beta_in}-{k}")
    return SearchResult(spec, [Fraction(c, beta_in << beta_in) for c in history], drift_total, r)


# random-coding bound

def kv_average_distortion(beta_in, R):
    """Expected distortion of the best of 2^(beta_in R) uniform random codewords.

    Sums P(min distance > k) over k; each term (1 - S_k / 2^n)^(2^(nR)) is
    evaluated in the log domain with exact binomial tail sums.
    """
    if beta_in < 1:
        raise ValueError("beta_in must be positive")
    if R < 0:
        raise ValueError("rate must be nonnegative")
    n = int(beta_in)
    codewords = 2.0 ** (n * float(R))
    total = 2 ** n
    S = 0
    acc = 0.0
    for k in range(n):
        S += math.comb(n, k)
        tail = total - S
        x = S / total
        if x <= 0.5:
            lg = math.log1p(-x)
        else:
            lg = math.log(tail / total)
        acc += math.exp(codewords * lg)
    return acc / n


def kv_rate_grid(beta_in, points=50):
    return [i / (points - 1) for i in range(points)]


def kv_wpir_lc_curve(M, beta, N_values, R_grid):
    """Subset-request curves with random-code compression of the N requested files.

    For subset size N and per-symbol rate r the N files are coded jointly:
    distortion is the bound at N*beta bits and the download rate is N*r.
    Returns {N: TradeoffCurve} with leakage 1/N.
    """
    out = {}
    for N in N_values:
        if not 1 <= N <= M:
            raise ValueError("subset size must lie in [1, M]")
        pts = [(kv_average_distortion(N * beta, r), N * r) for r in R_grid]
        pts.append((0.5, 0.0))
        hull = lower_hull(pts)
        # keep the nonincreasing part of the hull
        trimmed = []
        for d, r in hull:
            if trimmed and r > trimmed[-1][1]:
                break
            trimmed.append((d, r))
        out[N] = TradeoffCurve(tuple(trimmed), Fraction(1, N), f"kv-N{N}")
    return out


def catalog_json(specs):
    return json.dumps([s.to_json() for s in specs], indent=1)
