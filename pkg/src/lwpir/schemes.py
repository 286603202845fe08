"""Schemes: a query distribution plus one response per query.

Responses are either flat partitions (``ResponseFunction``) or products of
small partitions acting on disjoint database coordinates
(``ProductResponse``).  The product form keeps long files and many files
tractable; its answer is the tuple of unit answers, Huffman coded in groups.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .lp_core import QueryDistribution, leakage
from .source_coding import (
    ResponseFunction,
    file_permutation_coords,
    huffman_average_length,
    huffman_average_length_counts,
    huffman_lengths,
    permute_coordinates,
    state_to_digits,
)

JOINT_CAP = 2 ** 20
FULL_GROUP_MAX_FILES = 5


def _is_exact(v):
    return isinstance(v, (int, Fraction))


@dataclass(frozen=True)
class Unit:
    """A small response applied to selected global coordinates.

    Local digit i of ``response`` reads global digit ``coords[i]``; global
    digits are numbered file-major, ``m * file_len + position``.
    """

    response: ResponseFunction
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        if len(self.coords) != self.response.num_symbols:
            raise ValueError("unit needs one coordinate per local digit")


def _product_counts(pmfs):
    """Product pmf as {probability: multiplicity}."""
    out = {Fraction(1): 1}
    for p in pmfs:
        local = {}
        for v in p:
            local[v] = local.get(v, 0) + 1
        nxt = {}
        for a, ca in out.items():
            for b, cb in local.items():
                nxt[a * b] = nxt.get(a * b, 0) + ca * cb
        out = nxt
    return out


def _product_pmf(pmfs, cap=JOINT_CAP):
    size = 1
    for p in pmfs:
        size *= len(p)
    if size > cap:
        raise OverflowError(f"joint answer alphabet of {size} symbols exceeds the cap of {cap}")
    out = [Fraction(1)]
    for p in pmfs:
        out = [a * b for a in out for b in p]
    return out


@dataclass(frozen=True)
class ProductResponse:
    alphabet_size: int
    num_files: int
    file_len: int
    units: tuple
    groups: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        if self.groups is None:
            object.__setattr__(self, "groups", tuple((i,) for i in range(len(self.units))))
        else:
            object.__setattr__(self, "groups", tuple(tuple(g) for g in self.groups))
        n = self.num_files * self.file_len
        seen = [c for u in self.units for c in u.coords]
        if sorted(seen) != list(range(n)):
            raise ValueError("units must cover every database coordinate exactly once")
        for u in self.units:
            if u.response.alphabet_size != self.alphabet_size:
                raise ValueError("unit alphabet differs")
        flat = sorted(i for g in self.groups for i in g)
        if flat != list(range(len(self.units))):
            raise ValueError("coding groups must partition the units")

    @property
    def num_symbols(self):
        return self.num_files * self.file_len

    def group_pmf(self, g):
        return _product_pmf([self.units[i].response.part_pmf for i in self.groups[g]])

    @cached_property
    def rate(self):
        total = Fraction(0)
        for g, members in enumerate(self.groups):
            if len(members) == 1:
                total += Fraction(huffman_average_length(self.units[members[0]].response.part_pmf))
            else:
                pmfs = [self.units[i].response.part_pmf for i in members]
                total += Fraction(huffman_average_length_counts(_product_counts(pmfs)))
        return total / self.file_len

    @cached_property
    def distortions(self):
        B = self.file_len
        err = [Fraction(0)] * self.num_files
        for u in self.units:
            r = u.response
            pos = r.position_errors
            for i, c in enumerate(u.coords):
                err[c // B] += pos[i // r.file_len][i % r.file_len]
        return tuple(e / B for e in err)

    @property
    def point(self):
        return (self.rate,) + tuple(self.distortions)

    def group_code_lengths(self, g):
        members = self.groups[g]
        if len(members) == 1:
            return self.units[members[0]].response.code_lengths
        return tuple(huffman_lengths(self.group_pmf(g))[0])

    def remap(self, coord_map, num_files=None, file_len=None):
        """Same units on relabeled coordinates."""
        units = tuple(Unit(u.response, tuple(coord_map[c] for c in u.coords)) for u in self.units)
        return ProductResponse(
            self.alphabet_size, num_files or self.num_files, file_len or self.file_len, units, self.groups
        )

    def to_flat(self, cap=2 ** 16):
        """Equivalent flat response (all units coded jointly); small cases only."""
        q, n = self.alphabet_size, self.num_symbols
        if q ** n > cap:
            raise OverflowError("database space too large to flatten")
        part_of, recs = {}, {}
        for s in range(q ** n):
            d = state_to_digits(s, q, n)
            key = []
            rec = [0] * n
            for u in self.units:
                local = [d[c] for c in u.coords]
                ls = 0
                for v in local:
                    ls = ls * q + v
                pi = u.response.part_of[ls]
                key.append(pi)
                flat = [v for f in u.response.reconstructions[pi] for v in f]
                for i, c in enumerate(u.coords):
                    rec[c] = flat[i]
            part_of.setdefault(tuple(key), []).append(s)
            recs[tuple(key)] = tuple(tuple(rec[m * self.file_len:(m + 1) * self.file_len]) for m in range(self.num_files))
        keys = list(part_of)
        return ResponseFunction(q, self.num_files, self.file_len, tuple(part_of[k] for k in keys), tuple(recs[k] for k in keys))

    def to_json(self):
        return {
            "alphabet_size": self.alphabet_size,
            "num_files": self.num_files,
            "file_len": self.file_len,
            "product": {
                "units": [{"coords": list(u.coords), "response": u.response.to_json()} for u in self.units],
                "coding_groups": [list(g) for g in self.groups],
            },
        }

    @classmethod
    def from_json(cls, obj):
        pr = obj["product"]
        units = tuple(Unit(ResponseFunction.from_json(u["response"]), tuple(u["coords"])) for u in pr["units"])
        return cls(obj["alphabet_size"], obj["num_files"], obj["file_len"], units,
                   tuple(tuple(g) for g in pr["coding_groups"]))


def as_product(resp):
    if isinstance(resp, ProductResponse):
        return resp
    return ProductResponse(
        resp.alphabet_size, resp.num_files, resp.file_len,
        (Unit(resp, tuple(range(resp.num_symbols))),),
    )


def response_from_json(obj):
    if "product" in obj:
        return ProductResponse.from_json(obj)
    return ResponseFunction.from_json(obj)


@dataclass(frozen=True)
class EvalReport:
    rate: object
    distortion: object
    per_file_distortion: tuple
    leakage: object
    stderr: dict = field(default_factory=dict)
    trials: int = 0

    def as_dict(self):
        f = lambda v: str(v) if isinstance(v, Fraction) else float(v)
        out = {
            "rate": f(self.rate),
            "distortion": f(self.distortion),
            "per_file_distortion": [f(v) for v in self.per_file_distortion],
            "leakage": f(self.leakage),
        }
        if self.trials:
            out["trials"] = self.trials
            out["stderr"] = {k: float(v) for k, v in self.stderr.items()}
        return out


@dataclass(frozen=True)
class Scheme:
    alphabet_size: int
    M: int
    file_len: int
    query_dist: QueryDistribution
    responses: tuple

    def __post_init__(self):
        object.__setattr__(self, "responses", tuple(self.responses))
        if len(self.responses) != self.query_dist.num_queries:
            raise ValueError("one response per query is required")
        if self.query_dist.M != self.M:
            raise ValueError("query distribution has the wrong number of files")
        for r in self.responses:
            if (r.alphabet_size, r.num_files, r.file_len) != (self.alphabet_size, self.M, self.file_len):
                raise ValueError("response dimensions do not match the scheme")

    @property
    def queries(self):
        return self.query_dist.queries

    def to_json(self):
        qs = []
        P = self.query_dist
        for j, (qid, r) in enumerate(zip(P.queries, self.responses)):
            qs.append({
                "id": _id_to_json(qid),
                "p_given_m": [_num_json(P.P[m][j]) for m in range(self.M)],
                "response": r.to_json(),
            })
        return {"alphabet_size": self.alphabet_size, "num_files": self.M, "file_len": self.file_len, "queries": qs}

    @classmethod
    def from_json(cls, obj):
        qs = obj["queries"]
        M = obj["num_files"]
        rows = [tuple(_num_parse(q["p_given_m"][m]) for q in qs) for m in range(M)]
        ids = tuple(_id_from_json(q["id"]) for q in qs)
        responses = tuple(response_from_json(q["response"]) for q in qs)
        return cls(obj["alphabet_size"], M, obj["file_len"], QueryDistribution(tuple(rows), ids), responses)

    def dumps(self):
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))


def _num_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return v


def _num_parse(v):
    return Fraction(v) if isinstance(v, str) else v


def _id_to_json(qid):
    if isinstance(qid, tuple):
        return [_id_to_json(v) for v in qid]
    return qid


def _id_from_json(v):
    if isinstance(v, list):
        return tuple(_id_from_json(x) for x in v)
    return v


def single_query_scheme(response):
    P = QueryDistribution(tuple((Fraction(1),) for _ in range(response.num_files)))
    return Scheme(response.alphabet_size, response.num_files, response.file_len, P, (response,))


def evaluate(scheme: Scheme) -> EvalReport:
    """Exact rate, per-file distortion and leakage of a scheme."""
    P = scheme.query_dist
    M = scheme.M
    exact = P.exact
    zero = Fraction(0) if exact else 0.0
    pq = P.marginal()
    rate = zero
    per_file = [zero] * M
    for j, r in enumerate(scheme.responses):
        if pq[j] == 0:
            continue
        rate += pq[j] * r.rate
        dist = r.distortions
        for m in range(M):
            if P.P[m][j]:
                per_file[m] += P.P[m][j] * dist[m]
    D = sum(per_file, zero) / M
    return EvalReport(rate, D, tuple(per_file), leakage(P))


# composition

def block_split(scheme: Scheme, t: int) -> Scheme:
    """Apply every response independently to t consecutive blocks of each file."""
    if t < 1:
        raise ValueError("t must be at least 1")
    if t == 1:
        return scheme
    b, M = scheme.file_len, scheme.M
    B = t * b
    out = []
    for r in scheme.responses:
        pr = as_product(r)
        units, groups = [], []
        for k in range(t):
            # old coordinate f*b + p lands on f*B + k*b + p
            cmap = {f * b + p: f * B + k * b + p for f in range(M) for p in range(b)}
            base = len(units)
            units.extend(Unit(u.response, tuple(cmap[c] for c in u.coords)) for u in pr.units)
            groups.extend(tuple(base + i for i in g) for g in pr.groups)
        out.append(ProductResponse(scheme.alphabet_size, M, B, tuple(units), tuple(groups)))
    return Scheme(scheme.alphabet_size, M, B, scheme.query_dist, tuple(out))


def reencode_joint(scheme: Scheme, group_count=None, cap=JOINT_CAP) -> Scheme:
    """Huffman code the answers of several coding groups together.

    Consecutive groups are merged ``group_count`` at a time (all of them by
    default).  Distortion and leakage are untouched; the rate cannot grow.
    ``cap`` bounds the joint answer alphabet (None lifts it; the rate is still
    exact, but explicit code tables for simulation are then unavailable).
    """
    out = []
    for r in scheme.responses:
        if not isinstance(r, ProductResponse):
            out.append(r)
            continue
        k = group_count or len(r.groups)
        merged = []
        for i in range(0, len(r.groups), k):
            merged.append(tuple(u for g in r.groups[i:i + k] for u in g))
        new = ProductResponse(r.alphabet_size, r.num_files, r.file_len, r.units, tuple(merged))
        for g in range(len(merged)):
            size = math.prod(len(new.units[u].response.parts) for u in merged[g])
            if cap is not None and size > cap:
                raise OverflowError(f"joint answer alphabet of {size} symbols exceeds the cap of {cap}")
        out.append(new)
    return Scheme(scheme.alphabet_size, scheme.M, scheme.file_len, scheme.query_dist, tuple(out))


def restrict_response(rf: ResponseFunction, keep_files, fixed_symbol=0):
    """Response seen when all files outside ``keep_files`` are constant."""
    q, n, b = rf.alphabet_size, rf.num_symbols, rf.file_len
    keep_files = list(keep_files)
    Mk = len(keep_files)
    parts, recs = [], []
    for p, rec in zip(rf.parts, rf.reconstructions):
        members = []
        for s in p:
            d = state_to_digits(s, q, n)
            if any(d[f * b + i] != fixed_symbol for f in range(rf.num_files) if f not in keep_files for i in range(b)):
                continue
            ns = 0
            for f in keep_files:
                for i in range(b):
                    ns = ns * q + d[f * b + i]
            members.append(ns)
        if members:
            parts.append(members)
            recs.append(tuple(rec[f] for f in keep_files))
    return ResponseFunction(q, Mk, b, tuple(parts), tuple(recs))


def file_subset_compose(scheme: Scheme, G: int, num_files=None, pad=False) -> Scheme:
    """Split M = G * M0 files into groups, each answered by the small scheme.

    The user draws one query as if asking for the within-group index of the
    desired file and sends it for every group, so the server learns only that
    index's information and the leakage divides by G.  With ``num_files`` not
    a multiple of M0, ``pad=True`` fills the last group with constant files
    that are never requested.
    """
    M0, b = scheme.M, scheme.file_len
    if num_files is None:
        num_files = G * M0
    if num_files % M0:
        if not pad:
            raise ValueError(f"{num_files} files cannot be split into groups of {M0}; pass pad=True")
        G = -(-num_files // M0)
    elif num_files != G * M0:
        raise ValueError("num_files must equal G * M0")
    if G < 1:
        raise ValueError("G must be at least 1")
    if G == 1 and num_files == M0:
        return scheme
    last = num_files - (G - 1) * M0
    P = scheme.query_dist
    out = []
    for r in scheme.responses:
        pr = as_product(r)
        units, groups = [], []
        for g in range(G):
            size = M0 if g < G - 1 else last
            if size == M0:
                cmap = {f * b + p: (g * M0 + f) * b + p for f in range(M0) for p in range(b)}
                src = pr
            else:
                # padded group: restrict every unit to the real files
                flat = r if isinstance(r, ResponseFunction) else pr.to_flat()
                src = as_product(restrict_response(flat, range(size)))
                cmap = {f * b + p: (g * M0 + f) * b + p for f in range(size) for p in range(b)}
            base = len(units)
            units.extend(Unit(u.response, tuple(cmap[c] for c in u.coords)) for u in src.units)
            groups.extend(tuple(base + i for i in gg) for gg in src.groups)
        out.append(ProductResponse(scheme.alphabet_size, num_files, b, tuple(units), tuple(groups)))
    rows = tuple(P.P[m % M0] for m in range(num_files))
    return Scheme(scheme.alphabet_size, num_files, b, QueryDistribution(rows, P.queries), tuple(out))


def time_share(schemes, weights) -> Scheme:
    """Disjoint union of the query sets with probabilities scaled by the weights."""
    schemes = list(schemes)
    weights = list(weights)
    if len(schemes) != len(weights) or not schemes:
        raise ValueError("one weight per scheme is required")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    exact = all(_is_exact(w) for w in weights)
    if (sum(weights) != 1) if exact else abs(sum(weights) - 1) > 1e-12:
        raise ValueError("weights must sum to one")
    s0 = schemes[0]
    for s in schemes[1:]:
        if (s.alphabet_size, s.M, s.file_len) != (s0.alphabet_size, s0.M, s0.file_len):
            raise ValueError("schemes must share alphabet, number of files and file length")
    rows = [[] for _ in range(s0.M)]
    ids, responses = [], []
    for i, (s, w) in enumerate(zip(schemes, weights)):
        if w == 0:
            continue
        P = s.query_dist
        for j, qid in enumerate(P.queries):
            ids.append((i, qid))
            responses.append(s.responses[j])
            for m in range(s0.M):
                rows[m].append(w * P.P[m][j])
    return Scheme(s0.alphabet_size, s0.M, s0.file_len, QueryDistribution(tuple(map(tuple, rows)), tuple(ids)), tuple(responses))


def permute_files(scheme: Scheme, perm) -> Scheme:
    """Relabeled scheme: new file m plays the role of old file ``perm[m]``."""
    M, b = scheme.M, scheme.file_len
    P = scheme.query_dist
    rows = tuple(P.P[perm[m]] for m in range(M))
    inv = [0] * M
    for m, pm in enumerate(perm):
        inv[pm] = m
    out = []
    for r in scheme.responses:
        if isinstance(r, ResponseFunction):
            out.append(permute_coordinates(r, file_permutation_coords(M, b, perm)))
        else:
            cmap = {f * b + p: inv[f] * b + p for f in range(M) for p in range(b)}
            out.append(r.remap(cmap))
    return Scheme(scheme.alphabet_size, M, b, QueryDistribution(rows, P.queries), tuple(out))


def symmetry_permutations(M):
    if M <= FULL_GROUP_MAX_FILES:
        return list(itertools.permutations(range(M)))
    return [tuple((m + k) % M for m in range(M)) for k in range(M)]


def symmetrize(scheme: Scheme) -> Scheme:
    """Equal-weight time sharing of file-relabeled copies.

    Uses every permutation for up to five files and the cyclic shifts
    beyond that; both make all per-file distortions equal to their mean.
    """
    perms = symmetry_permutations(scheme.M)
    w = Fraction(1, len(perms)) if scheme.query_dist.exact else 1.0 / len(perms)
    return time_share([permute_files(scheme, p) for p in perms], [w] * len(perms))


# Monte Carlo

def _response_tables(r, M, B):
    """Lookup tables for vectorized answering of a product response."""
    pr = as_product(r)
    q = pr.alphabet_size
    units = []
    for u in pr.units:
        rf = u.response
        part_of = np.asarray(rf.part_of, dtype=np.int64)
        recs = np.array([[v for f in rec for v in f] for rec in rf.reconstructions], dtype=np.int64)
        weights = q ** np.arange(len(u.coords) - 1, -1, -1, dtype=np.int64)
        units.append((np.asarray(u.coords), weights, part_of, recs))
    groups = []
    for g, members in enumerate(pr.groups):
        lengths = np.asarray(pr.group_code_lengths(g), dtype=np.int64)
        radix = [len(pr.units[i].response.parts) for i in members]
        groups.append((list(members), radix, lengths))
    return units, groups


def simulate(scheme: Scheme, trials: int, seed=0, chunk=100_000) -> EvalReport:
    """Empirical rate, distortion and leakage from sampled retrievals.

    Chunk k draws from PCG64 seeded with ``SeedSequence(seed, spawn_key=(k,))``
    so results depend only on (seed, trials, chunk).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    M, B, Xs = scheme.M, scheme.file_len, scheme.alphabet_size
    P = np.array([[float(v) for v in row] for row in scheme.query_dist.P])
    nq = P.shape[1]
    guess = np.argmax(P, axis=0)  # ML file guess per query, ties to the smallest index
    tables = [None] * nq
    sums = np.zeros(3)
    sq = np.zeros(3)
    per_file_err = np.zeros(M)
    per_file_cnt = np.zeros(M)
    done = 0
    k = 0
    cum = np.cumsum(P, axis=1)
    while done < trials:
        n = min(chunk, trials - done)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))
        m = rng.integers(0, M, size=n)
        u = rng.random(n)
        qs = np.minimum((u[:, None] >= cum[m]).sum(axis=1), nq - 1)
        db = rng.integers(0, Xs, size=(n, M * B), dtype=np.int64)
        length = np.zeros(n)
        errs = np.zeros(n)
        for j in np.unique(qs):
            idx = np.nonzero(qs == j)[0]
            if tables[j] is None:
                tables[j] = _response_tables(scheme.responses[j], M, B)
            units, groups = tables[j]
            x = db[idx]
            mm = m[idx]
            parts = []
            rec = np.empty_like(x)
            for coords, wts, part_of, recs in units:
                pi = part_of[x[:, coords] @ wts]
                parts.append(pi)
                rec[:, coords] = recs[pi]
            ln = np.zeros(len(idx))
            for members, radix, lengths in groups:
                code = np.zeros(len(idx), dtype=np.int64)
                for ui, rad in zip(members, radix):
                    code = code * rad + parts[ui]
                ln += lengths[code]
            wrong = (rec != x).reshape(len(idx), M, B).sum(axis=2)
            e = wrong[np.arange(len(idx)), mm] / B
            length[idx] = ln / B
            errs[idx] = e
        hit = (guess[qs] == m).astype(float)
        for i, v in enumerate((length, errs, hit)):
            sums[i] += v.sum()
            sq[i] += (v * v).sum()
        np.add.at(per_file_err, m, errs)
        np.add.at(per_file_cnt, m, 1)
        done += n
        k += 1
    mean = sums / trials
    var = np.maximum(sq / trials - mean ** 2, 0.0)
    se = np.sqrt(var / max(trials - 1, 1))
    per_file = tuple(float(e / c) if c else float("nan") for e, c in zip(per_file_err, per_file_cnt))
    return EvalReport(
        float(mean[0]), float(mean[1]), per_file, float(mean[2]),
        {"rate": float(se[0]), "distortion": float(se[1]), "leakage": float(se[2])}, trials,
    )
