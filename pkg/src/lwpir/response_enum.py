"""Candidate response functions: set partitions, reduction, vertex filtering."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .simplex import solve_lp
from .source_coding import (
    digits_to_state,
    ml_reconstruct,
    state_to_digits,
)

DEFAULT_CAP = 15


class EnumerationCapError(ValueError):
    pass


@dataclass(frozen=True)
class CandidatePoint:
    c: tuple
    source: object = None

    @property
    def rate(self):
        return self.c[0]

    @property
    def distortions(self):
        return self.c[1:]


def bell_number(n):
    """Bell number by the Bell triangle."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def restricted_growth_strings(n) -> Iterator[tuple]:
    """All restricted growth strings of length n in lexicographic order."""
    if n < 1:
        raise ValueError("n must be positive")
    a = [0] * n
    b = [0] * n  # b[i] = 1 + max(a[:i])
    b[0] = 0
    for i in range(1, n):
        b[i] = 1
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and a[i] == b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        m = max(b[i], a[i] + 1)
        for j in range(i + 1, n):
            a[j] = 0
            b[j] = m


def rgs_to_blocks(rgs):
    blocks = [[] for _ in range(max(rgs) + 1)]
    for i, k in enumerate(rgs):
        blocks[k].append(i)
    return blocks


def enumerate_partitions(n, cap=DEFAULT_CAP) -> Iterator[list]:
    """Every set partition of {0, ..., n-1}, each exactly once."""
    if n > cap:
        raise EnumerationCapError(
            f"exhaustive enumeration of {n} elements ({bell_number(n)} partitions) exceeds the cap of {cap}; "
            "use a compressor pool or the symmetry-reduced long job instead"
        )
    for rgs in restricted_growth_strings(n):
        yield rgs_to_blocks(rgs)


def partition_responses(alphabet_size, num_files, file_len, cap=DEFAULT_CAP):
    n = alphabet_size ** (num_files * file_len)
    for blocks in enumerate_partitions(n, cap):
        yield ml_reconstruct(blocks, alphabet_size, num_files, file_len)


def _in_hull(p, others, exact=True):
    """Is p a convex combination of ``others``?

    In exact mode a float solve runs first; a feasible float answer is
    confirmed exactly on its support, everything else gets the full exact LP.
    """
    if not others:
        return False
    dim = len(p)
    k = len(others)

    def system(cols):
        A_eq = [[o[i] for o in cols] for i in range(dim)]
        A_eq.append([1] * len(cols))
        return A_eq, list(p) + [1]

    A_eq, b_eq = system(others)
    if not exact:
        return solve_lp([0] * k, A_eq=A_eq, b_eq=b_eq, exact=False).ok
    if k > 2 * (dim + 1):
        fl = solve_lp([0] * k, A_eq=[[float(v) for v in r] for r in A_eq],
                      b_eq=[float(v) for v in b_eq], exact=False)
        if fl.ok:
            sup = [others[j] for j, v in enumerate(fl.x) if v > 1e-12]
            A_s, b_s = system(sup)
            if solve_lp([0] * len(sup), A_eq=A_s, b_eq=b_s, exact=True).ok:
                return True
    return solve_lp([0] * k, A_eq=A_eq, b_eq=b_eq, exact=True).ok


def vertex_filter(points: Sequence, exact=None, return_indices=True):
    """Indices of points that are vertices of conv(points + {c_max}).

    Exact duplicates keep only their first occurrence.  The coordinatewise
    maximum c_max is added to the hull but never reported.
    """
    pts = [tuple(p.c) if isinstance(p, CandidatePoint) else tuple(p) for p in points]
    if not pts:
        raise ValueError("need at least one point")
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for p in pts for v in p)
    if len(pts) == 1:
        return [0]
    first = {}
    for i, p in enumerate(pts):
        first.setdefault(p, i)
    distinct = list(first)
    cmax = tuple(max(col) for col in zip(*distinct))
    keep = []
    for p in distinct:
        if p == cmax:
            # c_max itself coincides with a candidate: it is the extreme corner
            others = [o for o in distinct if o != p]
            if not _in_hull(p, others, exact):
                keep.append(first[p])
            continue
        others = [o for o in distinct if o != p] + [cmax]
        if not _in_hull(p, others, exact):
            keep.append(first[p])
    return sorted(keep)


def is_vertex(p, points, exact=True):
    """Independent re-check: p is not a convex combination of the rest and c_max."""
    distinct = list(dict.fromkeys(tuple(q) for q in points))
    cmax = tuple(max(col) for col in zip(*distinct))
    others = [o for o in distinct if o != tuple(p)]
    if tuple(p) != cmax:
        others.append(cmax)
    return not _in_hull(tuple(p), others, exact)


def dominance_prune(points: Sequence):
    """Drop points weakly dominated by a distinct point in every coordinate.

    A dominated point can always be swapped for its dominator in the rate
    LP without raising rate or distortion, so this never changes optima.
    """
    pts = [tuple(p) for p in points]
    keep = []
    for i, p in enumerate(pts):
        dominated = False
        for j, q in enumerate(pts):
            if q != p and all(a <= b for a, b in zip(q, p)):
                dominated = True
                break
            if q == p and j < i:
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


# symmetry group on database coordinates

def symmetry_group(alphabet_size, num_files, file_len, full=True):
    """Coordinate permutations (and complement flags) preserving the model.

    Each element is ``(perm, complement)``: new digit i is old digit
    ``perm[i]``, optionally complemented (binary alphabets only).
    """
    if not full:
        return [(tuple(range(num_files * file_len)), False)]
    elems = []
    within = list(itertools.permutations(range(file_len)))
    for fperm in itertools.permutations(range(num_files)):
        for bperms in itertools.product(within, repeat=num_files):
            perm = []
            for m in range(num_files):
                src = fperm[m]
                perm.extend(src * file_len + bperms[m][i] for i in range(file_len))
            for comp in ((False, True) if alphabet_size == 2 else (False,)):
                elems.append((tuple(perm), comp))
    return elems


def _state_maps(alphabet_size, n, group):
    maps = []
    for perm, comp in group:
        table = []
        for s in range(alphabet_size ** n):
            d = state_to_digits(s, alphabet_size, n)
            nd = [d[perm[i]] for i in range(n)]
            if comp:
                nd = [1 - v for v in nd]
            table.append(digits_to_state(nd, alphabet_size))
        maps.append(table)
    return maps


def _canon(blocks):
    return tuple(sorted(tuple(sorted(b)) for b in blocks))


def canonical_partitions(alphabet_size, num_files, file_len, symmetry="full", cap=None):
    """Partitions that are lexicographically minimal in their group orbit."""
    n = num_files * file_len
    group = symmetry_group(alphabet_size, num_files, file_len, full=(symmetry == "full"))
    maps = _state_maps(alphabet_size, n, group)
    N = alphabet_size ** n
    cap = N if cap is None else cap
    for blocks in enumerate_partitions(N, cap=cap):
        key = _canon(blocks)
        minimal = True
        for table in maps:
            img = _canon([[table[s] for s in b] for b in blocks])
            if img < key:
                minimal = False
                break
        if minimal:
            yield blocks


def equivalence_reduce(responses: Iterable, symmetry=None, num_files=None):
    """Distinct candidate points, first source kept for each.

    With ``symmetry="full"`` the input is expected to be canonical orbit
    representatives; the file-permuted images of each point are added back so
    the pool stays closed under relabeling of files.
    """
    seen = {}
    for rf in responses:
        c = tuple(rf.point)
        if c not in seen:
            seen[c] = CandidatePoint(c, rf)
        if symmetry == "full":
            M = num_files or rf.num_files
            for fperm in itertools.permutations(range(M)):
                img = (c[0],) + tuple(c[1 + fperm[m]] for m in range(M))
                if img not in seen:
                    seen[img] = CandidatePoint(img, ("file-permuted", fperm, rf))
    return list(seen.values())


def streaming_vertex_pool(responses: Iterable, batch=2000, exact=None):
    """Online survivor set: dominance-pruned vertices, merged batch by batch."""
    survivors = []
    buf = []

    def merge(cands):
        pts = [c.c for c in cands]
        keep = dominance_prune(pts)
        cands = [cands[i] for i in keep]
        idx = vertex_filter([c.c for c in cands], exact=exact)
        return [cands[i] for i in idx]

    seen = set()
    for rf in responses:
        c = tuple(rf.point)
        if c in seen:
            continue
        seen.add(c)
        buf.append(CandidatePoint(c, rf))
        if len(buf) >= batch:
            survivors = merge(survivors + buf)
            buf = []
            seen = {s.c for s in survivors}
    if buf or not survivors:
        survivors = merge(survivors + buf)
    return survivors


def filtered_pool(alphabet_size, num_files, file_len, cap=DEFAULT_CAP):
    """Vertex response functions among all partitions of the database space."""
    cands = equivalence_reduce(partition_responses(alphabet_size, num_files, file_len, cap))
    idx = vertex_filter([c.c for c in cands])
    return [cands[i].source for i in idx]
