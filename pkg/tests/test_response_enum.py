import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from lwpir.lp_core import lp_optimum
from lwpir.response_enum import (
    EnumerationCapError,
    bell_number,
    canonical_partitions,
    dominance_prune,
    enumerate_partitions,
    equivalence_reduce,
    filtered_pool,
    is_vertex,
    partition_responses,
    restricted_growth_strings,
    streaming_vertex_pool,
    symmetry_group,
    vertex_filter,
)
from lwpir.response_enum import _in_hull
from lwpir.source_coding import ml_reconstruct


def test_bell_numbers():
    assert [bell_number(n) for n in range(8)] == [1, 1, 2, 5, 15, 52, 203, 877]


@pytest.mark.parametrize("n", range(1, 8))
def test_rgs_enumerates_each_partition_once(n):
    seen = set()
    for rgs in restricted_growth_strings(n):
        assert rgs[0] == 0
        assert all(rgs[i] <= max(rgs[:i]) + 1 for i in range(1, n))
        seen.add(tuple(rgs))
    assert len(seen) == bell_number(n)
    blocks = {frozenset(frozenset(b) for b in p) for p in enumerate_partitions(n)}
    assert len(blocks) == bell_number(n)


def test_cap_is_enforced():
    with pytest.raises(EnumerationCapError):
        next(enumerate_partitions(16))
    with pytest.raises(EnumerationCapError):
        next(partition_responses(2, 2, 2))


points = st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4)),
                  min_size=1, max_size=12)


@settings(max_examples=40, deadline=None)
@given(points)
def test_filter_soundness(pts):
    pts = [tuple(F(v) for v in p) for p in pts]
    keep = vertex_filter(pts)
    kept = [pts[i] for i in keep]
    distinct = list(dict.fromkeys(pts))
    cmax = tuple(max(c) for c in zip(*distinct))
    for p in kept:
        assert is_vertex(p, distinct)
    # everything dropped lies in the hull of the survivors and c_max
    for p in distinct:
        if p not in kept:
            assert _in_hull(p, kept + [cmax], True)


@settings(max_examples=40, deadline=None)
@given(points)
def test_float_filter_agrees_with_exact(pts):
    ex = vertex_filter([tuple(F(v) for v in p) for p in pts])
    fl = vertex_filter([tuple(float(v) for v in p) for p in pts], exact=False)
    assert ex == fl


def test_dominated_point_can_still_be_a_vertex():
    # (1, 0) is dominated by (0, 0) but c_max = (1, 0) keeps it extreme
    pts = [(F(0), F(0)), (F(1), F(0))]
    assert vertex_filter(pts) == [0, 1]
    assert dominance_prune(pts) == [0]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_dominance_prune_keeps_lp_optimum(seed):
    rng = random.Random(seed)
    pool = [tuple(F(rng.randint(0, 4), 2) if j == 0 else F(rng.randint(0, 4), 8) for j in range(3))
            for _ in range(8)]
    pool.append((F(2), F(0), F(0)))
    pruned = [pool[i] for i in dominance_prune(pool)]
    for D in (F(0), F(1, 8), F(1, 4)):
        for L in (F(1, 2), F(3, 4), F(1)):
            assert lp_optimum(pool, 2, D, L) == lp_optimum(pruned, 2, D, L)


def test_symmetry_group_size():
    for M, b in ((2, 1), (2, 2), (3, 1), (1, 3)):
        g = symmetry_group(2, M, b)
        assert len(g) == math.factorial(M) * math.factorial(b) ** M * 2
        assert len(set(g)) == len(g)


@pytest.mark.parametrize("M,b", [(2, 1), (1, 2), (1, 3)])
def test_symmetry_reduction_keeps_vertex_set(M, b):
    full = equivalence_reduce(partition_responses(2, M, b))
    want = {full[i].c for i in vertex_filter([c.c for c in full])}
    reps = (ml_reconstruct(p, 2, M, b) for p in canonical_partitions(2, M, b))
    red = equivalence_reduce(reps, "full", M)
    got = {red[i].c for i in vertex_filter([c.c for c in red])}
    assert got == want


def test_canonical_partitions_fewer_than_all():
    n_all = bell_number(8)
    n_can = sum(1 for _ in canonical_partitions(2, 1, 3))
    assert n_can < n_all


def test_streaming_pool_matches_batch_filter():
    resp = list(partition_responses(2, 2, 1))
    batch = {c.c for c in streaming_vertex_pool(resp, batch=3)}
    whole = {resp[i].point for i in vertex_filter([r.point for r in resp])}
    assert batch == whole


def test_filtered_pool_table():
    pool = filtered_pool(2, 2, 1)
    assert {rf.point for rf in pool} == {(2, 0, 0), (1, 0, F(1, 2)), (1, F(1, 2), 0), (0, F(1, 2), F(1, 2))}
