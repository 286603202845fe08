import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import DATA, random_scheme
from lwpir.schemes import (
    ProductResponse,
    Scheme,
    block_split,
    evaluate,
    file_subset_compose,
    permute_files,
    reencode_joint,
    simulate,
    single_query_scheme,
    symmetrize,
    time_share,
)
from lwpir.source_coding import ResponseFunction

seeds = st.integers(0, 10 ** 6)
S = Scheme.loads((DATA / "scheme_S.json").read_text())


def _triple(rep):
    return rep.rate, rep.distortion, rep.leakage


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_json_roundtrip(seed):
    s = random_scheme(random.Random(seed))
    back = Scheme.loads(s.dumps())
    assert evaluate(back) == evaluate(s)
    assert back.dumps() == s.dumps()


def test_fixture_values():
    assert _triple(evaluate(S)) == (F(1, 2), F(5, 16), F(1, 2))
    Sp = Scheme.loads((DATA / "scheme_S_prime.json").read_text())
    assert evaluate(Sp).distortion == F(5, 16)
    assert round(float(evaluate(Sp).rate), 3) == 0.449


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 3))
def test_block_split_preserves_point(seed, t):
    s = random_scheme(random.Random(seed), beta=1)
    b = block_split(s, t)
    assert b.file_len == t * s.file_len
    assert _triple(evaluate(b)) == _triple(evaluate(s))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_joint_reencoding_never_costs_rate(seed):
    s = random_scheme(random.Random(seed), M=2, beta=1)
    b = block_split(s, 3)
    j = reencode_joint(b)
    rb, rj = evaluate(b), evaluate(j)
    assert rj.rate <= rb.rate
    assert (rj.distortion, rj.leakage) == (rb.distortion, rb.leakage)


def test_joint_cap():
    with pytest.raises(OverflowError):
        reencode_joint(block_split(S, 10), cap=1000)


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(1, 4))
def test_subset_compose_scales(seed, G):
    s = random_scheme(random.Random(seed), M=2, beta=1)
    a = evaluate(s)
    c = file_subset_compose(s, G)
    r = evaluate(c)
    assert c.M == 2 * G
    assert r.rate == G * a.rate
    assert r.distortion == a.distortion
    assert r.leakage == a.leakage / G


def test_subset_compose_padding():
    with pytest.raises(ValueError):
        file_subset_compose(S, 2, num_files=3)
    c = file_subset_compose(S, 2, num_files=3, pad=True)
    r = evaluate(c)
    assert c.M == 3
    assert r.leakage <= F(1, 2)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 7))
def test_time_share_is_linear(seed, w):
    rng = random.Random(seed)
    a = random_scheme(rng, M=2, beta=1)
    b = random_scheme(rng, M=2, beta=1)
    wa = F(w, 8)
    ts = evaluate(time_share([a, b], [wa, 1 - wa]))
    ra, rb = evaluate(a), evaluate(b)
    assert ts.rate == wa * ra.rate + (1 - wa) * rb.rate
    assert ts.distortion == wa * ra.distortion + (1 - wa) * rb.distortion
    assert ts.leakage == wa * ra.leakage + (1 - wa) * rb.leakage


def test_time_share_validation():
    with pytest.raises(ValueError):
        time_share([S, S], [F(1, 2), F(1, 3)])
    with pytest.raises(ValueError):
        time_share([S], [F(1, 2), F(1, 2)])


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_permute_files(seed):
    s = random_scheme(random.Random(seed), M=3, beta=1)
    p = permute_files(s, (2, 0, 1))
    a, b = evaluate(s), evaluate(p)
    assert b.per_file_distortion == tuple(a.per_file_distortion[i] for i in (2, 0, 1))
    assert (b.rate, b.leakage) == (a.rate, a.leakage)


def test_symmetrize_idempotent_on_symmetric_scheme():
    sym = symmetrize(S)
    assert _triple(evaluate(sym)) == _triple(evaluate(S))


def test_simulate_deterministic():
    a = simulate(S, 20_000, seed=5)
    b = simulate(S, 20_000, seed=5)
    c = simulate(S, 20_000, seed=6)
    assert a == b
    assert a != c
    assert a.rate == 0.5


def test_simulate_product_scheme():
    Sp = Scheme.loads((DATA / "scheme_S_prime.json").read_text())
    comp = file_subset_compose(Sp, 8)
    mc = simulate(comp, 20_000, seed=1)
    ex = evaluate(comp)
    for key in ("rate", "distortion", "leakage"):
        sd = mc.stderr[key]
        assert abs(getattr(mc, key) - float(getattr(ex, key))) <= 5 * sd + 1e-12


def test_product_units_must_cover():
    rf = ResponseFunction.identity(2, 1, 1)
    from lwpir.schemes import Unit
    with pytest.raises(ValueError):
        ProductResponse(2, 2, 1, (Unit(rf, (0,)),))
    pr = ProductResponse(2, 2, 1, (Unit(rf, (0,)), Unit(ResponseFunction.trivial(2, 1, 1), (1,))))
    assert pr.point == (1, 0, F(1, 2))
    flat = pr.to_flat()
    assert flat.point == pr.point


def test_single_query_scheme_leakage():
    s = single_query_scheme(ResponseFunction.identity(2, 3, 1))
    assert evaluate(s).leakage == F(1, 3)
    assert evaluate(s).rate == 3
