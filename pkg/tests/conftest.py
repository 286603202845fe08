import random
from fractions import Fraction
from pathlib import Path

import pytest

from lwpir.lp_core import QueryDistribution
from lwpir.schemes import Scheme
from lwpir.source_coding import ml_reconstruct

DATA = Path(__file__).resolve().parents[1] / "src" / "lwpir" / "data"

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _criteria[num] = (title, status, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status, dur = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d} {status}  {title}  ({dur:.1f} s)")


def random_response(rng, M, beta, max_parts=None):
    n = 2 ** (M * beta)
    k = rng.randint(1, max_parts or n)
    labels = [rng.randrange(k) for _ in range(n)]
    parts = {}
    for s, lab in enumerate(labels):
        parts.setdefault(lab, []).append(s)
    return ml_reconstruct(list(parts.values()), 2, M, beta)


def random_scheme(rng, M=None, beta=None, max_queries=3):
    M = M or rng.randint(1, 4)
    beta = beta or rng.randint(1, 2)
    if M * beta > 8:
        beta = 1
    Q = rng.randint(1, max_queries)
    rows = []
    for _ in range(M):
        w = [rng.randint(0, 4) for _ in range(Q)]
        if not any(w):
            w[rng.randrange(Q)] = 1
        tot = sum(w)
        rows.append(tuple(Fraction(x, tot) for x in w))
    responses = tuple(random_response(rng, M, beta) for _ in range(Q))
    return Scheme(2, M, beta, QueryDistribution(tuple(rows)), responses)


@pytest.fixture
def rng():
    return random.Random(12345)
