from fractions import Fraction

import pytest
from hypothesis import strategies as st

from approxdom.election import Election
from approxdom.generators import condorcet_cycle, unanimous


@pytest.fixture
def cycle3():
    return condorcet_cycle(3)


@pytest.fixture
def unanimous3():
    return unanimous(3, 4)


@st.composite
def elections(draw, max_m=6, max_voters=9, rational_weights=False):
    m = draw(st.integers(1, max_m))
    voters = draw(st.integers(1, max_voters))
    rankings = [tuple(draw(st.permutations(range(m)))) for _ in range(voters)]
    if rational_weights:
        weights = [
            Fraction(draw(st.integers(1, 9)), draw(st.integers(1, 5))) for _ in range(voters)
        ]
    else:
        weights = [draw(st.integers(1, 4)) for _ in range(voters)]
    return Election(m, tuple(weights), tuple(rankings))


@st.composite
def lotteries(draw, m):
    raw = [draw(st.integers(0, 6)) for _ in range(m)]
    if sum(raw) == 0:
        raw[draw(st.integers(0, m - 1))] = 1
    total = sum(raw)
    return [Fraction(r, total) for r in raw]


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
