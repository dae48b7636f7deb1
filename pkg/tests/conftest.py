import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from asyncrank.webgraph import AdjacencyGraph

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def graph_of(n, edges):
    src = [a for a, _ in edges]
    dst = [b for _, b in edges]
    return AdjacencyGraph.from_edges(n, src, dst)


@pytest.fixture
def two_cycle():
    return graph_of(2, [(0, 1), (1, 0)])


@pytest.fixture
def single_edge():
    # node 1 dangling
    return graph_of(2, [(0, 1)])


@pytest.fixture
def g3():
    return graph_of(3, [(0, 1), (0, 2), (1, 2), (2, 0)])


@st.composite
def graphs(draw, max_n=30):
    n = draw(st.integers(1, max_n))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
    edges = draw(st.lists(pairs, max_size=4 * n))
    return graph_of(n, edges)


@st.composite
def graph_and_vector(draw, max_n=30):
    g = draw(graphs(max_n))
    x = draw(st.lists(st.floats(0.0, 10.0), min_size=g.n, max_size=g.n))
    return g, np.array(x)


def random_graph(rng, n, dangling_fraction=0.2, max_deg=6):
    src, dst = [], []
    for i in range(n):
        if rng.random() < dangling_fraction:
            continue
        k = int(rng.integers(1, max_deg + 1))
        for j in rng.choice(n, min(k, n), replace=False):
            src.append(i)
            dst.append(int(j))
    return AdjacencyGraph.from_edges(n, src, dst)


# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def _status(ok):
    return "SKIP" if ok is None else "PASS" if ok else "FAIL"


def record(criterion, ok, detail):
    """``ok=None`` marks an optional criterion that was not run."""
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"[{_status(ok)}] criterion {criterion}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=str):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{_status(ok)}  {key}: {detail}")
