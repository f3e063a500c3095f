from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from riskprop.accident_db import build_table, load_aliases, load_records
from riskprop.scene import Edge, SceneGraph

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "riskprop" / "fixtures"

_criteria: dict[str, tuple[str, str]] = {}
_outcomes: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, text): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criteria[item.nodeid] = m.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    if report.when == "call" or report.failed:
        prev = _outcomes.get(report.nodeid, "PASS")
        _outcomes[report.nodeid] = "FAIL" if report.failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (label, text) in sorted(_criteria.items(), key=lambda kv: kv[1][0]):
        if nodeid in _outcomes:
            terminalreporter.write_line(f"[{_outcomes[nodeid]}] criterion {label}: {text}")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def aliases():
    return load_aliases(FIXTURES / "aliases.tsv")


@pytest.fixture(scope="session")
def fixture_table(aliases):
    return build_table(load_records(FIXTURES / "accidents.jsonl", aliases=aliases), aliases=aliases)


def random_graph(rng: np.random.Generator, n: int, **kw) -> SceneGraph:
    """Graph with random risks, edges, weights and share fractions."""
    p_edge = rng.uniform(0.2, 1.0)
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_edge:
                edges[(i, j)] = Edge(0.0, float(rng.uniform(0, 1)), float(rng.uniform(0.01, 0.99)))
    if rng.random() < 0.15:
        risk = [float(rng.choice([0.2, 0.5]))] * n
    else:
        risk = [float(v) for v in rng.uniform(0, 1, n)]
    share = tuple(float(s) for s in rng.uniform(0, 0.02, n))
    return SceneGraph("g", "fire", 2.0, tuple(range(n)), tuple(f"o{i}" for i in range(n)), risk, share, edges, **kw)


def dense(graph: SceneGraph):
    n = len(graph)
    adj = [[False] * n for _ in range(n)]
    acc = [[0.0] * n for _ in range(n)]
    dist = [[0.0] * n for _ in range(n)]
    for (i, j), e in graph.edges.items():
        adj[i][j] = adj[j][i] = True
        acc[i][j] = acc[j][i] = e.phi_accrel
        dist[i][j] = dist[j][i] = e.phi_distance
    return adj, acc, dist
