import numpy as np
import networkx as nx
import pytest

from bitpareto.pareto import ParetoFront

_ACCEPTANCE: list[tuple[str, str, str]] = []


def naive_labels(d):
    """O(n^2) pairwise labelling, written independently of the package."""
    d = np.asarray(d, dtype=float)
    labels = []
    for p in d:
        strict = np.any(np.all(d <= p, axis=1) & np.any(d < p, axis=1))
        weak = np.any(np.all(d < p, axis=1))
        labels.append("dominated" if weak else "weak_only" if strict else "pareto")
    return np.array(labels)


def reach_oracle(node_count, arcs, i):
    g = nx.DiGraph()
    g.add_nodes_from(range(node_count))
    g.add_edges_from(arcs)
    down = nx.descendants(g, 0) | {0}
    up = nx.ancestors(g, i) | {i}
    return tuple(sorted(down & up))


def random_dag_arcs(rng, n, density=0.3):
    """Random valid layer DAG: every node past 0 gets a parent earlier in a shuffled order."""
    order = [0] + list(rng.permutation(np.arange(1, n)))
    arcs = set()
    for pos in range(1, n):
        v = order[pos]
        arcs.add((order[rng.integers(0, pos)], v))
        for u in order[1:pos]:
            if rng.random() < density:
                arcs.add((u, v))
    return sorted((int(a), int(b)) for a, b in arcs)


def bbox_violation_front():
    """Three 2-D points forced to weak labels; (1, 5) sits outside the box of its neighbours."""
    d = np.array([[1.0, 5.0], [0.5, 3.0], [5.0, 1.0]])
    return ParetoFront(None, d, np.array(["weak_only", "pareto", "pareto"]))


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    why = ""
    if report.failed:
        crash = getattr(report.longrepr, "reprcrash", None)
        why = crash.message.splitlines()[0] if crash else "failed"
    _ACCEPTANCE.append((name, report.outcome.upper(), why))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, why in _ACCEPTANCE:
        line = f"{'PASS' if outcome == 'PASSED' else 'FAIL'}  {name}"
        if why:
            line += f"  ({why.strip()[:160]})"
        terminalreporter.write_line(line)
