import numpy as np
import pytest

from hgatelda.ingest import DiseaseDag, EntityRegistry, load_dataset
from hgatelda.synthetic import fixture_dir, fixture_paths, siblings, write_tables


@pytest.fixture(scope="session")
def planted():
    return load_dataset(*fixture_paths(fixture_dir("planted")).values())


@pytest.fixture(scope="session")
def sibling_data():
    return load_dataset(*fixture_paths(fixture_dir("siblings")).values())


@pytest.fixture
def sibling_dir(tmp_path):
    write_tables(siblings(), tmp_path / "siblings")
    return tmp_path / "siblings"


def random_dag(rng, n, edge_prob=0.3):
    """Random DAG over d0..d{n-1}; edges only point from higher to lower index."""
    names = [f"d{i}" for i in range(n)]
    edges = [
        (names[c], names[p])
        for c in range(n)
        for p in range(c)
        if rng.random() < edge_prob
    ]
    return names, DiseaseDag.from_edges(names, edges)


def random_registry(p, q, r=1):
    return EntityRegistry(
        tuple(f"l{i}" for i in range(p)),
        tuple(f"d{i}" for i in range(q)),
        tuple(f"m{i}" for i in range(r)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def tiny_config(**overrides):
    """Fast pipeline settings for tests that exercise plumbing, not accuracy."""
    from hgatelda.classifier import ClassifierConfig
    from hgatelda.evaluation import PipelineConfig
    from hgatelda.gate import GateConfig

    return PipelineConfig(
        gate=GateConfig(hidden=(8, 4), heads=2, epochs=5),
        classifier=ClassifierConfig(hidden=(8,), epochs=5),
        **overrides,
    )


_verdicts = []


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if report.when != "call" or "criterion" not in props:
        return
    if report.passed:
        line = f"PASS  {props['criterion']}: {props.get('detail', '')}"
    else:
        reason = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else "error"
        line = f"FAIL  {props['criterion']}: {reason.splitlines()[0]}"
    _verdicts.append(line)


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _verdicts:
            terminalreporter.write_line(line)
