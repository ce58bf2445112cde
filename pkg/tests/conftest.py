import pytest

from fogoffload.dataset import build_dataset
from fogoffload.simulator import GroundTruthModel, default_grid, run_experiment_grid

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(name, passed, detail)``."""

    def record(name, passed, detail=""):
        _ACCEPTANCE.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture(scope="session")
def quick_traces():
    return run_experiment_grid(default_grid(), GroundTruthModel(), seed=11, quick=True)


@pytest.fixture(scope="session")
def quick_dataset(quick_traces):
    return build_dataset(quick_traces)


@pytest.fixture(scope="session")
def noiseless_dataset():
    traces = run_experiment_grid(default_grid(), GroundTruthModel(eta=0.0), seed=5)
    return build_dataset(traces)
