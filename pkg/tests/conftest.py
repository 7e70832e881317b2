import numpy as np
import pytest

from memscal import _kernels_py, kernels
from memscal.fixtures import fixture_pattern, fixture_scene
from memscal.simulator import MisalignmentSpec, NoiseSpec, simulate_frames

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def pattern():
    return fixture_pattern()


@pytest.fixture(scope="session")
def scene():
    return fixture_scene()


@pytest.fixture(scope="session")
def misaligned_stream(scene, pattern):
    return simulate_frames(scene, pattern, MisalignmentSpec(37, 0.0, 452), NoiseSpec.none(), 1)


@pytest.fixture(scope="session")
def aligned_stream(scene, pattern):
    return simulate_frames(scene, pattern, MisalignmentSpec(0, 0.0, 450), NoiseSpec.none(), 1)


@pytest.fixture(params=["python", "cython"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend (cython is skipped when not built)."""
    if request.param == "cython":
        ck = pytest.importorskip("memscal._ckernels")
        monkeypatch.setattr(kernels, "cost_surface", ck.cost_surface)
    else:
        monkeypatch.setattr(kernels, "cost_surface", _kernels_py.cost_surface)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
