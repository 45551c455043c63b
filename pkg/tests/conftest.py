import numpy as np
import pytest

from kernel_spv.dynamics import duffing_system, sample_uniform

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): numbered acceptance criterion")


@pytest.fixture
def record_criterion():
    """Record the outcome of a numbered acceptance criterion for the summary table."""
    def record(number, title, passed, detail=""):
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        print(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}  {detail}")


@pytest.fixture
def duffing_data():
    def make(N, seed=0, box=((-2.0, 2.0), (-2.0, 2.0))):
        return sample_uniform(duffing_system(), N, box, seed)
    return make


def random_selection(N, s, seed):
    idx = np.random.default_rng(seed).choice(N, size=s, replace=False)
    W = np.zeros((N, s))
    W[idx, np.arange(s)] = 1.0
    return W
