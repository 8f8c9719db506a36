"""Shared fixtures and the acceptance-criteria reporter.

Acceptance tests register one line per criterion through the
``acceptance_report`` fixture; the terminal summary prints them all so a
plain ``pytest`` run shows the per-criterion verdicts.
"""

import numpy as np
import pytest

from mfioc.benchmark import reference_config, reference_system
from mfioc.lqr import random_system
from mfioc.pipeline import RunConfig, run_pipeline

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    def record(name, passed, detail=""):
        verdict = "PASS" if passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        _ACCEPTANCE_LINES.append(f"ACCEPTANCE {name}: {verdict}{suffix}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def reference_result():
    """One reference-benchmark pipeline run shared across test modules."""
    system, cost, x0 = reference_system()
    return run_pipeline(system, cost, x0, reference_config())


@pytest.fixture(scope="session")
def reference_oracle_result():
    """Reference run with oracle derivatives (no discretization error)."""
    system, cost, x0 = reference_system()
    return run_pipeline(system, cost, x0, reference_config(deriv_mode="oracle"))


@pytest.fixture(scope="session")
def batch_config():
    """Randomized-study configuration: fine grid keeps differentiation sharp."""
    return RunConfig(dt=0.01)


@pytest.fixture(scope="session")
def random_batch(batch_config):
    """Pipeline results for a fixed batch of random systems."""
    results = []
    for seed in range(12):
        system, cost, x0 = random_system(3, 2, seed)
        results.append(run_pipeline(system, cost, x0, batch_config))
    return results


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
