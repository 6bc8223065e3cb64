"""Shared fixtures and the acceptance-summary reporter.

Every test in test_acceptance.py corresponds to one acceptance criterion;
a terminal-summary hook prints one PASS/FAIL line per criterion at the
end of the run regardless of capture settings.
"""

import numpy as np
import pytest

from gbutsvm import Dataset, minmax_scale

_acceptance_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid:
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            _acceptance_outcomes[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance_outcomes):
        outcome = _acceptance_outcomes[nodeid]
        label = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{label}  {nodeid.split('::')[-1]}")


def make_blobs(n, seed, separation=6.0, spread=1.0, n_features=2, name="blobs",
               scale=True):
    """Two Gaussian blobs on the diagonal, labels +1 (near origin) / -1.

    Features are min-max scaled by default, matching the CSV loading
    pipeline; the ball-margin formulation expects radii below the unit
    margin scale, which unscaled wide blobs would violate.
    """
    rng = np.random.default_rng(seed)
    n_pos = n // 2
    n_neg = n - n_pos
    pos = rng.normal(0.0, spread, size=(n_pos, n_features))
    neg = rng.normal(separation, spread, size=(n_neg, n_features))
    X = np.vstack([pos, neg])
    if scale:
        X = minmax_scale(X)
    y = np.concatenate([np.ones(n_pos, dtype=np.int64), -np.ones(n_neg, dtype=np.int64)])
    perm = rng.permutation(n)
    return Dataset(name, X[perm], y[perm])


@pytest.fixture
def blobs():
    return make_blobs(120, seed=7)
