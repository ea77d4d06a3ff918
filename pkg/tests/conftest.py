import sys

import pytest

from collapsar.model import PhysicalParams


def case_params(case, **overrides):
    """Parameters shared by the acceptance runs: N=3, delta=1, K=1, kappa=1, m=-1, n=1, alpha=1."""
    base = dict(N=3, K=1.0, kappa=1.0, delta=1, m=-1.0, n=1.0, alpha_ic=1.0)
    if case == "Case2":
        base["Lambda"] = 0.01
    base.update(overrides)
    N = base.pop("N")
    return PhysicalParams.for_case(case, N=N, **base)


@pytest.fixture
def params_for():
    return case_params


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
