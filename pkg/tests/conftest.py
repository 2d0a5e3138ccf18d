"""Shared fixtures: compile the jit kernels once so per-test timings and the
acceptance budgets measure numerics, not compilation."""

import pytest

from torusflow.dfa import DfaParams, TorusPoint, apply_f
from torusflow.flow import FlowConfig, integrate


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    params = DfaParams(beta=-2.0)
    apply_f(TorusPoint(0.3, 0.3), params)
    integrate(FlowConfig(params=params), TorusPoint(0.3, 0.3), 0.25)
