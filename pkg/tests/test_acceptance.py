"""The eleven quantitative gates, one test each.

Each test runs its criterion through the shared driver, prints the one-line
pass/fail report, and asserts both the check and its runtime budget. The
tolerances live inside torusflow.acceptance and are pinned; loosening them
there is the only way to change what these tests demand.
"""

import pytest

from torusflow.acceptance import CHECKS, run_criteria

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def _run_one(index: int, capsys) -> None:
    with capsys.disabled():
        results = run_criteria([index], report=lambda line: print("\n" + line))
    res = results[0]
    assert res.passed, res.detail
    assert res.elapsed < res.budget, (
        f"criterion {index} took {res.elapsed:.1f}s, budget {res.budget:.0f}s")


@pytest.mark.parametrize("index", sorted(CHECKS))
def test_criterion(index, capsys):
    _run_one(index, capsys)
