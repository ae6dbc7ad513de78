"""Acceptance criteria, one test per criterion.

Each criterion prints a single ``[PASS]``/``[FAIL]`` line, repeated in
the terminal summary; ``-s`` shows them inline as well.
"""

import json

import pytest

from deformphase import checks

from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module", autouse=True)
def compiled_kernel():
    checks.warm_up()


@pytest.mark.parametrize("name", list(checks.CHECKS))
def test_criterion(name):
    res = checks.run_check(name)
    print()
    print(res.line())
    ACCEPTANCE_LINES.append(res.line())
    assert res.passed, json.dumps(res.details, indent=2, default=float)


def test_suite_is_complete():
    assert len(checks.CHECKS) == 9
    assert checks.SUITES["default"] == tuple(checks.CHECKS)
