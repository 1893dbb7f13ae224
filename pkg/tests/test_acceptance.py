"""Acceptance criteria 1-12, each at its stated tolerance.

Every check yields one ``[PASS]``/``[FAIL]`` line; conftest prints them all in
the terminal summary.
"""

import pytest

from tricrit.verify import CHECKS, run_check


@pytest.mark.parametrize("number", [n for n, _, _ in CHECKS],
                         ids=[f"{n:02d}-{t.replace(' ', '-')}" for n, t, _ in CHECKS])
def test_acceptance(number, record_property):
    result = run_check(number)
    record_property("acceptance", result.line())
    print(result.line())
    assert result.passed, result.line()
