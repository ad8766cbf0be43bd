"""Acceptance criteria 1-13, one test each, with a pass/fail line per criterion.

The lines are printed in the terminal summary of every pytest run; ``shearer
audit all`` prints the same table from the command line.
"""

import pytest

from shearer.audit import CRITERIA

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    result = CRITERIA[number]()
    print(result.line())
    ACCEPTANCE_LINES[number] = result.line()
    assert result.number == number
    assert result.passed, result.line()
