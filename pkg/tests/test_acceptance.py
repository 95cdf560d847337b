"""All acceptance criteria at full scale and the default seed.

The suite takes a few minutes.  Each criterion prints one PASS/FAIL line,
and the lines are repeated in the terminal summary.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from heisenwiener import validation


@pytest.fixture(scope="module")
def report():
    def show(res):
        ACCEPTANCE_LINES.append(res.line())
        print(res.line(), flush=True)
    return validation.validate_all(scale=1.0, progress=show)


@pytest.mark.parametrize("number", sorted(validation.CRITERIA))
def test_criterion(report, number):
    res = next(r for r in report.results if r.number == number)
    print(res.line())
    assert res.passed, "criterion %d measured %s" % (number, res.measured)
    assert res.within_budget, "criterion %d took %.1fs" % (number, res.runtime)
