"""Acceptance criteria, one test each.

The whole suite runs once per session; every test prints its criterion's
pass/fail line and then asserts it.  A criterion the numerics do not meet
fails here exactly as it does in ``dirac accept``.
"""
import pytest

from diracdyn.acceptance import CRITERIA, format_line, run_suite


@pytest.fixture(scope="session")
def suite():
    return {r.number: r for r in run_suite()}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, suite, capsys):
    r = suite[number]
    with capsys.disabled():
        print("\n" + format_line(r))
    assert r.passed, r.summary
