"""Acceptance suite: one scenario per criterion, each printing a PASS/FAIL line."""

import pytest

from netsynth.scenarios import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n}")
def test_criterion(number, capsys):
    result = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
