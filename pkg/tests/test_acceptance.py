"""Acceptance suite: one pass/fail line per criterion.

Run ``pytest tests/test_acceptance.py`` (lines are printed even without ``-s``)
or ``python tests/test_acceptance.py`` for the bare report.  Set
``HYPMAPS_WORKERS`` to evaluate criteria in parallel.
"""

import os
import sys

import pytest

from hypmaps.acceptance import CRITERIA, run_all


def _workers() -> int:
    return max(1, int(os.environ.get("HYPMAPS_WORKERS", "1")))


@pytest.fixture(scope="module")
def results():
    return {r.number: r for r in run_all(sorted(CRITERIA), _workers())}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, results, capsys):
    res = results[number]
    with capsys.disabled():
        print("\n" + res.line(), end="")
    assert res.passed, res.line()


if __name__ == "__main__":
    outcome = run_all(sorted(CRITERIA), _workers())
    for res in outcome:
        print(res.line())
    sys.exit(0 if all(r.passed for r in outcome) else 1)
