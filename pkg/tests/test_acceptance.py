"""The twelve acceptance criteria at their stated tolerances.

Each case prints one ``PASS``/``FAIL`` line (visible without ``-s``).
"""
import pytest

from nablowup.verify import CRITERIA, run_acceptance


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1), ids=lambda k: f"C{k}")
def test_criterion(number, capsys):
    (res,) = run_acceptance(seed=0, only={number})
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
