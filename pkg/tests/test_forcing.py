import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nablowup import forcing as fz
from nablowup.forcing import ForcingFn, verify_envelope

GRID = np.linspace(0.0, 10.0, 4001)


def test_exponential_envelope_attained():
    fn = fz.exponential(1.0, 1.0)
    rep = verify_envelope(fn, GRID)
    assert rep.passed
    assert rep.max_h_weighted == pytest.approx(1.0, rel=1e-15)
    assert rep.max_hprime_weighted == pytest.approx(1.0, rel=1e-15)


def test_underclaimed_trig_envelope_fails():
    # |h'| e^{2 tau} = |cos - 2 sin| reaches sqrt(5) > 2
    exact = fz.exp_trig(1.0, 2.0, 1.0)
    under = ForcingFn(exact.h, exact.hprime, 2.0, 2.0)
    rep = verify_envelope(under, GRID)
    assert not rep.passed
    assert rep.max_hprime_weighted == pytest.approx(math.sqrt(5), rel=1e-5)
    assert verify_envelope(exact, GRID).passed


def test_zero_forcing():
    rep = verify_envelope(fz.zero(), GRID)
    assert rep.passed and rep.max_h_weighted == 0.0 and rep.max_hprime_weighted == 0.0
    assert fz.zero().decay_eta == math.inf


@given(st.floats(-5, 5).filter(lambda a: abs(a) > 1e-6), st.floats(0.1, 4.0))
def test_exponential_family_certified(a, eta):
    assert verify_envelope(fz.exponential(a, eta), GRID).passed


@given(st.floats(-3, 3).filter(lambda a: abs(a) > 1e-6), st.floats(0.1, 3.0), st.floats(0.0, 10.0),
       st.floats(0, 6.3))
def test_exp_trig_family_certified(a, eta, om, ph):
    assert verify_envelope(fz.exp_trig(a, eta, om, ph), GRID).passed


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=4), st.floats(0.5, 3.0))
def test_exp_poly_family_certified(coeffs, eta):
    assert verify_envelope(fz.exp_poly(coeffs, eta), np.linspace(0, 60, 6001)).passed


def test_tabulated_certified_and_continued():
    taus = np.linspace(0, 3, 13)
    fn = fz.tabulated(taus, np.exp(-taus) * np.cos(taus), 0.5)
    assert verify_envelope(fn, np.linspace(0, 20, 5001)).passed
    assert fn.h(5.0) == pytest.approx(fn.h(3.0) * math.exp(-0.5 * 2.0))


def test_tabulated_rejects_negative_start():
    with pytest.raises(ValueError):
        fz.tabulated([-1.0, 0.0], [0.0, 1.0], 1.0)


def test_domain_checks():
    fn = fz.exp_poly([1.0], 1.0)
    with pytest.raises(ValueError):
        verify_envelope(fn, [-1.0, 0.0])


def test_time_reversal():
    fn = fz.exp_poly([1.0, 1.0], 2.0)
    rev = fz.time_reversed(fn)
    assert rev.domain == "backward-only"
    assert rev.h(-1.5) == fn.h(1.5)
    assert verify_envelope(rev, -GRID).passed


def test_from_spec_rejects_undercut_H():
    with pytest.raises(ValueError):
        fz.from_spec({"family": "exponential", "params": {"a": 1.0, "eta": 2.0}, "H": 0.5})
    fn = fz.from_spec({"family": "exponential", "params": {"a": 0.01, "eta": 2.0}})
    assert fn.envelope_H == pytest.approx(0.02)


def test_unknown_family():
    with pytest.raises(ValueError):
        fz.from_spec({"family": "bogus"})
