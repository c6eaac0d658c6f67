import math

import numpy as np
import pytest

from nablowup import forcing as fz
from nablowup.errors import AxisApproach
from nablowup.integrator import (integrate_desingularized, integrate_original, lyapunov_exponents,
                                 orbit_compare, to_original)
from nablowup.polyfield import DesingularizedField, PolyMap2
from nablowup.scenario import WORKED_EXAMPLE, build_pipeline, scenario_from_dict
from nablowup.timewarp import WarpPair, rho_from_trajectory


def dfield(fu, fv, kappa=1, g=("0", "0")):
    return DesingularizedField(PolyMap2.parse(fu, fv), PolyMap2.parse(*g), kappa, True)


def test_linear_closed_form():
    tr = integrate_desingularized(dfield("-u", "v"), (0.5, 0.1), 2.0)
    t = tr.t
    assert np.allclose(tr.states[:, 0], 0.5 * np.exp(-t), rtol=1e-7)
    assert np.allclose(tr.states[:, 1], 0.1 * np.exp(t), rtol=1e-7)
    # rho = int 2 e^s ds
    assert np.allclose(tr.rho, 2 * np.expm1(t), rtol=1e-7)


def test_rho_state_matches_quadrature():
    tr = integrate_desingularized(dfield("-u - u*v", "v - u^2"), (0.3, 0.05), 1.5)
    wp = rho_from_trajectory(tr, 1)
    assert np.max(np.abs(wp.rho(tr.t) - tr.rho) / (1 + tr.rho)) <= 1e-8


def test_worked_orbit_equivalence():
    pl = build_pipeline(scenario_from_dict(WORKED_EXAMPLE), with_cfg=False)
    scn = pl.scenario
    for p in scn.simulate["init"]:
        tr = integrate_desingularized(pl.dfield, tuple(p), 1.0, forcing=scn.forcing)
        assert tr.status == "ok" and np.all(tr.states[:, 0] > 0)
        xy = to_original(tr, pl.dfield.chart)
        orig = integrate_original(scn.F, scn.G, scn.forcing, xy.states[0], (0.0, float(tr.rho[-1])))
        assert orbit_compare(orig, xy, WarpPair(tr.t, tr.rho)) <= 1e-6


def test_worked_eigen_rate():
    # near the saddle (0, 1) the u-component decays like e^{-t}
    pl = build_pipeline(scenario_from_dict(WORKED_EXAMPLE), with_cfg=False)
    tr = integrate_desingularized(pl.centred, (1e-6, 0.0), 3.0, t_eval=np.linspace(0, 3, 31))
    slope = np.polyfit(tr.t, np.log(tr.states[:, 0]), 1)[0]
    assert slope == pytest.approx(-1.0, abs=1e-4)


def test_original_decay():
    F = PolyMap2.parse("-x", "-y", var_names=("x", "y"))
    tr = integrate_original(F, None, None, (1.0, -2.0), (0.0, 5.0))
    assert np.allclose(tr.states[-1], [math.exp(-5), -2 * math.exp(-5)], rtol=1e-6)


def test_zero_forcing_is_ignored():
    d_plain = dfield("-u", "v + u", g=("0", "0"))
    d_g = dfield("-u", "v + u", g=("u", "v"))
    a = integrate_desingularized(d_plain, (0.4, 0.2), 1.0, t_eval=[0.5, 1.0])
    b = integrate_desingularized(d_g, (0.4, 0.2), 1.0, forcing=fz.zero(), t_eval=[0.5, 1.0])
    assert np.array_equal(a.states, b.states)


@pytest.mark.parametrize("A, expected", [(np.diag([-1.0, 2.0]), (-1.0, 2.0)),
                                         (np.diag([1.0, -3.0]), (-3.0, 1.0)),
                                         (np.array([[0.0, 1.0], [-1.0, 0.0]]), (0.0, 0.0))])
def test_lyapunov(A, expected):
    assert lyapunov_exponents(A, 10.0) == pytest.approx(expected, abs=1e-6)


def test_lyapunov_time_dependent():
    lo, hi = lyapunov_exponents(lambda t: np.diag([-1.0 + math.cos(t), 2.0]), 2 * math.pi)
    assert (lo, hi) == pytest.approx((-1.0, 2.0), abs=1e-6)
    with pytest.raises(ValueError):
        lyapunov_exponents(np.eye(2), 0.0)


def test_orbit_compare_identity():
    tr = integrate_desingularized(dfield("-u", "v"), (0.5, 0.1), 1.0)
    assert orbit_compare(tr, tr, WarpPair(tr.t, tr.t)) == 0.0


def test_axis_approach():
    d = dfield("-u^2 - 1e-3", "0")   # crosses u = 0 in finite time
    tr = integrate_desingularized(d, (0.1, 0.0), 200.0)
    assert tr.status == "axis_approach"
    with pytest.raises(AxisApproach):
        integrate_desingularized(d, (0.1, 0.0), 200.0, strict=True)
    with pytest.raises(ValueError):
        integrate_desingularized(d, (0.0, 0.3), 1.0)
