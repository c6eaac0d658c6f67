import csv
import math

import numpy as np
import pytest

from nablowup import forcing as fz
from nablowup._expm2 import expm2
from nablowup.blowdown import (blow_down_manifold_point, classical_history, manifold_curve,
                               reconstruct_manifolds, trace_to_zero_time, write_cloud_csv)
from nablowup.errors import SingularChart
from nablowup.linearflow import spectral_split
from nablowup.lpsolver import LPConfig, build_manifold_chart
from nablowup.nonlinear import build_rhs
from nablowup.polyfield import BlowupChart, PolyMap2
from nablowup.segspace import Segment, TailTerm


def setup(fu, fv):
    rhs = build_rhs((PolyMap2.parse(fu, fv), PolyMap2.zero(), 1), fz.zero())
    split = spectral_split(rhs.A)
    return rhs, split, LPConfig.auto(rhs, split, 1.0)


QUAD = setup("-u", "2*v + u^2")
LINEAR = setup("-u", "2*v")


def test_constant_segment():
    c, d = 0.2, -0.3
    pt = blow_down_manifold_point(Segment.constant([c, d], Theta=2.0), 1.5, 1)
    assert (pt.x, pt.y) == pytest.approx((c, c * d), rel=1e-15)
    assert pt.tau == pytest.approx(1.5 / c, rel=1e-12)
    pt2 = blow_down_manifold_point(Segment.constant([c, d], Theta=1.0), 3.0, 2)
    assert pt2.tau == pytest.approx(3.0 / c ** 2, rel=1e-12)
    assert pt.side == "+"
    assert blow_down_manifold_point(Segment.constant([-c, d]), 0.5, 1).side == "-"


def test_exponential_history():
    # u(s) = 0.1 e^{-s} on [-sigma, 0]: tau = (1 - e^{-sigma}) / 0.1
    theta = np.linspace(-3.0, 0.0, 3001)
    seg = Segment(theta, np.column_stack([0.1 * np.exp(-theta), np.zeros_like(theta)]),
                  (TailTerm("linear", [0.1 * math.exp(3.0), 0.0], -np.eye(2)),))
    for sigma in (0.5, 2.0, 3.0, 4.0):
        pt = blow_down_manifold_point(seg, sigma, 1)
        assert pt.tau == pytest.approx((1 - math.exp(-sigma)) / 0.1, rel=1e-6)


def test_singular_chart():
    with pytest.raises(SingularChart):
        blow_down_manifold_point(Segment.zeros(), 1.0, 1)
    theta = np.array([-1.0, 0.0])
    with pytest.raises(SingularChart):
        blow_down_manifold_point(Segment(theta, [[-0.1, 0.0], [0.1, 0.0]]), 1.0, 1)
    rhs, split, cfg = QUAD
    with pytest.raises(SingularChart):
        classical_history([0.0, 0.0], 1.0, cfg, rhs, split)


def test_mirror_symmetry():
    # f is invariant under u -> -u, so the two half-plane clouds are point reflections
    rhs, split, cfg = QUAD
    f = 0.5 * cfg.r
    mc = build_manifold_chart(1.0, [[f, 0.0], [-f, 0.0]], cfg, rhs, split)
    clouds = reconstruct_manifolds(mc, cfg, rhs, split)
    (p,), (m,) = clouds["+"], clouds["-"]
    assert (m.x, m.y) == pytest.approx((-p.x, -p.y), rel=1e-9, abs=1e-18)
    assert m.tau == pytest.approx(p.tau, rel=1e-9)
    assert clouds["excluded_radius"] == pytest.approx(abs(p.x), rel=1e-12)


def test_classical_history_on_manifold():
    rhs, split, cfg = QUAD
    hist = classical_history([0.5 * cfg.r, 0.0], 1.0, cfg, rhs, split)
    assert hist.head_residual <= 1e-12
    xi = hist.segment.head[0]
    # on the quadratic manifold v = -u^2 / 4 up to the solver's O(dt^2) error
    assert hist.segment.head[1] == pytest.approx(-xi ** 2 / 4, rel=2e-3)
    assert hist.tau > 0
    c = manifold_curve(hist, rhs)
    assert c["t"][0] == 1.0 and np.all(np.diff(c["tau"]) > 0)


def test_trace_to_zero_time():
    rhs, split, cfg = LINEAR
    head = np.array([0.05, 0.01])
    seg = Segment.constant(head, Theta=3.0)
    pt, flags = trace_to_zero_time(seg, 0.0, rhs)
    assert np.array_equal(pt, head) and flags == ("uncharacterized",)
    for sigma in (0.5, 2.0):
        pt, _ = trace_to_zero_time(seg, sigma, rhs)
        assert np.allclose(pt, expm2(split.A, -sigma) @ head, rtol=1e-7)


def test_trace_round_trip():
    from nablowup.integrator import integrate_desingularized
    rhs, split, cfg = QUAD
    start = np.array([0.04, 0.003])
    fwd = integrate_desingularized(rhs, start, 1.5)
    seg = Segment.from_samples(fwd.t - 1.5, fwd.states, tail="frozen")
    back, _ = trace_to_zero_time(seg, 1.5, rhs)
    assert np.allclose(back, start, rtol=1e-7, atol=1e-10)


def test_empty_chart_and_csv(tmp_path):
    rhs, split, cfg = QUAD
    mc = build_manifold_chart(1.0, [[0.0, 0.0]], cfg, rhs, split)
    clouds = reconstruct_manifolds(mc, cfg, rhs, split)
    assert clouds["+"] == [] and clouds["-"] == [] and math.isnan(clouds["excluded_radius"])
    pts = [blow_down_manifold_point(Segment.constant([0.1, 0.2]), 1.0, 1, BlowupChart(), 1, source=(0, 1.0))]
    path = tmp_path / "cloud.csv"
    write_cloud_csv(path, pts)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["sigma", "psi_index", "x", "y", "tau", "side", "flags"]
    assert float(rows[1][3]) == pytest.approx(0.1 * 1.2)
