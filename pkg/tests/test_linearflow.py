import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from nablowup._expm2 import expm2
from nablowup.errors import NegativeTimeOutsideEu, NonHyperbolic
from nablowup.linearflow import (apply_V, eu_segment, eval_V, identity_residual, phi_functions,
                                 project_su, spectral_split, voc_convolve)
from nablowup.segspace import Segment, bnorm, make_grid

SADDLE = spectral_split(np.diag([-1.0, 2.0]))


@st.composite
def hyperbolic(draw):
    """Conjugated normal forms with every real part at least 0.2 away from 0."""
    mag = st.floats(0.2, 3.0)
    kind = draw(st.sampled_from(["saddle", "node", "focus"]))
    a, b = draw(mag), draw(mag)
    s = draw(st.sampled_from([-1.0, 1.0]))
    if kind == "saddle":
        D = np.diag([-a, b])
    elif kind == "node":
        D = s * np.diag([a, a + b])
    else:
        D = np.array([[s * a, b], [-b, s * a]])
    c = np.array(draw(st.lists(st.floats(-0.8, 0.8), min_size=4, max_size=4))).reshape(2, 2)
    P = np.eye(2) + c
    if abs(np.linalg.det(P)) < 0.2:
        P = np.eye(2)
    return P @ D @ np.linalg.inv(P)


def test_diagonal_split():
    assert np.array_equal(SADDLE.P_s, np.diag([1.0, 0.0]))
    assert np.array_equal(SADDLE.P_u, np.diag([0.0, 1.0]))
    assert SADDLE.alpha == pytest.approx(1.0, abs=1e-5)


def test_triangular_split():
    sp = spectral_split(np.array([[-1.0, 3.0], [0.0, 2.0]]))
    assert np.array_equal(sp.P_s + sp.P_u, np.eye(2))
    assert np.allclose(sp.P_u @ np.array([1.0, 1.0]), [1.0, 1.0])
    assert np.linalg.matrix_rank(sp.P_u) == 1


def test_center_rejected():
    with pytest.raises(NonHyperbolic):
        spectral_split(np.array([[0.0, 1.0], [-1.0, 0.0]]))


@given(hyperbolic(), st.floats(-8, 8))
def test_expm2_matches_scipy(A, t):
    ref = expm(t * A)
    assert np.allclose(expm2(A, t), ref, rtol=1e-9, atol=1e-12 * max(1.0, np.abs(ref).max()))


@given(hyperbolic())
def test_projector_algebra(A):
    sp = spectral_split(A)
    for P in (sp.P_s, sp.P_u):
        assert np.allclose(P @ P, P, atol=1e-12)
    assert np.allclose(sp.P_s @ sp.P_u, 0.0, atol=1e-12)
    assert np.allclose(sp.P_s @ A, A @ sp.P_s, atol=1e-12)


@given(hyperbolic(), st.floats(0.0, 3.0))
def test_exponential_estimates(A, t):
    sp = spectral_split(A)
    two = lambda M: np.linalg.norm(M, 2)
    assert two(expm(t * A) @ sp.P_s) <= sp.C * math.exp(-sp.alpha * t) * (1 + 1e-9)
    assert two(expm(-t * A) @ sp.P_u) <= sp.C * math.exp(-sp.alpha * t) * (1 + 1e-9)


def _seg(rng):
    th = make_grid(3.0, h0=1e-2, hmax=0.1)
    a, w = rng.normal(size=2), rng.uniform(0.5, 2.0)
    return Segment(th, np.column_stack([a[0] * np.sin(w * th) + 1, a[1] * np.cos(th)]),
                   ())


def test_semigroup_basics():
    rng = np.random.default_rng(0)
    phi = _seg(rng)
    assert apply_V(0.0, phi, SADDLE) is phi
    for t in (0.3, 1.7):
        assert np.allclose(apply_V(t, phi, SADDLE).head, expm(t * SADDLE.A) @ phi.head)
        s = 0.6
        two = apply_V(s, apply_V(t, phi, SADDLE), SADDLE)
        assert np.abs(two.values - eval_V(s + t, phi, two.theta, SADDLE)).max() <= 1e-10


def test_negative_time_needs_eu():
    phi = Segment.constant([1.0, 1.0], Theta=2.0)
    with pytest.raises(NegativeTimeOutsideEu):
        apply_V(-1.0, phi, SADDLE)
    eu = eu_segment([0.0, 1.0], SADDLE, make_grid(2.0))
    back = apply_V(-1.0, eu, SADDLE)
    assert np.allclose(back.head, [0.0, math.exp(-2.0)])


def test_projection_examples():
    th = make_grid(2.0)
    stable = Segment.constant([1.0, 0.0], theta=th)
    s, u = project_su(stable, SADDLE)
    assert not np.any(u.values) and np.array_equal(s.values, stable.values)
    ones = Segment.constant([1.0, 1.0], theta=th)
    s, u = project_su(ones, SADDLE)
    assert np.allclose(u.values, np.column_stack([np.zeros(th.size), np.exp(2 * th)]), atol=1e-15)
    assert np.allclose(s.values, np.column_stack([np.ones(th.size), 1 - np.exp(2 * th)]), atol=1e-15)
    s2, u2 = project_su(s, SADDLE)
    assert bnorm(u2, SADDLE.lam) <= 1e-12
    assert bnorm((s2 - s).simplified(), SADDLE.lam) <= 1e-12


def test_voc_homogeneous_and_closed_form():
    psi = Segment.constant([0.3, -0.2], Theta=1.0)
    seg = voc_convolve(psi, lambda s: np.zeros(np.shape(s) + (2,)), 0.5, 2.0, SADDLE)
    ref = apply_V(1.5, psi, SADDLE)
    assert np.allclose(seg(ref.theta), ref.values, atol=1e-12)
    zero = Segment.zeros(1.0)
    for t in (0.5, 1.0, 3.0):
        x = voc_convolve(zero, lambda s: np.broadcast_to([1.0, 0.0], np.shape(s) + (2,)), 0.0, t, SADDLE)
        assert np.allclose(x.head, [1 - math.exp(-t), 0.0], atol=1e-13)


def test_voc_against_time_stepping():
    rng = np.random.default_rng(5)
    A = np.array([[0.3, 1.2], [0.9, -0.8]])
    sp = spectral_split(A)
    c = rng.normal(size=2)
    H = lambda s: np.asarray(c) * np.cos(2 * np.asarray(s, dtype=float))[..., None]
    x0 = rng.normal(size=2)
    seg = voc_convolve(Segment.constant(x0), H, 0.2, 1.7, sp)
    ode = solve_ivp(lambda s, x: A @ x + H(s), (0.2, 1.7), x0, rtol=1e-12, atol=1e-14)
    assert np.allclose(seg.head, ode.y[:, -1], atol=1e-6)


def test_phi_functions():
    A = np.array([[-1.0, 0.5], [0.0, 2.0]])
    E, p1, p2 = phi_functions(A, 0.1)
    assert np.allclose(E, expm(0.1 * A))
    # phi1(Z) Z = e^Z - I
    assert np.allclose(p1 @ (0.1 * A), E - np.eye(2))
    assert np.allclose(p2 @ (0.1 * A), p1 - np.eye(2))


def _homogeneous(psi, sigma):
    return lambda t: apply_V(t - sigma, psi, SADDLE)


def test_identity_residual_homogeneous_and_bumped():
    psi = Segment.constant([0.2, 0.0], Theta=2.0)
    sigma = 1.0
    R0 = lambda s: np.zeros(np.shape(s) + (2,))
    nodes = np.linspace(sigma, 41.0, 801)
    rep = identity_residual(_homogeneous(psi, sigma), psi, sigma, R0, SADDLE, 41.0, [1.0, 2.0, 3.0],
                            nodes=nodes)
    assert rep.residual <= 1e-9

    def bumped(t):
        seg = _homogeneous(psi, sigma)(t)
        if t == 2.0:
            vals = seg.values.copy()
            vals[-1] += [0.1, 0.0]
            return Segment(seg.theta, vals, seg.tail)
        return seg

    rep = identity_residual(bumped, psi, sigma, R0, SADDLE, 41.0, [1.0, 2.0, 3.0], nodes=nodes)
    assert rep.residual >= 0.05
