import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nablowup import forcing as fz
from nablowup.errors import EtaRatioTooSmall
from nablowup.linearflow import spectral_split
from nablowup.nonlinear import (DK_eval, K_eval, R_eval, build_rhs, contraction_bound, cutoff,
                                gamma_bound, zeta_estimate, zeta_ladder)
from nablowup.polyfield import PolyMap2
from nablowup.segspace import Segment, bnorm, make_grid

F_WORKED = PolyMap2.parse("-u - 2*u*v", "3*v + 3*v^2")
G_WORKED = PolyMap2.parse("0", "u")
H_WORKED = fz.exponential(0.01, 2.0)
RHS = build_rhs((F_WORKED, G_WORKED, 1), H_WORKED)
SPLIT = spectral_split(RHS.A)
TH = make_grid(2.0)


def seg(u, v):
    return Segment(TH, np.column_stack([np.broadcast_to(u, TH.shape), np.broadcast_to(v, TH.shape)]), ())


def test_worked_constants():
    assert RHS.D == 0.5
    assert RHS.M == pytest.approx(1.65, rel=1e-12)
    assert np.array_equal(RHS.A, np.diag([-1.0, 3.0]))


def test_singular_branch_is_f():
    phi = seg(np.abs(TH + 0.5) * 0.2, 0.05)
    x = phi.head
    assert np.array_equal(K_eval(phi, 1.0, RHS), F_WORKED.evalf(*x))


@given(st.floats(0.01, 0.2), st.floats(-0.1, 0.1), st.floats(0.1, 2.0))
def test_constant_history(c, d, t):
    phi = seg(c, d)
    want = F_WORKED.evalf(c, d) + G_WORKED.evalf(c, d) * H_WORKED.h(t / c)
    assert np.allclose(K_eval(phi, t, RHS), want, rtol=1e-12, atol=1e-300)


def test_continuity_toward_singular():
    base = np.abs(TH + 0.5) * 0.4
    sing = K_eval(seg(base, 0.05), 1.0, RHS)
    dists = [np.linalg.norm(K_eval(seg(base + 1.0 / n, 0.05), 1.0, RHS) - sing) for n in range(2, 40)]
    assert all(b <= a for a, b in zip(dists, dists[1:]))
    assert dists[-1] < dists[0]


def test_DK_branches():
    d = seg(np.linspace(0.1, 0.3, TH.size), 0.2)
    sing = seg(np.abs(TH + 0.5), 0.05)
    x = sing.head
    Jf = np.asarray(F_WORKED.jacobian(float(x[0]), float(x[1])))
    chi = cutoff(np.linalg.norm(x), RHS.D)
    want = RHS.A @ d.head + chi * (Jf - RHS.A) @ d.head
    assert np.allclose(DK_eval(sing, 1.0, d, RHS), want, atol=1e-15)
    unforced = replace(RHS, forcing=fz.zero())
    reg = seg(0.1, 0.05)
    Jf = np.asarray(F_WORKED.jacobian(0.1, 0.05))
    assert np.allclose(DK_eval(reg, 1.0, d, unforced), Jf @ d.head, atol=1e-15)


def test_DK_central_differences():
    big = replace(RHS, forcing=fz.exponential(0.5, 2.0))
    rng = np.random.default_rng(0)
    for _ in range(5):
        phi = seg(0.1 + 0.02 * np.sin(3 * TH + rng.uniform()), 0.05 * np.cos(TH))
        d = seg(rng.normal() * np.exp(TH), rng.normal() * np.ones(TH.size))
        eps = 1e-6
        fd = (K_eval(phi + eps * d, 0.3, big) - K_eval(phi - eps * d, 0.3, big)) / (2 * eps)
        dk = DK_eval(phi, 0.3, d, big)
        assert np.linalg.norm(fd - dk) <= 1e-5 * np.linalg.norm(dk)


def test_remainder_trivial_cases():
    assert np.array_equal(R_eval(Segment.zeros(1.0), 1.0, RHS), [0.0, 0.0])
    lin = build_rhs((PolyMap2.parse("-u", "2*v"), PolyMap2.zero(), 1), fz.zero())
    assert np.array_equal(R_eval(seg(0.3, -0.2), 1.0, lin), [0.0, 0.0])
    assert zeta_estimate(0.1, 1.0, lin).zeta == 0.0


def test_remainder_lipschitz_against_zeta():
    delta, sigma0 = 0.0078125, 1.0
    zeta = zeta_estimate(delta, sigma0, RHS, SPLIT).zeta
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(200):
        segs = []
        for _ in range(2):
            a = rng.uniform(0.05, 1.0) * delta * rng.choice([-1, 1])
            b = rng.uniform(-1, 1) * delta
            p = seg(a * (1 + 0.2 * np.sin(TH)) / 1.2, b * np.cos(TH))
            segs.append(p * (0.99 * delta / max(bnorm(p, SPLIT.lam), 1e-300)) if bnorm(p, SPLIT.lam) > delta else p)
        dn = bnorm(segs[0] - segs[1], SPLIT.lam)
        if dn == 0:
            continue
        t = sigma0 + rng.uniform(0, 3)
        dr = np.linalg.norm(R_eval(segs[0], t, RHS, SPLIT) - R_eval(segs[1], t, RHS, SPLIT))
        worst = max(worst, dr / dn)
    assert worst <= zeta


def test_gamma_formula():
    assert gamma_bound(1.0, 1.0, 1.0, 2.0, 2.0) == pytest.approx(0.25)
    r = np.linspace(0.1, 3, 7)
    assert np.allclose(gamma_bound(r, 1.0, 1.0, 2.0, 2.0), (r / (r + 1)) ** 2 / r)


def test_ladder_monotone_and_contracting():
    lad = zeta_ladder(1.0, RHS, SPLIT, SPLIT.alpha / 2)
    assert np.all(np.diff(lad.zetas[:9]) <= 0)
    assert lad.delta0 == 0.0078125
    q = contraction_bound(zeta_estimate(lad.delta0, 1.0, RHS, SPLIT).zeta, SPLIT, SPLIT.alpha / 2)
    assert q < 0.5


@pytest.mark.parametrize("M", [2.0, 4.0])
def test_eta_ratio(M):
    with pytest.raises(EtaRatioTooSmall):
        zeta_estimate(0.01, 1.0, replace(RHS, M=M), SPLIT)


def test_build_rhs_requires_equilibrium():
    with pytest.raises(ValueError):
        build_rhs((PolyMap2.parse("1 + u", "v"), PolyMap2.zero(), 1), fz.zero())
