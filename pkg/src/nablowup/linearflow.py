"""Linear semigroup ``V(t)`` on segments, the splitting ``E^s + E^u`` and the
variation-of-constants machinery.

``[V(t) phi](theta)`` is ``phi(t + theta)`` for ``theta < -t`` and
``e^{(t + theta) A} phi(0)`` on ``[-t, 0]``. ``E^u`` is the set of segments
``e^{theta A} p`` with ``p`` in the unstable eigenspace; ``Pi^u phi`` is the
element of ``E^u`` through ``P_u phi(0)`` and ``Pi^s = I - Pi^u``.
Point inhomogeneities (limits of tent approximants) enter only through
matrix-exponential convolutions, which are evaluated in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from ._expm2 import expm2
from .errors import NegativeTimeOutsideEu, NonHyperbolic
from .segspace import BParams, Segment, TailTerm, bnorm, make_grid

__all__ = [
    "HyperbolicSplit",
    "spectral_split",
    "expm2",
    "phi_functions",
    "eu_segment",
    "apply_V",
    "eval_V",
    "project_su",
    "voc_convolve",
    "identity_residual",
    "IdentityReport",
    "HYPERBOLIC_TOL",
    "ALPHA_MARGIN",
]

HYPERBOLIC_TOL = 1e-9
ALPHA_MARGIN = 1e-6
C_SAFETY = 1.05
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class HyperbolicSplit:
    """Linearization data at the recentred equilibrium.

    ``lam`` is the phase-space weight; ``L`` is a certified upper bound of
    ``|Pi^s| + |Pi^u|`` and ``L_probe`` the largest value seen on probes.
    """

    A: np.ndarray
    P_s: np.ndarray
    P_u: np.ndarray
    C: float
    alpha: float
    L: float
    K: float
    lam: float
    eig: np.ndarray
    c_u: float
    L_probe: float = float("nan")

    @property
    def dim_u(self) -> int:
        return int(round(np.trace(self.P_u)))

    @property
    def bparams(self) -> BParams:
        return BParams(self.lam)

    def exp(self, t) -> np.ndarray:
        return expm2(self.A, t)

    def eu_weighted_sup(self, p) -> float:
        """``sup_{theta <= 0} e^{lam theta} |e^{theta A} p|`` for ``p`` in the
        unstable eigenspace."""
        p = np.asarray(p, dtype=float)
        if not np.any(p):
            return 0.0
        th = _eu_probe_thetas(self.alpha)
        vals = np.linalg.norm(expm2(self.A, th) @ p, axis=1) * np.exp(self.lam * th)
        return float(vals.max())

    def report(self) -> dict:
        return {
            "A": self.A.tolist(), "eigenvalues": [complex(e).real if abs(complex(e).imag) < 1e-300
                                                  else [complex(e).real, complex(e).imag] for e in self.eig],
            "P_s": self.P_s.tolist(), "P_u": self.P_u.tolist(), "C": self.C, "alpha": self.alpha,
            "lambda": self.lam, "L": self.L, "L_probe": self.L_probe, "K": self.K, "c_u": self.c_u,
        }


def _eu_probe_thetas(alpha: float) -> np.ndarray:
    return -np.concatenate([[0.0], np.geomspace(1e-4, 60.0 / alpha, 300)])


def _fit_grid(alpha: float, gap: float) -> np.ndarray:
    far = max(50.0 / alpha, 50.0 / max(gap, 1e-12))
    return np.union1d(np.linspace(0.0, 5.0 / alpha, 2001), np.geomspace(5.0 / alpha, far, 400))


def spectral_split(A, lam: float | None = None, margin: float = ALPHA_MARGIN,
                   probes: int = 64) -> HyperbolicSplit:
    """Spectral projections and the constants ``C, alpha, L, K`` for ``A``.

    ``alpha = min |Re eig| - margin``; ``C`` is the smallest constant that
    validates ``|e^{tA} P_s| <= C e^{-alpha t}`` (``t >= 0``) and
    ``|e^{-tA} P_u| <= C e^{-alpha t}`` on a fitting grid, at least 1, times
    1.05. The phase-space weight defaults to ``lam = alpha``.
    """
    A = np.asarray(A, dtype=float).reshape(2, 2)
    eig = np.linalg.eigvals(A)
    re = eig.real
    if np.any(np.abs(re) < HYPERBOLIC_TOL):
        raise NonHyperbolic(f"eigenvalues {eig} touch the imaginary axis")
    I = np.eye(2)
    if np.all(re < 0):
        P_s, P_u = I.copy(), np.zeros((2, 2))
    elif np.all(re > 0):
        P_s, P_u = np.zeros((2, 2)), I.copy()
    else:
        mu_s, mu_u = float(re.min()), float(re.max())
        P_s = (A - mu_u * I) / (mu_s - mu_u)
        P_u = I - P_s
    alpha = float(np.abs(re).min()) - margin
    if alpha <= 0:
        raise NonHyperbolic("spectral gap below the alpha margin")
    lam = alpha if lam is None else float(lam)
    gap = float(np.abs(re).min()) - alpha

    ts = _fit_grid(alpha, gap)
    two = lambda M: np.linalg.norm(M, ord=2, axis=(-2, -1))
    if np.all(re < 0):
        # e^{alpha t} e^{tA} = e^{t(A + alpha I)} stays bounded
        fit_s, fit_u = float(two(expm2(A + alpha * I, ts)).max()), 0.0
        c_u = 0.0
    elif np.all(re > 0):
        fit_s, fit_u = 0.0, float(two(expm2(-(A - alpha * I), ts)).max())
        c_u = float(two(expm2(A + lam * I, -ts)).max())
    else:
        # rank-one saddle projectors: e^{tA} P = e^{mu t} P exactly
        fit_s, fit_u = float(two(P_s)), float(two(P_u))
        c_u = float(two(P_u))
    C = C_SAFETY * max(1.0, fit_s, fit_u)
    L = 1.0 + 2.0 * c_u
    split = HyperbolicSplit(A, P_s, P_u, C, alpha, L, 1.0, lam, eig, c_u)
    return _with_probe_L(split, probes)


def _with_probe_L(split: HyperbolicSplit, probes: int) -> HyperbolicSplit:
    """Lower estimate of ``|Pi^s| + |Pi^u|`` over unit-norm probe segments
    (constant heads, and heads concentrated at 0)."""
    best = 0.0
    for k in range(probes):
        ang = math.pi * k / probes
        e = np.array([math.cos(ang), math.sin(ang)])
        for phi in (Segment.constant(e, Theta=1.0), _tent(e, split.lam)):
            n = bnorm(phi, split.lam)
            s, u = project_su(phi, split)
            best = max(best, (bnorm(s, split.lam) + bnorm(u, split.lam)) / n)
    return HyperbolicSplit(split.A, split.P_s, split.P_u, split.C, split.alpha, split.L,
                           split.K, split.lam, split.eig, split.c_u, best)


def _tent(e, lam):
    th = np.array([-1.0, -1e-3, 0.0])
    return Segment(th, np.array([0 * e, 0 * e, e]), ())


def phi_functions(A, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(e^Z, phi1(Z), phi2(Z))`` for ``Z = hA``, from one exponential of the
    augmented 6x6 block matrix."""
    Z = np.asarray(A, dtype=float) * h
    big = np.zeros((6, 6))
    big[:2, :2] = Z
    big[:2, 2:4] = np.eye(2)
    big[2:4, 4:6] = np.eye(2)
    E = expm(big)
    return E[:2, :2], E[:2, 2:4], E[:2, 4:6]


def eu_segment(p, split: HyperbolicSplit, theta: np.ndarray) -> Segment:
    """``theta -> e^{theta A} p`` on ``theta`` with its exact linear tail."""
    theta = np.asarray(theta, dtype=float)
    p = np.asarray(p, dtype=float)
    vals = expm2(split.A, theta) @ p
    tail = (TailTerm("linear", vals[0], split.A, True),) if np.any(p) else ()
    return Segment(theta, vals, tail)


def _in_Eu(phi: Segment, split: HyperbolicSplit, tol: float = 1e-9) -> bool:
    p = phi.head
    ref = eu_segment(split.P_u @ p, split, phi.theta)
    scale = max(1.0, float(np.abs(phi.values).max()))
    if np.abs(split.P_s @ p).max() > tol * scale:
        return False
    if np.abs(ref.values - phi.values).max() > tol * scale:
        return False
    return all(t.kind == "linear" for t in phi.tail)


def eval_V(t: float, phi: Segment, theta, split: HyperbolicSplit) -> np.ndarray:
    """Pointwise ``[V(t) phi](theta)``."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if t < 0:
        if not _in_Eu(phi, split):
            raise NegativeTimeOutsideEu("V(t) with t < 0 needs a segment in E^u")
        out = expm2(split.A, t + th) @ phi.head
    else:
        out = np.empty((th.size, 2))
        past = th < -t
        if np.any(past):
            out[past] = phi(th[past] + t)
        if np.any(~past):
            out[~past] = expm2(split.A, t + th[~past]) @ phi.head
    return out[0] if np.ndim(theta) == 0 else out


def apply_V(t: float, phi: Segment, split: HyperbolicSplit, head_grid: np.ndarray | None = None) -> Segment:
    """``V(t) phi`` as a segment.

    The shifted part keeps ``phi``'s grid points exactly, so composing
    shifts never interpolates; the new head piece ``[-t, 0]`` is sampled on
    ``head_grid`` (geometric refinement toward 0 by default).
    """
    if t == 0:
        return phi
    if t < 0:
        if not _in_Eu(phi, split):
            raise NegativeTimeOutsideEu("V(t) with t < 0 needs a segment in E^u")
        p = expm2(split.A, t) @ phi.head
        return eu_segment(p, split, phi.theta)
    hg = make_grid(t) if head_grid is None else np.asarray(head_grid, dtype=float)
    hg = hg[hg >= -t]
    shifted = phi.theta - t
    grid = np.union1d(shifted, np.union1d(hg, [-t]))
    vals = np.empty((grid.size, 2))
    past = grid < -t
    vals[past] = phi(grid[past] + t)
    vals[~past] = expm2(split.A, t + grid[~past]) @ phi.head
    return Segment(grid, vals, phi.tail)


def project_su(phi: Segment, split: HyperbolicSplit) -> tuple[Segment, Segment]:
    """``(Pi^s phi, Pi^u phi)``; ``Pi^u phi = e^{theta A} P_u phi(0)``."""
    p = split.P_u @ phi.head
    # roundoff-level heads are not in E^u to working precision
    if np.abs(p).max() <= 1e-14 * max(float(np.abs(phi.values).max()), 1e-300):
        p = np.zeros(2)
    phi_u = eu_segment(p, split, phi.theta)
    phi_s = phi - phi_u
    return phi_s, phi_u


def _eval_H(H: Callable, s: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(H(s), dtype=float)
        if out.shape == (s.size, 2):
            return out
    except Exception:
        pass
    return np.array([np.asarray(H(si), dtype=float).reshape(2) for si in s])


def _forced_flow(A, x0, H, taus: np.ndarray, sub: int = 1) -> np.ndarray:
    """``x(tau_k)`` for ``x' = A x + H(tau)``, ``x(tau_0) = x0``; each step is
    an 8-point Gauss-Legendre convolution on ``sub`` subintervals."""
    xs = np.empty((taus.size, 2))
    xs[0] = x0
    for k in range(taus.size - 1):
        a, b = taus[k], taus[k + 1]
        edges = np.linspace(a, b, sub + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])[:, None] + 0.5 * np.diff(edges)[:, None] * _GL_X
        wts = (0.5 * np.diff(edges)[:, None] * _GL_W).ravel()
        s = mids.ravel()
        Hs = _eval_H(H, s)
        ker = expm2(A, b - s)
        conv = np.einsum("n,nij,nj->i", wts, ker, Hs)
        xs[k + 1] = expm2(A, b - a) @ xs[k] + conv
    return xs


def voc_convolve(psi: Segment, H: Callable, sigma: float, t: float, split: HyperbolicSplit,
                 head_grid: np.ndarray | None = None, sub: int = 4) -> Segment:
    """Solution segment ``x_t(psi, sigma, H)`` of ``x' = A x + H`` with history
    ``psi`` at time ``sigma``.

    For ``t + theta >= sigma`` the value is
    ``e^{(t+theta-sigma)A} psi(0) + int_sigma^{t+theta} e^{(t+theta-s)A} H(s) ds``;
    before that it is ``psi(t + theta - sigma)``.
    """
    if t < sigma:
        raise ValueError("need sigma <= t")
    span = t - sigma
    if span == 0:
        return psi
    hg = make_grid(span) if head_grid is None else np.asarray(head_grid, dtype=float)
    hg = np.union1d(hg[hg >= -span], [-span])
    taus = t + hg
    xs = _forced_flow(split.A, psi.head, H, taus, sub)
    shifted = psi.theta - span
    past = shifted < -span
    grid = np.concatenate([shifted[past], hg])
    vals = np.concatenate([psi.values[past], xs])
    return Segment(grid, vals, psi.tail)


@dataclass(frozen=True)
class IdentityReport:
    residual: float
    truncation_bound: float
    checked_times: np.ndarray


def identity_residual(y: Callable[[float], Segment], psi: Segment, sigma: float, R: Callable,
                      split: HyperbolicSplit, T: float, t_check, nodes=None, sub: int = 1) -> IdentityReport:
    """Distance of ``y`` from the integral identity
    ``y(t) = V(t - sigma) psi + int_sigma^t V Pi^s Gamma R - int_t^inf V Pi^u Gamma R``.

    The right-hand side is rebuilt independently: the convolutions are
    Gauss-Legendre quadratures of ``R`` on ``nodes`` (default: 4000 uniform
    steps on ``[sigma, T]``) and the infinite integral is truncated at ``T``.
    Returns the max over ``t_check`` of the weighted sup norm of the
    difference, plus a bound for the truncated tail.
    """
    nodes = np.linspace(sigma, T, 4001) if nodes is None else np.asarray(nodes, dtype=float)
    A, Ps, Pu = split.A, split.P_s, split.P_u
    zero = np.zeros(2)
    S = _forced_flow(A, Ps @ psi.head, lambda s: _eval_H(R, np.atleast_1d(s)) @ Ps.T, nodes, sub)
    # backward flow gives U(tau) = int_tau^T e^{(tau-s)A} P_u R(s) ds
    Ub = _forced_flow(A, zero, lambda s: -(_eval_H(R, np.atleast_1d(s)) @ Pu.T), nodes[::-1], sub)
    U = Ub[::-1]
    w = -U[0]

    def RS(s):
        return _eval_H(R, np.atleast_1d(s)) @ Ps.T

    def RU(s):
        return -(_eval_H(R, np.atleast_1d(s)) @ Pu.T)

    node_tol = 1e-9 * max(1.0, float(np.abs(nodes).max()))

    def x_at(tau: np.ndarray) -> np.ndarray:
        out = np.empty((tau.size, 2))
        hist = tau < sigma - node_tol
        if np.any(hist):
            th = tau[hist] - sigma
            out[hist] = psi(th) + expm2(A, th) @ w
        for n_ in np.flatnonzero(~hist):
            tv = min(max(tau[n_], nodes[0]), nodes[-1])
            j = int(np.clip(np.searchsorted(nodes, tv), 0, nodes.size - 1))
            near = j if j == 0 or abs(nodes[j] - tv) <= abs(nodes[j - 1] - tv) else j - 1
            if abs(nodes[near] - tv) <= node_tol:
                out[n_] = S[near] - U[near]
                continue
            jj = max(0, min(j - 1, nodes.size - 2))
            a_, b_ = nodes[jj], nodes[jj + 1]
            s_part = _forced_flow(A, S[jj], RS, np.array([a_, tv]), sub)[-1]
            u_part = _forced_flow(A, U[jj + 1], RU, np.array([b_, tv]), sub)[-1]
            out[n_] = s_part - u_part
        return out

    worst = 0.0
    for t in np.atleast_1d(t_check):
        seg = y(float(t))
        diff_vals = seg.values - x_at(t + seg.theta)
        # reference tail in y(t)'s window coordinates
        shift = seg.Theta - (psi.Theta + (t - sigma))
        ref_tail = tuple(tt.reanchored(shift) for tt in psi.tail)
        if np.any(w):
            ref_tail += (TailTerm("linear", expm2(A, t - sigma - seg.Theta) @ w, A, True),)
        neg = tuple(tt.scaled(-1.0) for tt in ref_tail)
        dseg = Segment(seg.theta, diff_vals, seg.tail + neg).simplified()
        worst = max(worst, bnorm(dseg, split.lam))
    Rmax = float(np.max(np.linalg.norm(_eval_H(R, nodes), axis=1)))
    trunc = split.C * math.exp(-split.alpha * 40.0 / split.alpha) * Rmax
    return IdentityReport(worst, trunc, np.atleast_1d(np.asarray(t_check, dtype=float)))
