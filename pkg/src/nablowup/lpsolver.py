"""Discretized Lyapunov-Perron iteration for the stable manifold of the
infinite-delay system.

The fixed point ``y*`` of the Lyapunov-Perron map is represented by one
global trajectory ``x`` on the uniform grid ``t_j = sigma + j dt``:
``y(t)(theta) = x(t + theta)``, with history
``x(tau) = psi(tau - sigma) + e^{(tau - sigma) A} w`` before ``sigma``.
On the grid

* ``S_0 = psi(0)``, ``S_{j+1} = E P_s S_j + dt (phi1 - phi2)(Z) P_s R_j + dt phi2(Z) P_s R_{j+1}``,
* ``U_N = 0``, ``U_j = E^-1 P_u U_{j+1} + dt phi2(-Z) P_u R_j + dt (phi1 - phi2)(-Z) P_u R_{j+1}``,
* ``x_j = S_j - U_j`` and ``w = -U_0``,

which is exact for ``R`` linear between nodes (``Z = dt A``). The
projector is applied at every step, so growing directions stay clean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import MaxIter, NoContraction, OutOfBall
from .linearflow import HyperbolicSplit, eu_segment, phi_functions, project_su
from .nonlinear import DelayRHS, contraction_bound, zeta_estimate, zeta_ladder
from .segspace import Segment, TailTerm, bnorm, history_integral
from ._expm2 import expm2

__all__ = [
    "LPConfig",
    "LPIterate",
    "LPSolution",
    "ManifoldChart",
    "lp_operator",
    "solve_fixed_point",
    "manifold_w",
    "stable_psi",
    "decay_certificate",
    "tangency_probe",
    "invariance_check",
    "lipschitz_probe",
    "sigma_continuity",
    "r_sigma0_ladder",
    "build_manifold_chart",
    "NMEASURE_FLOOR",
]

CONTRACTION_SLACK = 0.05
CERT_SLACK = 1.1
NMEASURE_FLOOR = 1e3


@dataclass(frozen=True)
class LPConfig:
    """Solver parameters.

    Invariants (checked by :meth:`check`): ``r < delta / (2C)`` and the
    a-priori contraction bound ``C K L zeta(delta) (1/(alpha-beta) + 1/(alpha+beta))``
    below 1/2.
    """

    sigma0: float
    r: float
    delta: float
    beta: float
    dt: float
    T_max: float
    zeta: float
    q_bound: float
    fp_tol: float = 1e-12
    max_iter: int = 200
    Theta_h: float = 20.0

    @classmethod
    def auto(cls, rhs: DelayRHS, split: HyperbolicSplit, sigma0: float, beta: float | None = None,
             delta: float | None = None, r: float | None = None, dt: float | None = None,
             T_max: float | None = None, fp_tol: float = 1e-12, max_iter: int = 200,
             Theta_h: float | None = None) -> LPConfig:
        """Defaults: ``beta = alpha/2``, ``delta`` the largest contracting rung
        of the zeta ladder, ``r = 0.99 delta / (2C)``,
        ``dt = min(0.05/alpha, sigma0/20)``, ``T_max = 40/beta``."""
        a = split.alpha
        beta = 0.5 * a if beta is None else float(beta)
        if not 0 < beta < a:
            raise ValueError("beta must lie in (0, alpha)")
        if delta is None:
            ladder = zeta_ladder(sigma0, rhs, split, beta)
            if ladder.delta0 is None:
                raise NoContraction("no rung of the zeta ladder gives a contraction")
            delta = ladder.delta0
        z = zeta_estimate(delta, sigma0, rhs, split).zeta
        q = contraction_bound(z, split, beta)
        r = 0.99 * delta / (2.0 * split.C) if r is None else float(r)
        dt = min(0.05 / a, sigma0 / 20.0) if dt is None else float(dt)
        T_max = 40.0 / beta if T_max is None else float(T_max)
        Theta_h = 20.0 / a if Theta_h is None else float(Theta_h)
        return cls(float(sigma0), r, float(delta), beta, dt, T_max, z, q, fp_tol, max_iter, Theta_h)

    def check(self, split: HyperbolicSplit) -> None:
        if self.q_bound >= 0.5:
            raise NoContraction(f"a-priori contraction bound {self.q_bound:.4g} >= 1/2 at delta={self.delta:g}")
        if self.r >= self.delta / (2.0 * split.C):
            raise ValueError("need r < delta / (2C)")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.T_max / self.dt - 1e-9))

    def nodes(self, sigma: float) -> np.ndarray:
        return sigma + self.dt * np.arange(self.n_steps + 1)

    def lipschitz_constant(self, split: HyperbolicSplit) -> float:
        """Explicit Lipschitz constant of ``psi -> w(psi, sigma)``."""
        return split.C / (1.0 - self.q_bound)

    def decay_bound(self, split: HyperbolicSplit) -> float:
        return CERT_SLACK * split.C * split.L / (1.0 - self.q_bound)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("sigma0", "r", "delta", "beta", "dt", "T_max", "zeta",
                                               "q_bound", "fp_tol", "max_iter", "Theta_h")}


@dataclass(frozen=True)
class _Coeffs:
    Ms: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    Mu: np.ndarray
    d0: np.ndarray
    d1: np.ndarray


_COEFF_CACHE: dict = {}


def _coeffs(split: HyperbolicSplit, dt: float) -> _Coeffs:
    key = (split.A.tobytes(), split.P_s.tobytes(), dt)
    if key not in _COEFF_CACHE:
        E, p1, p2 = phi_functions(split.A, dt)
        Ei, q1, q2 = phi_functions(split.A, -dt)
        Ps, Pu = split.P_s, split.P_u
        _COEFF_CACHE[key] = _Coeffs(E @ Ps, dt * (p1 - p2) @ Ps, dt * p2 @ Ps,
                                    Ei @ Pu, dt * q2 @ Pu, dt * (q1 - q2) @ Pu)
    return _COEFF_CACHE[key]


@dataclass(frozen=True)
class LPIterate:
    """Trajectory values on the nodes plus the unstable head ``w``."""

    x: np.ndarray
    w: np.ndarray


def stable_psi(head, split: HyperbolicSplit, Theta: float) -> Segment:
    """Constant history through a stable head (an element of ``E^s``)."""
    head = np.asarray(head, dtype=float)
    if np.abs(split.P_u @ head).max() > 1e-12 * max(1.0, np.abs(head).max()):
        raise ValueError("head is not in the stable eigenspace")
    return Segment.constant(head, Theta=Theta)


def _history(psi: Segment, w: np.ndarray, split: HyperbolicSplit) -> Segment:
    """``mu_sigma = psi + e^{theta A} w`` on ``psi``'s grid."""
    if not np.any(w):
        return psi
    return psi + eu_segment(w, split, psi.theta)


def _y_norms(x: np.ndarray, hist_norm: float, lam: float, dt: float) -> np.ndarray:
    """``|y(t_j)|_B`` from the decayed running max of node norms."""
    return _kernels.decayed_running_max(np.linalg.norm(x, axis=1), math.exp(-lam * dt), hist_norm)


def _Y_norm(x, hist_norm, split, cfg) -> float:
    m = _y_norms(x, hist_norm, split.lam, cfg.dt)
    weights = np.exp(cfg.beta * cfg.dt * np.arange(m.size))
    return float(np.max(weights * m))


def _rho_nodes(psi: Segment, it: LPIterate, sigma: float, t: np.ndarray, rhs: DelayRHS,
               split: HyperbolicSplit) -> np.ndarray:
    """Original time ``rho(t_j) = int_0^{t_j} |u|^-kappa`` along the iterate."""
    I_sigma = history_integral(_history(psi, it.w, split), sigma, rhs.kappa)
    if math.isinf(I_sigma):
        return np.full(t.size, math.inf)
    return I_sigma + _kernels.inverse_power_cumint(t, it.x[:, 0], rhs.kappa)


def _apply(psi, it, sigma, t, cfg, rhs, split, co):
    if rhs.forced:
        hvals = rhs.h_of(_rho_nodes(psi, it, sigma, t, rhs, split))
    else:
        hvals = np.zeros(t.size)
    R = rhs.remainder_nodes(it.x, hvals)
    S = _kernels.linrec_forward(co.Ms, co.c0, co.c1, R, psi.head)
    U = _kernels.linrec_backward(co.Mu, co.d0, co.d1, R, np.zeros(2))
    return LPIterate(S - U, -U[0]), R, hvals


def lp_operator(psi: Segment, y: LPIterate, sigma: float, cfg: LPConfig, rhs: DelayRHS,
                split: HyperbolicSplit, check: bool = True) -> LPIterate:
    """One application of the Lyapunov-Perron map."""
    t = cfg.nodes(sigma)
    if check:
        if bnorm(psi, split.lam) > cfg.r * (1 + 1e-12):
            raise OutOfBall("|psi| exceeds r")
        hist = bnorm(_history(psi, y.w, split), split.lam)
        if _Y_norm(y.x, hist, split, cfg) > cfg.delta * (1 + 1e-12):
            raise OutOfBall("|y| exceeds delta")
    return _apply(psi, y, sigma, t, cfg, rhs, split, _coeffs(split, cfg.dt))[0]


@dataclass
class LPSolution:
    psi: Segment
    sigma: float
    t: np.ndarray
    x: np.ndarray
    w: np.ndarray
    R: np.ndarray
    rho: np.ndarray
    split: HyperbolicSplit = field(repr=False)
    cfg: LPConfig = field(repr=False)
    iterations: int = 0
    residuals: list = field(default_factory=list)
    contraction_factor: float = 0.0
    max_iterate_norm: float = 0.0

    @property
    def history(self) -> Segment:
        return _history(self.psi, self.w, self.split)

    @property
    def phi_norm(self) -> float:
        return bnorm(self.history, self.split.lam)

    def y_norms(self) -> np.ndarray:
        return _y_norms(self.x, self.phi_norm, self.split.lam, self.cfg.dt)

    def Y_norm(self) -> float:
        return _Y_norm(self.x, self.phi_norm, self.split, self.cfg)

    def node_index(self, t: float) -> int:
        k = int(round((t - self.sigma) / self.cfg.dt))
        if k < 0 or k >= self.t.size or abs(self.t[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not a grid node")
        return k

    def segment(self, t: float) -> Segment:
        """``y*(t)`` as a segment (``t`` a grid node)."""
        k = self.node_index(t)
        tk = self.t[k]
        head_theta = self.t[:k + 1] - tk
        head_theta[-1] = 0.0
        hist = self.history
        past = hist.theta < 0
        theta = np.concatenate([hist.theta[past] - (tk - self.sigma), head_theta])
        vals = np.concatenate([hist.values[past], self.x[:k + 1]])
        if k == 0:
            return Segment(hist.theta, hist.values, hist.tail)
        tail = list(self.psi.tail)
        if np.any(self.w):
            tail.append(TailTerm("linear", expm2(self.split.A, -self.psi.Theta) @ self.w, self.split.A, True))
        return Segment(theta, np.asarray(vals), tuple(tail))

    def R_interp(self, s):
        """Piecewise linear remainder used by the solver, for identity checks."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros((s.size, 2))
        inside = s <= self.t[-1]
        for k in range(2):
            out[inside, k] = np.interp(s[inside], self.t, self.R[:, k])
        return out


def solve_fixed_point(psi: Segment, sigma: float, cfg: LPConfig, rhs: DelayRHS,
                      split: HyperbolicSplit, check: bool = True) -> LPSolution:
    """Picard iteration from ``y0 = V(. - sigma) psi`` to sup-``Y`` residual
    ``<= fp_tol``.

    The contraction factor is the largest ratio of successive residuals
    while the residuals are well above ``fp_tol``; ``>= 0.55`` raises
    :class:`NoContraction`.
    """
    if check:
        cfg.check(split)
        if bnorm(psi, split.lam) > cfg.r * (1 + 1e-12):
            raise OutOfBall("|psi| exceeds r")
    if np.abs(split.P_u @ psi.head).max() > 1e-10 * max(1.0, np.abs(psi.head).max()):
        raise ValueError("psi must lie in E^s")
    t = cfg.nodes(sigma)
    co = _coeffs(split, cfg.dt)
    x0 = expm2(split.A, t - sigma) @ psi.head
    it = LPIterate(x0, np.zeros(2))
    residuals: list[float] = []
    factor = 0.0
    max_norm = bnorm(psi, split.lam)
    for k in range(1, cfg.max_iter + 1):
        new, R, hvals = _apply(psi, it, sigma, t, cfg, rhs, split, co)
        dnorm = split.eu_weighted_sup(new.w - it.w)
        res = _Y_norm(new.x - it.x, dnorm, split, cfg)
        residuals.append(res)
        hist = bnorm(_history(psi, new.w, split), split.lam)
        max_norm = max(max_norm, _Y_norm(new.x, hist, split, cfg))
        if len(residuals) >= 2 and residuals[-2] > NMEASURE_FLOOR * cfg.fp_tol:
            factor = max(factor, res / residuals[-2])
        it = new
        if res <= cfg.fp_tol:
            break
        if factor >= 0.5 + CONTRACTION_SLACK:
            raise NoContraction(f"measured contraction factor {factor:.4g}")
    else:
        raise MaxIter(f"no convergence in {cfg.max_iter} iterations (residual {residuals[-1]:.3g})")
    # refresh R and rho at the converged iterate
    rho = _rho_nodes(psi, it, sigma, t, rhs, split) if rhs.forced else np.full(t.size, np.nan)
    hv = rhs.h_of(rho) if rhs.forced else np.zeros(t.size)
    R = rhs.remainder_nodes(it.x, hv)
    if factor >= 0.5 + CONTRACTION_SLACK:
        raise NoContraction(f"measured contraction factor {factor:.4g}")
    return LPSolution(psi, sigma, t, it.x, it.w, R, rho, split, cfg, k, residuals, factor, max_norm)


def manifold_w(psi: Segment, sigma: float, cfg: LPConfig, rhs: DelayRHS,
               split: HyperbolicSplit, check: bool = True) -> np.ndarray:
    """Head of ``w(psi, sigma) = Pi^u y*(sigma)``; the ``E^u`` element is
    ``theta -> e^{theta A} w``."""
    return solve_fixed_point(psi, sigma, cfg, rhs, split, check).w


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class DecayCertificate:
    N_est: float
    N_bound: float
    passed: bool


def decay_certificate(sol: LPSolution, beta: float | None = None) -> DecayCertificate:
    """``N_est = max_t e^{beta (t - sigma)} |y*(t)|_B / |phi|_B`` with
    ``phi = psi + w``, against ``1.1 C L / (1 - q)``."""
    beta = sol.cfg.beta if beta is None else beta
    bound = sol.cfg.decay_bound(sol.split)
    phi = sol.phi_norm
    if phi == 0:
        return DecayCertificate(0.0, bound, True)
    m = sol.y_norms()
    est = float(np.max(np.exp(beta * (sol.t - sol.sigma)) * m) / phi)
    return DecayCertificate(est, bound, est <= bound)


@dataclass(frozen=True)
class TangencyReport:
    radii: np.ndarray
    ratios: np.ndarray
    slope: float
    passed: bool


def _stable_directions(split: HyperbolicSplit, n: int = 8) -> list[np.ndarray]:
    if split.dim_u == 0:
        return [np.array([math.cos(a), math.sin(a)]) for a in np.linspace(0, math.pi, n, endpoint=False)]
    if split.dim_u == 2:
        return []
    # one-dimensional stable eigenspace: the range of P_s
    col = split.P_s[:, int(np.argmax(np.linalg.norm(split.P_s, axis=0)))]
    e = col / np.linalg.norm(col)
    return [e, -e]


def tangency_probe(sigma: float, cfg: LPConfig, rhs: DelayRHS, split: HyperbolicSplit,
                   k_max: int = 6, directions: Sequence[np.ndarray] | None = None) -> TangencyReport:
    """``ratio_k = max_e |w(rho_k e, sigma)| / rho_k`` on ``rho_k = r 2^-k``.

    Passes when every ratio is zero, or the ratios never increase and the
    last is at most a tenth of the first.
    """
    dirs = _stable_directions(split) if directions is None else list(directions)
    Theta = max(sigma, cfg.Theta_h)
    radii = cfg.r * 0.5 ** np.arange(k_max + 1)
    ratios = np.zeros(radii.size)
    for k, rr in enumerate(radii):
        best = 0.0
        for e in dirs:
            psi = stable_psi(rr * np.asarray(e), split, Theta)
            w = manifold_w(psi, sigma, cfg, rhs, split)
            best = max(best, split.eu_weighted_sup(w) / bnorm(psi, split.lam))
        ratios[k] = best
    if np.all(ratios == 0):
        return TangencyReport(radii, ratios, math.inf, True)
    pos = ratios > 0
    slope = float(np.polyfit(np.log(radii[pos]), np.log(ratios[pos]), 1)[0]) if pos.sum() >= 2 else math.nan
    mono = bool(np.all(np.diff(ratios) <= 1e-12 * ratios[0]))
    passed = mono and ratios[-1] <= 0.1 * ratios[0]
    return TangencyReport(radii, ratios, slope, passed)


@dataclass(frozen=True)
class InvarianceReport:
    t: float
    residual: float
    threshold: float
    stable_norm: float
    passed: bool


def invariance_check(sol: LPSolution, t: float, rhs: DelayRHS) -> InvarianceReport:
    """``|Pi^u mu_t - w(Pi^s mu_t, t)|_B`` with ``w(., t)`` solved afresh at
    initial time ``t`` on the same step size."""
    split, cfg = sol.split, sol.cfg
    thr = 10.0 * cfg.fp_tol
    k = sol.node_index(t)
    if k == 0:
        return InvarianceReport(t, 0.0, thr, bnorm(sol.psi, split.lam), True)
    mu = sol.segment(sol.t[k])
    psi_t, _ = project_su(mu, split)
    psi_t = psi_t.simplified()
    w_fresh = manifold_w(psi_t, float(sol.t[k]), cfg, rhs, split, check=False)
    diff = split.P_u @ mu.head - w_fresh
    res = split.eu_weighted_sup(diff)
    sn = bnorm(psi_t, split.lam)
    return InvarianceReport(t, res, thr, sn, res <= thr)


@dataclass(frozen=True)
class LipschitzProbe:
    max_ratio: float
    bound: float
    passed: bool
    ratios: np.ndarray


def _random_stable_psi(rng: np.random.Generator, split: HyperbolicSplit, cfg: LPConfig,
                       Theta: float, M: float) -> Segment:
    """Random ``E^s`` element inside ``B(r)``: a stable constant head plus a
    small M-Lipschitz wiggle, projected and rescaled."""
    dirs = _stable_directions(split)
    e = dirs[0]
    th = np.linspace(-Theta, 0.0, 41)
    amp = rng.uniform(0.2, 1.0)
    wig = rng.normal(size=(3, 2)) * 0.2
    vals = np.array([amp * e + wig[0] * np.sin(0.5 * s) + wig[1] * (1 - np.cos(0.3 * s))
                     + wig[2] * np.sin(0.1 * s) for s in th])
    seg = Segment(th, vals, (TailTerm("frozen", vals[0]),))
    ps, _ = project_su(seg, split)
    n = bnorm(ps, split.lam)
    return ps * (rng.uniform(0.3, 0.95) * cfg.r / n)


def lipschitz_probe(sigma: float, cfg: LPConfig, rhs: DelayRHS, split: HyperbolicSplit,
                    n_pairs: int = 50, seed: int = 0) -> LipschitzProbe:
    """Sampled ``|w(psi1) - w(psi2)| / |psi1 - psi2|`` against ``1.1 C/(1-q)``."""
    rng = np.random.default_rng(seed)
    Theta = max(sigma, cfg.Theta_h)
    bound = cfg.lipschitz_constant(split)
    ratios = []
    for _ in range(n_pairs):
        p1 = _random_stable_psi(rng, split, cfg, Theta, rhs.M)
        p2 = _random_stable_psi(rng, split, cfg, Theta, rhs.M)
        w1 = manifold_w(p1, sigma, cfg, rhs, split)
        w2 = manifold_w(p2, sigma, cfg, rhs, split)
        den = bnorm((p1 - p2).simplified(), split.lam)
        if den > 0:
            ratios.append(split.eu_weighted_sup(w1 - w2) / den)
    arr = np.array(ratios)
    mx = float(arr.max()) if arr.size else 0.0
    return LipschitzProbe(mx, bound, mx <= CERT_SLACK * bound, arr)


def sigma_continuity(psi_head, sigmas: Sequence[float], cfg: LPConfig, rhs: DelayRHS,
                     split: HyperbolicSplit) -> tuple[np.ndarray, float]:
    """``w(psi, sigma)`` along a ``sigma`` grid and the largest adjacent jump."""
    ws = []
    for s in sigmas:
        psi = stable_psi(psi_head, split, max(s, cfg.Theta_h))
        ws.append(manifold_w(psi, float(s), cfg, rhs, split))
    ws = np.array(ws)
    jump = float(np.max(np.linalg.norm(np.diff(ws, axis=0), axis=1))) if len(ws) > 1 else 0.0
    return ws, jump


def r_sigma0_ladder(sigma0s: Sequence[float], rhs: DelayRHS, split: HyperbolicSplit,
                    beta: float | None = None) -> list[dict]:
    """Stable-ball radius ``r(sigma0)`` for shrinking ``sigma0``."""
    beta = 0.5 * split.alpha if beta is None else beta
    out = []
    for s0 in sigma0s:
        lad = zeta_ladder(float(s0), rhs, split, beta)
        r = 0.99 * lad.delta0 / (2 * split.C) if lad.delta0 else 0.0
        out.append({"sigma0": float(s0), "delta0": lad.delta0, "r": r})
    return out


@dataclass
class ManifoldChart:
    """Sampled graph ``psi -> w(psi, sigma)`` with certificates."""

    sigma: float
    psi_heads: np.ndarray
    w_values: np.ndarray
    solutions: list = field(repr=False, default_factory=list)
    certificates: dict = field(default_factory=dict)

    @property
    def contraction_factor(self) -> float:
        return max((s.contraction_factor for s in self.solutions), default=0.0)


def build_manifold_chart(sigma: float, heads: Sequence[Sequence[float]], cfg: LPConfig,
                         rhs: DelayRHS, split: HyperbolicSplit) -> ManifoldChart:
    """Solve for ``w`` over constant stable histories through the given heads."""
    Theta = max(sigma, cfg.Theta_h)
    sols = [solve_fixed_point(stable_psi(h, split, Theta), sigma, cfg, rhs, split) for h in heads]
    heads = np.asarray(heads, dtype=float).reshape(-1, 2)
    w = np.array([s.w for s in sols]).reshape(-1, 2)
    if np.any(np.all(heads == 0, axis=1)) and np.any(w[np.all(heads == 0, axis=1)] != 0):
        raise AssertionError("w(0, sigma) must vanish")
    chart = ManifoldChart(sigma, heads, w, sols)
    chart.certificates["contraction_factor"] = chart.contraction_factor
    chart.certificates["decay"] = [decay_certificate(s).__dict__ for s in sols]
    return chart
