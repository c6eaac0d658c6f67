"""Right-hand side of the infinite-delay system on segments.

For a segment ``phi = (u, v)`` at time ``t`` the extended field is
``K(phi, t) = f(phi(0)) + g(phi(0)) h(int_{-t}^0 |u|^-kappa)`` on regular
segments and ``f(phi(0))`` on singular ones (``u`` vanishes somewhere in
``[-t, 0]``, the integral is infinite and ``h`` has decayed to zero). The
remainder ``R = K - A phi(0)`` is cut off radially: ``K = A x + chi(|x|) R``
with ``chi = 1`` on ``|x| <= D/2`` and ``chi = 0`` beyond ``D``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import EtaRatioTooSmall
from .forcing import ForcingFn
from .polyfield import DesingularizedField, Poly, PolyMap2
from .segspace import ZERO_FLOOR, Segment, history_integral

__all__ = [
    "DelayRHS",
    "build_rhs",
    "cutoff",
    "K_eval",
    "DK_eval",
    "R_eval",
    "history_integral_derivative",
    "ZetaTerms",
    "zeta_estimate",
    "zeta_ladder",
    "ZetaLadder",
    "gamma_bound",
    "contraction_bound",
]

M_SAFETY = 1.1
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def cutoff(r, D: float):
    """C^1 radial cutoff: 1 on ``[0, D/2]``, cubic smoothstep down to 0 at ``D``."""
    r = np.asarray(r, dtype=float)
    s = np.clip((r - 0.5 * D) / (0.5 * D), 0.0, 1.0)
    out = 1.0 - 3.0 * s ** 2 + 2.0 * s ** 3
    return float(out) if out.ndim == 0 else out


def cutoff_prime(r, D: float):
    r = np.asarray(r, dtype=float)
    s = np.clip((r - 0.5 * D) / (0.5 * D), 0.0, 1.0)
    out = (-6.0 * s + 6.0 * s ** 2) / (0.5 * D)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DelayRHS:
    """Desingularized field with forcing, cutoff radius ``D`` and the sup
    bound ``M`` of the cut-off field on the ``D``-ball."""

    f: PolyMap2
    g: PolyMap2
    forcing: ForcingFn
    kappa: int
    D: float
    M: float
    A: np.ndarray = field(repr=False)

    @property
    def forced(self) -> bool:
        """Whether the forcing term can be nonzero at all."""
        return not (self.forcing.is_zero or self.g.is_zero or self.forcing.envelope_H == 0)

    @property
    def eta_over_M(self) -> float:
        return self.forcing.decay_eta / self.M

    # pointwise pieces -------------------------------------------------
    def raw_remainder(self, x: np.ndarray, hval) -> np.ndarray:
        """``f(x) - A x + g(x) h`` for points ``x`` of shape ``(..., 2)``."""
        x = np.asarray(x, dtype=float)
        fx = self.f.evalf(x[..., 0], x[..., 1])
        gx = self.g.evalf(x[..., 0], x[..., 1])
        return fx - x @ self.A.T + gx * np.asarray(hval, dtype=float)[..., None]

    def remainder_nodes(self, x: np.ndarray, hval) -> np.ndarray:
        """Cut-off remainder ``chi(|x|) (f(x) - A x + g(x) h)``."""
        x = np.asarray(x, dtype=float)
        chi = cutoff(np.linalg.norm(x, axis=-1), self.D)
        return chi[..., None] * self.raw_remainder(x, hval) if np.ndim(chi) else chi * self.raw_remainder(x, hval)

    def field_nodes(self, x: np.ndarray, hval) -> np.ndarray:
        return np.asarray(x) @ self.A.T + self.remainder_nodes(x, hval)

    def h_of(self, integral):
        """``h`` at the history integral, with ``h(inf) = 0``."""
        I = np.asarray(integral, dtype=float)
        fin = np.isfinite(I)
        out = np.zeros(I.shape)
        if np.any(fin):
            out[fin] = self.forcing.h(I[fin])
        return float(out) if out.ndim == 0 else out


def _sampled_sup(f: PolyMap2, g: PolyMap2, A, D: float, H: float, n_r: int = 48, n_a: int = 96) -> float:
    r = np.linspace(0.0, D, n_r)
    a = np.linspace(0.0, 2 * math.pi, n_a, endpoint=False)
    R_, A_ = np.meshgrid(r, a)
    pts = np.stack([R_ * np.cos(A_), R_ * np.sin(A_)], axis=-1).reshape(-1, 2)
    chi = cutoff(np.linalg.norm(pts, axis=1), D)
    lin = pts @ A.T
    fx = f.evalf(pts[:, 0], pts[:, 1])
    gx = g.evalf(pts[:, 0], pts[:, 1])
    best = 0.0
    for hv in (H, -H):
        Kx = lin + chi[:, None] * (fx - lin + gx * hv)
        best = max(best, float(np.linalg.norm(Kx, axis=1).max()))
    return best


def build_rhs(dfield: DesingularizedField | tuple[PolyMap2, PolyMap2, int], forcing: ForcingFn,
              D: float = 1.0, max_halvings: int = 60) -> DelayRHS:
    """Assemble the cut-off right-hand side.

    ``M`` is 1.1 times the sampled sup of the cut-off field on the
    ``D``-ball with ``|h| <= H``. When the forcing is active, ``D`` is
    halved until ``M < eta``.
    """
    if isinstance(dfield, DesingularizedField):
        f, g, kappa = dfield.f, dfield.g, dfield.kappa
    else:
        f, g, kappa = dfield
    A = f.linear_part()
    if np.abs(np.asarray(f(0, 0), dtype=float)).max() > 0:
        raise ValueError("f must vanish at the origin; recentre first")
    forced = not (forcing.is_zero or g.is_zero or forcing.envelope_H == 0)
    if forced and np.abs(np.asarray(g(0, 0), dtype=float)).max() > 0:
        raise ValueError("g must vanish at the origin so that R(0) = 0")
    H = forcing.envelope_H if forced else 0.0
    for _ in range(max_halvings):
        M = M_SAFETY * _sampled_sup(f, g, A, D, H)
        M = max(M, 1e-300)
        if not forced or M < forcing.decay_eta:
            return DelayRHS(f, g, forcing, int(kappa), D, M, A)
        D *= 0.5
    raise EtaRatioTooSmall("could not shrink the cutoff until M < eta")


def K_eval(phi: Segment, t: float, rhs: DelayRHS) -> np.ndarray:
    """Extended field at the segment ``phi`` and time ``t >= 0``."""
    if t < 0:
        raise ValueError("K is defined for t >= 0")
    x0 = phi.head
    I = history_integral(phi, t, rhs.kappa)
    hval = rhs.h_of(I) if rhs.forced else 0.0
    return rhs.field_nodes(x0, hval)


def R_eval(phi: Segment, t: float, rhs: DelayRHS, split=None) -> np.ndarray:
    """Remainder ``K(phi, t) - A phi(0)``."""
    A = rhs.A if split is None else split.A
    return K_eval(phi, t, rhs) - A @ phi.head


def history_integral_derivative(phi: Segment, d: Segment, t: float, kappa: int,
                                floor: float = ZERO_FLOOR) -> float:
    """Directional derivative of ``int_{-t}^0 |u|^-kappa`` along ``d``:
    ``int -kappa w |u|^-kappa / u`` (``w`` the first component of ``d``),
    Gauss-Legendre on each linear piece of the merged grid."""
    lo = max(-t, min(phi.theta[0], d.theta[0]))
    grid = np.union1d(phi.theta, d.theta)
    grid = np.concatenate([[lo], grid[grid > lo]])
    total = 0.0
    if grid.size > 1:
        a, b = grid[:-1], grid[1:]
        s = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X
        u = phi(s.ravel())[:, 0].reshape(s.shape)
        w = d(s.ravel())[:, 0].reshape(s.shape)
        integrand = -kappa * w * np.abs(u) ** (-kappa) / u
        total = float(np.sum(0.5 * (b - a)[:, None] * _GL_W * integrand))
    if t > -lo:
        def integrand_tail(si):
            ui = float(phi(si)[0])
            return -kappa * float(d(si)[0]) * abs(ui) ** (-kappa) / ui
        total += quad(integrand_tail, -t, lo, epsabs=0.0, epsrel=1e-11, limit=200)[0]
    return total


def DK_eval(phi: Segment, t: float, d: Segment, rhs: DelayRHS) -> np.ndarray:
    """Derivative of ``K`` at ``phi`` in direction ``d``.

    Regular branch: ``Df d0 + (Dg d0) h + g h'(I) dI``; singular branch:
    ``Df d0``. Cutoff derivatives are included outside ``|x| <= D/2``.
    """
    x0, d0 = phi.head, d.head
    A = rhs.A
    I = history_integral(phi, t, rhs.kappa)
    regular = math.isfinite(I) and rhs.forced
    Jf = rhs.f.jacobian(float(x0[0]), float(x0[1]))
    dR = (Jf - A) @ d0
    hval = 0.0
    if regular:
        hval = float(rhs.forcing.h(I))
        hp = float(rhs.forcing.hprime(I))
        Jg = rhs.g.jacobian(float(x0[0]), float(x0[1]))
        gx = np.asarray(rhs.g.evalf(x0[0], x0[1]), dtype=float).ravel()
        dI = history_integral_derivative(phi, d, t, rhs.kappa)
        dR = dR + (Jg @ d0) * hval + gx * hp * dI
    r = float(np.linalg.norm(x0))
    chi = cutoff(r, rhs.D)
    out = A @ d0 + chi * dR
    if r > 0.5 * rhs.D:
        out = out + cutoff_prime(r, rhs.D) * float(x0 @ d0) / r * rhs.raw_remainder(x0, hval)
    return out


# ---------------------------------------------------------------------------
# Lipschitz constant of R on the delta-ball

def gamma_bound(r, H: float, M: float, eta: float, sigma0: float):
    """``gamma(r) = H (r / (r + M sigma0 / 2))^(eta/M) / r``."""
    r = np.asarray(r, dtype=float)
    c = 0.5 * M * sigma0
    out = H * (r / (r + c)) ** (eta / M) / r
    return float(out) if out.ndim == 0 else out


def _jac_entry_bounds(pm: PolyMap2, radius: float, min_degree: int) -> np.ndarray:
    J = pm.jacobian_polys
    return np.array([[J[i][j].coef_bound(radius, min_degree) for j in range(2)] for i in range(2)])


def _map_bound(pm: PolyMap2, radius: float) -> float:
    return float(math.hypot(pm.px.coef_bound(radius), pm.py.coef_bound(radius)))


@dataclass(frozen=True)
class ZetaTerms:
    delta: float
    df_modulus: float
    dg_term: float
    g_gamma_term: float

    @property
    def zeta(self) -> float:
        return self.df_modulus + self.dg_term + self.g_gamma_term


def zeta_estimate(delta: float, sigma0: float, rhs: DelayRHS, split=None) -> ZetaTerms:
    """Certified Lipschitz bound of ``R`` on the ``delta``-ball, as a sum of
    three terms:

    * ``sup |Df(x) - Df(0)|`` on ``|x| <= delta`` from polynomial coefficients;
    * ``|Dg|_delta`` times the decay bound of ``h`` along histories that start
      within ``delta`` of the axis and move at speed at most ``M``;
    * ``|g|_delta`` times ``sup_{r <= delta} gamma(r)``.
    """
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    t1 = float(np.linalg.norm(_jac_entry_bounds(rhs.f, delta, 1)))
    if not rhs.forced:
        return ZetaTerms(delta, t1, 0.0, 0.0)
    H, eta, M = rhs.forcing.envelope_H, rhs.forcing.decay_eta, rhs.M
    ratio = eta / M
    if ratio <= 1:
        raise EtaRatioTooSmall(f"eta/M = {ratio:.6g} <= 1")
    lam = split.lam if split is not None else 1.0
    c = 0.5 * M * sigma0
    hb = H * (delta / (delta + c)) ** ratio
    if split is not None:
        hb = min(hb, H * math.exp(-eta * (1 - math.exp(-lam * sigma0)) / (lam * delta)))
    t2 = float(np.linalg.norm(_jac_entry_bounds(rhs.g, delta, 0))) * hb
    r0 = c * (ratio - 1.0)
    t3 = _map_bound(rhs.g, delta) * gamma_bound(min(delta, r0), H, M, eta, sigma0)
    return ZetaTerms(delta, t1, t2, t3)


def contraction_bound(zeta: float, split, beta: float) -> float:
    """``C K L zeta (1/(alpha - beta) + 1/(alpha + beta))``."""
    a = split.alpha
    return split.C * split.K * split.L * zeta * (1.0 / (a - beta) + 1.0 / (a + beta))


@dataclass(frozen=True)
class ZetaLadder:
    deltas: np.ndarray
    zetas: np.ndarray
    factors: np.ndarray
    delta0: float | None
    terms: tuple[ZetaTerms, ...]

    def as_dict(self) -> dict:
        return {"delta": self.deltas.tolist(), "zeta": self.zetas.tolist(),
                "contraction_bound": self.factors.tolist(), "delta0": self.delta0}


def zeta_ladder(sigma0: float, rhs: DelayRHS, split, beta: float, k_max: int = 40,
                delta_top: float | None = None) -> ZetaLadder:
    """``zeta`` on ``delta_k = delta_top 2^-k`` (default ``delta_top = D/2``);
    ``delta0`` is the largest rung whose contraction bound is below 1/2."""
    top = 0.5 * rhs.D if delta_top is None else delta_top
    deltas = top * 0.5 ** np.arange(k_max + 1)
    terms = tuple(zeta_estimate(float(d), sigma0, rhs, split) for d in deltas)
    zetas = np.array([t.zeta for t in terms])
    factors = np.array([contraction_bound(z, split, beta) for z in zetas])
    ok = np.flatnonzero(factors < 0.5)
    delta0 = float(deltas[ok[0]]) if ok.size else None
    return ZetaLadder(deltas, zetas, factors, delta0, terms)
