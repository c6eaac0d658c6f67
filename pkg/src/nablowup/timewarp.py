"""Trajectory-wise reparametrization between original time ``tau`` and
desingularized time ``t``.

Along a trajectory with first component ``u`` the clocks are related by
``tau = rho(t) = int_0^t |u(s)|^-kappa ds`` and ``t = omega(tau)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import AxisHit, NonMonotone, OutOfRange

__all__ = [
    "WarpPair",
    "rho_from_trajectory",
    "rho_from_rate",
    "invert_monotone",
    "retime_trajectory",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "AXIS_FLOOR",
]

AXIS_FLOOR = 1e-300
LOG_SPAN_DECADES = 6.0


def _strictly_increasing(a: np.ndarray) -> bool:
    return a.ndim == 1 and a.size >= 2 and bool(np.all(np.diff(a) > 0))


@dataclass(frozen=True)
class WarpPair:
    """Paired monotone samples of ``rho`` (``t -> tau``) and hence ``omega``.

    ``rho`` is a monotone cubic through the samples: PCHIP, or the Hermite
    cubic with slopes ``rates`` (limited to three times the adjacent
    secants) when the rate ``rho'`` is known. ``omega`` is its exact inverse
    (bisection on each monotone piece), so the round trip holds everywhere,
    not only at the samples. ``swapped`` marks a pair produced by
    :func:`invert_monotone`, whose ``t_samples`` are original times.
    """

    t_samples: np.ndarray
    rho_samples: np.ndarray
    origin_fixed: float = 0.0
    swapped: bool = False
    rates: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t_samples, dtype=float)
        r = np.asarray(self.rho_samples, dtype=float)
        if t.shape != r.shape:
            raise ValueError("sample arrays differ in shape")
        if not (_strictly_increasing(t) and _strictly_increasing(r)):
            raise NonMonotone("warp samples must be strictly increasing")
        object.__setattr__(self, "t_samples", t)
        object.__setattr__(self, "rho_samples", r)
        if self.rates is None:
            pp = PchipInterpolator(t, r, extrapolate=True)
        else:
            z = np.asarray(self.rates, dtype=float)
            if z.shape != t.shape or np.any(z <= 0):
                raise NonMonotone("warp rates must be positive, one per sample")
            object.__setattr__(self, "rates", z)
            pp = CubicHermiteSpline(t, r, _limited_slopes(t, r, z), extrapolate=True)
        object.__setattr__(self, "_pp", pp)

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        self._check(t, self.t_samples)
        out = self._pp(np.clip(t, self.t_samples[0], self.t_samples[-1]))
        return float(out) if out.ndim == 0 else out

    def omega(self, tau):
        tau = np.asarray(tau, dtype=float)
        self._check(tau, self.rho_samples)
        ts, rs = self.t_samples, self.rho_samples
        x = np.clip(np.atleast_1d(tau), rs[0], rs[-1])
        k = np.clip(np.searchsorted(rs, x, side="right") - 1, 0, ts.size - 2)
        lo, hi = ts[k].copy(), ts[k + 1].copy()
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self._pp(mid) < x
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        # sample nodes map back exactly, including the right end of the last piece
        for j in (k, k + 1):
            exact = rs[j] == x
            out[exact] = ts[j][exact]
        return float(out[0]) if tau.ndim == 0 else out.reshape(tau.shape)

    @staticmethod
    def _check(x, grid):
        span = grid[-1] - grid[0]
        tol = 1e-12 * max(1.0, span)
        if np.any(x < grid[0] - tol) or np.any(x > grid[-1] + tol):
            raise OutOfRange("time outside the warp's sample range")

    def roundtrip_error(self) -> float:
        """``max |omega(rho(t)) - t|`` on the sample grid."""
        return float(np.max(np.abs(self.omega(self.rho(self.t_samples)) - self.t_samples)))


def _limited_slopes(t, r, z) -> np.ndarray:
    # slopes in (0, 3 * secant] on both sides keep every Hermite piece monotone
    sec = np.diff(r) / np.diff(t)
    m = z.copy()
    m[:-1] = np.minimum(m[:-1], 3.0 * sec)
    m[1:] = np.minimum(m[1:], 3.0 * sec)
    return m


def _states_at(traj, times) -> np.ndarray:
    """First two state components of ``traj`` at ``times`` (dense output if
    the trajectory carries one, shape-preserving interpolation otherwise)."""
    times = np.asarray(times, dtype=float)
    sol = getattr(traj, "sol", None)
    if sol is not None:
        return np.atleast_2d(np.asarray(sol(times)).T)[..., :2]
    t = np.asarray(traj.t, dtype=float)
    y = np.asarray(traj.states, dtype=float)[:, :2]
    if t[0] > t[-1]:
        t, y = t[::-1], y[::-1]
    span = t[-1] - t[0]
    tol = 1e-12 * max(1.0, span)
    if np.any(times < t[0] - tol) or np.any(times > t[-1] + tol):
        raise OutOfRange("requested time outside the trajectory")
    return PchipInterpolator(t, y, axis=0, extrapolate=True)(times)


def _sorted_samples(traj) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(traj.t, dtype=float)
    y = np.asarray(traj.states, dtype=float)
    if t[0] > t[-1]:
        t, y = t[::-1], y[::-1]
    return t, y


def _cumquad(fn, nodes: np.ndarray, origin: float, epsrel: float) -> np.ndarray:
    """Cumulative integral of ``fn`` on sorted ``nodes`` (which contain
    ``origin``), accumulated outward from ``origin`` so that it is exactly 0
    there."""
    k0 = int(np.searchsorted(nodes, origin))
    out = np.zeros(nodes.size)
    for k in range(k0, nodes.size - 1):
        out[k + 1] = out[k] + quad(fn, nodes[k], nodes[k + 1], epsabs=0.0,
                                   epsrel=epsrel, limit=200)[0]
    for k in range(k0, 0, -1):
        out[k - 1] = out[k] - quad(fn, nodes[k - 1], nodes[k], epsabs=0.0,
                                   epsrel=epsrel, limit=200)[0]
    return out


def rho_from_trajectory(traj, kappa: int, origin: float = 0.0,
                        epsrel: float = 1e-11) -> WarpPair:
    """``rho(t) = int_origin^t |u(s)|^-kappa ds`` on the trajectory's samples.

    Uses adaptive Gauss-Kronrod per sample interval on the dense output when
    available. Without dense output ``log|u|`` is interpolated when ``|u|``
    spans more than six decades, which keeps the stiff integrand accurate.
    """
    t, y = _sorted_samples(traj)
    u = y[:, 0]
    if np.any(np.abs(u) < AXIS_FLOOR):
        raise AxisHit("trajectory sample on the exceptional line")
    if np.any(np.sign(u) != np.sign(u[0])):
        raise AxisHit("trajectory crosses the exceptional line")
    if not (t[0] - 1e-12 <= origin <= t[-1] + 1e-12):
        raise OutOfRange("warp origin must lie inside the trajectory span")

    sol = getattr(traj, "sol", None)
    if sol is not None:
        def integrand(s):
            return abs(float(np.asarray(sol(s))[0])) ** (-kappa)
    else:
        logu = np.log(np.abs(u))
        if (logu.max() - logu.min()) / np.log(10.0) > LOG_SPAN_DECADES:
            lip = PchipInterpolator(t, logu)

            def integrand(s):
                return float(np.exp(-kappa * lip(s)))
        else:
            uip = PchipInterpolator(t, np.abs(u))

            def integrand(s):
                return float(uip(s)) ** (-kappa)

    nodes = np.union1d(t, [origin])
    rho = _cumquad(integrand, nodes, origin, epsrel)
    return WarpPair(nodes, rho, origin, rates=np.array([integrand(s) for s in nodes]))


def rho_from_rate(t, z: Callable | np.ndarray, origin: float = 0.0) -> WarpPair:
    """``rho(t) = int_origin^t z(s) ds`` for a positive rate ``z``.

    ``z`` is either a callable of time or an array of rate samples on ``t``;
    samples are integrated through their shape-preserving interpolant, which
    is exact for constant rates.
    """
    t = np.asarray(t, dtype=float)
    if not _strictly_increasing(t):
        raise NonMonotone("time samples must be strictly increasing")
    if callable(z):
        zs = np.asarray([float(z(s)) for s in t])
    else:
        zs = np.asarray(z, dtype=float)
    if np.any(zs <= 0):
        raise NonMonotone("rate must be positive for a monotone warp")
    if callable(z):
        nodes = np.union1d(t, [origin])
        rho_all = _cumquad(lambda s_: float(z(s_)), nodes, origin, 1e-12)
        rho = rho_all[np.searchsorted(nodes, t)]
    else:
        anti = PchipInterpolator(t, zs).antiderivative()
        rho = anti(t) - anti(origin)
    return WarpPair(t, rho, origin, rates=zs)


def invert_monotone(warp: WarpPair) -> WarpPair:
    """Swap the roles of the two clocks: the result maps ``tau -> t``."""
    return WarpPair(warp.rho_samples, warp.t_samples,
                    float(warp.rho(warp.origin_fixed)) if not warp.swapped else warp.origin_fixed,
                    not warp.swapped, None if warp.rates is None else 1.0 / warp.rates)


@dataclass(frozen=True)
class RetimedTrajectory:
    t: np.ndarray
    states: np.ndarray
    sol: Callable | None = None


def retime_trajectory(traj, warp: WarpPair, times=None) -> RetimedTrajectory:
    """Express ``traj`` (sampled in the warp's target clock) in the warp's
    source clock: ``psi(t) = xi(rho(t))``.

    ``times`` defaults to the warp's source samples.
    """
    times = warp.t_samples if times is None else np.asarray(times, dtype=float)
    target = warp.rho(times)
    t_lo, t_hi = np.min(traj.t), np.max(traj.t)
    tol = 1e-10 * max(1.0, t_hi - t_lo)
    if np.any(target < t_lo - tol) or np.any(target > t_hi + tol):
        raise OutOfRange("warp maps outside the trajectory span")
    states = _states_at(traj, np.clip(target, t_lo, t_hi))
    return RetimedTrajectory(np.asarray(times), states)


def write_trajectory_csv(path, t, u, v, rho=None, header=("t", "u", "v", "rho")) -> None:
    """Deterministic CSV with ``repr``-exact floats."""
    rho = np.full(np.shape(t), np.nan) if rho is None else rho
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(t, u, v, rho):
            w.writerow([repr(float(x)) for x in row])


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = np.array([[float(x) for x in row] for row in r])
    rows = rows.reshape(-1, len(header))
    return {name: rows[:, k] for k, name in enumerate(header)}
