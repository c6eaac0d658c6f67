"""Trajectories of the original forced ODE and of the desingularized system.

The desingularized system is integrated with the original time carried as
a third state, ``(u, v, rho)' = (f + g h(rho), |u|^-kappa)``: the history
integral inside ``h`` is exactly ``rho(t)``, so forward simulation needs
no memory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import AxisApproach, OutOfRange
from .forcing import ForcingFn
from .forcing import zero as zero_forcing
from .polyfield import BlowupChart, DesingularizedField, PolyMap2
from .timewarp import WarpPair, _states_at

__all__ = [
    "Trajectory",
    "integrate_desingularized",
    "integrate_original",
    "to_original",
    "lyapunov_exponents",
    "orbit_compare",
    "AXIS_EVENT",
]

RTOL = 1e-10
ATOL = 1e-12
AXIS_EVENT = 1e-12


@dataclass
class Trajectory:
    """Samples, dense output and solver metadata.

    ``states`` holds the first two components. ``rho`` is the accumulated
    original time for desingularized runs. ``status`` is ``'ok'`` or
    ``'axis_approach'``.
    """

    t: np.ndarray
    states: np.ndarray
    rho: np.ndarray | None = None
    sol: Callable | None = field(default=None, repr=False)
    status: str = "ok"
    nfev: int = 0
    n_steps: int = 0
    rtol: float = RTOL
    atol: float = ATOL

    def __call__(self, t) -> np.ndarray:
        return _states_at(self, t)

    def rho_at(self, t):
        if self.sol is None:
            return np.interp(t, self.t, self.rho)
        return np.asarray(self.sol(t))[2]


def _parts(rhs, forcing):
    if isinstance(rhs, DesingularizedField):
        return rhs.f, rhs.g, rhs.kappa, forcing or zero_forcing()
    return rhs.f, rhs.g, rhs.kappa, forcing or rhs.forcing


def integrate_desingularized(rhs, init, T: float, forcing: ForcingFn | None = None,
                             rho0: float = 0.0, t0: float = 0.0, strict: bool = False,
                             rtol: float = RTOL, atol: float = ATOL, t_eval=None,
                             max_step: float = math.inf) -> Trajectory:
    """RK45 on the augmented system from ``t0`` to ``t0 + T`` (``T`` may be
    negative).

    ``rhs`` is a :class:`DelayRHS` or a :class:`DesingularizedField` (then
    ``forcing`` defaults to zero); the cutoff of a ``DelayRHS`` is not
    applied. The run stops when ``|u|`` reaches ``1e-12``: status
    ``'axis_approach'``, or :class:`AxisApproach` if ``strict``.
    """
    f, g, kappa, fz = _parts(rhs, forcing)
    u0, v0 = float(init[0]), float(init[1])
    if u0 == 0:
        raise ValueError("initial point lies on the exceptional line u = 0")
    use_g = not (g.is_zero or fz.is_zero)
    sgn = math.copysign(1.0, u0)

    def field_(t, z):
        u, v, r = z
        fx = f.evalf(u, v)
        if use_g:
            fx = fx + g.evalf(u, v) * float(fz.h(r))
        return (fx[0], fx[1], abs(u) ** (-kappa))

    def axis(t, z):
        return sgn * z[0] - AXIS_EVENT

    axis.terminal = True
    sol = solve_ivp(field_, (t0, t0 + T), (u0, v0, rho0), method="RK45", rtol=rtol, atol=atol,
                    dense_output=True, events=axis, t_eval=t_eval, max_step=max_step)
    if sol.status == -1:
        raise RuntimeError(sol.message)
    status = "axis_approach" if sol.status == 1 else "ok"
    if status == "axis_approach" and strict:
        raise AxisApproach(f"|u| reached {AXIS_EVENT:g} at t={sol.t[-1]:.6g}")
    return Trajectory(sol.t, sol.y[:2].T.copy(), sol.y[2].copy(), sol.sol, status,
                      sol.nfev, sol.t.size - 1, rtol, atol)


def integrate_original(F: PolyMap2, G: PolyMap2 | None, forcing: ForcingFn | None, init,
                       tau_span, rtol: float = RTOL, atol: float = ATOL, t_eval=None) -> Trajectory:
    """RK45 on ``(x, y)' = F + G h(tau)``."""
    fz = forcing or zero_forcing()
    use_g = G is not None and not (G.is_zero or fz.is_zero)

    def field_(tau, z):
        out = F.evalf(z[0], z[1])
        if use_g:
            out = out + G.evalf(z[0], z[1]) * float(fz.h(tau))
        return out

    sol = solve_ivp(field_, tuple(tau_span), np.asarray(init, dtype=float), method="RK45",
                    rtol=rtol, atol=atol, dense_output=True, t_eval=t_eval)
    if sol.status == -1:
        raise RuntimeError(sol.message)
    return Trajectory(sol.t, sol.y.T.copy(), None, sol.sol, "ok", sol.nfev, sol.t.size - 1, rtol, atol)


def to_original(traj: Trajectory, chart: BlowupChart, v_shift=0) -> Trajectory:
    """Chart image ``(x, y)`` of a desingularized trajectory, still on the
    desingularized clock."""
    vs = float(v_shift)

    def xy(t):
        z = np.asarray(traj.sol(t))
        x, y = chart.to_xy(z[0], z[1] + vs)
        return np.stack([x, y])

    x, y = chart.to_xy(traj.states[:, 0], traj.states[:, 1] + vs)
    return Trajectory(traj.t, np.column_stack([x, y]), traj.rho, xy if traj.sol else None,
                      traj.status, traj.nfev, traj.n_steps, traj.rtol, traj.atol)


def orbit_compare(traj_a, traj_b, warp: WarpPair, times=None) -> float:
    """Max distance between ``traj_a(warp.rho(t))`` and ``traj_b(t)``.

    ``traj_a`` runs on the target clock of ``warp``, ``traj_b`` on its
    source clock. Raises :class:`OutOfRange` if the warp leaves ``traj_a``.
    """
    times = np.asarray(traj_b.t if times is None else times, dtype=float)
    tau = warp.rho(times)
    lo, hi = min(traj_a.t[0], traj_a.t[-1]), max(traj_a.t[0], traj_a.t[-1])
    tol = 1e-9 * max(1.0, hi - lo)
    if np.any(tau < lo - tol) or np.any(tau > hi + tol):
        raise OutOfRange("warp maps outside the compared trajectory")
    a = _states_at(traj_a, np.clip(tau, lo, hi))
    b = _states_at(traj_b, times)
    return float(np.max(np.linalg.norm(a - b, axis=-1)))


def lyapunov_exponents(A_path, T: float, n_reorth: int | None = None, t0: float = 0.0,
                       rtol: float = 1e-10, atol: float = 1e-12) -> tuple[float, float]:
    """Finite-time exponents ``(lambda_-, lambda_+)`` of ``Y' = A(t) Y`` on
    ``[t0, t0 + T]``, by QR re-orthonormalization of the variational flow.

    ``A_path`` is a constant matrix or a callable ``t -> 2x2``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    const = not callable(A_path)
    Ac = np.asarray(A_path, dtype=float) if const else None
    n = n_reorth or max(10, int(math.ceil(T)))
    edges = t0 + np.linspace(0.0, T, n + 1)

    def var(t, y):
        A = Ac if const else np.asarray(A_path(t), dtype=float)
        return (A @ y.reshape(2, 2)).ravel()

    Q = np.eye(2)
    logs = np.zeros(2)
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(var, (a, b), Q.ravel(), method="RK45", rtol=rtol, atol=atol)
        Y = sol.y[:, -1].reshape(2, 2)
        Q, R = np.linalg.qr(Y)
        d = np.diag(R)
        Q = Q * np.sign(d)
        logs += np.log(np.abs(d))
    ex = np.sort(logs / T)
    return float(ex[0]), float(ex[1])
