"""Map manifold data back to the original coordinates.

A segment ``phi = (u, v)`` of a classical solution at time ``sigma`` maps
to ``(x, y, tau) = (chart(u(0), v(0)), int_{-sigma}^0 |u|^-kappa)``. The
manifold chart is built from constant stable histories, which are not
classical, so each point is first replaced by a classical solution on
``[0, sigma]`` that lies on the same manifold: its endpoint is shot
backwards so that ``rho(0) = 0``, and its unstable head is iterated to
match ``w(Pi^s phi, sigma)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import AxisApproach, SingularChart
from .forcing import zero as zero_forcing
from .integrator import integrate_desingularized
from .linearflow import project_su
from .lpsolver import LPConfig, LPSolution, ManifoldChart, solve_fixed_point, stable_psi
from .nonlinear import DelayRHS
from .polyfield import BlowupChart
from .segspace import Segment, TailTerm, history_integral

__all__ = [
    "BlowdownPoint",
    "ClassicalHistory",
    "blow_down_manifold_point",
    "classical_history",
    "trace_to_zero_time",
    "manifold_curve",
    "reconstruct_manifolds",
    "write_cloud_csv",
]


@dataclass(frozen=True)
class BlowdownPoint:
    x: float
    y: float
    tau: float
    sigma: float
    source: object = None
    chart: BlowupChart = field(default_factory=BlowupChart)
    flags: tuple[str, ...] = ()

    @property
    def side(self) -> str:
        """Half plane of the chart's directional coordinate."""
        a = self.x if self.chart.direction == "x" else self.y
        return "+" if a > 0 else "-"


def blow_down_manifold_point(phi: Segment, sigma: float, kappa: int, chart: BlowupChart | None = None,
                             v_shift=0, source=None) -> BlowdownPoint:
    """Blow-down of a segment at time ``sigma``; ``v_shift`` undoes the
    recentring of the chart's ``v``."""
    chart = chart or BlowupChart()
    u0, v0 = phi.head
    tau = history_integral(phi, sigma, kappa)
    if u0 == 0 or math.isinf(tau):
        raise SingularChart("u vanishes on [-sigma, 0]; the blow-down map is singular")
    x, y = chart.to_xy(float(u0), float(v0) + float(v_shift))
    return BlowdownPoint(float(x), float(y), float(tau), float(sigma), source, chart)


@dataclass
class ClassicalHistory:
    """Classical solution on ``[0, sigma]`` lying on the manifold."""

    segment: Segment
    sigma: float
    tau: float
    solution: LPSolution = field(repr=False)
    outer_iterations: int = 0
    head_residual: float = 0.0


def _backward(rhs: DelayRHS, head, sigma: float, P: float, forcing=None):
    return integrate_desingularized(rhs, head, -sigma, forcing=forcing, rho0=P, t0=sigma, strict=True)


def _shoot(rhs: DelayRHS, head, sigma: float, tol: float = 1e-13, max_iter: int = 50):
    """Original time ``P`` at ``sigma`` such that the backward run reaches
    ``rho(0) = 0``. The unforced run gives the first guess, which keeps
    ``rho`` near ``[0, P]`` where ``h`` is bounded."""
    P = -float(_backward(rhs, head, sigma, 0.0, zero_forcing()).rho[-1])
    for _ in range(max_iter):
        tr = _backward(rhs, head, sigma, P)
        miss = float(tr.rho[-1])
        P -= miss
        if abs(miss) <= tol * max(1.0, abs(P)):
            break
    return P, _backward(rhs, head, sigma, P)


def _segment_from(tr, sigma: float, n: int = 2000) -> Segment:
    ts = np.linspace(0.0, sigma, n + 1)
    vals = np.asarray(tr.sol(ts))[:2].T
    theta = ts - sigma
    theta[-1] = 0.0
    return Segment(theta, vals, (TailTerm("frozen", vals[0]),))


def classical_history(stable_head, sigma: float, cfg: LPConfig, rhs: DelayRHS, split,
                      tol: float = 1e-12, max_outer: int = 40) -> ClassicalHistory:
    """Classical manifold solution through a stable head at time ``sigma``."""
    xs = split.P_s @ np.asarray(stable_head, dtype=float)
    if not np.any(xs):
        raise SingularChart("the equilibrium segment cannot be blown down")
    Theta = max(sigma, cfg.Theta_h)
    w = solve_fixed_point(stable_psi(xs, split, Theta), sigma, cfg, rhs, split).w
    res = math.inf
    for k in range(1, max_outer + 1):
        head = xs + w
        P, tr = _shoot(rhs, head, sigma)
        phi = _segment_from(tr, sigma)
        ps, _ = project_su(phi, split)
        sol = solve_fixed_point(ps.simplified(), sigma, cfg, rhs, split, check=False)
        res = float(np.max(np.abs(sol.w - w)))
        w = sol.w
        if res <= tol:
            break
    head = xs + w
    P, tr = _shoot(rhs, head, sigma)
    phi = _segment_from(tr, sigma)
    return ClassicalHistory(phi, sigma, P, sol, k, res)


def trace_to_zero_time(psi: Segment, sigma: float, rhs: DelayRHS) -> tuple[np.ndarray, tuple[str, ...]]:
    """Backward solve from ``(u(0), v(0), rho(sigma))`` at ``sigma`` to ``t = 0``.

    The returned point is flagged ``uncharacterized``. Raises
    :class:`AxisApproach` if the backward run reaches the axis.
    """
    if sigma == 0:
        return np.array(psi.head, dtype=float), ("uncharacterized",)
    P = history_integral(psi, sigma, rhs.kappa)
    if math.isinf(P):
        raise AxisApproach("history touches the exceptional line")
    tr = integrate_desingularized(rhs, psi.head, -sigma, rho0=P, t0=sigma, strict=True)
    return tr.states[-1].copy(), ("uncharacterized",)


def manifold_curve(hist: ClassicalHistory, rhs: DelayRHS, chart: BlowupChart | None = None,
                   v_shift=0) -> dict[str, np.ndarray]:
    """Blow-down of ``y*(t)``, ``t >= sigma``, along the fixed-point
    trajectory: arrays ``t, tau, x, y``, cut where ``tau`` overflows."""
    chart = chart or BlowupChart()
    sol = hist.solution
    u = sol.x[:, 0]
    if np.any(u == 0) or np.any(np.sign(u) != np.sign(u[0])):
        raise SingularChart("trajectory reaches the exceptional line")
    with np.errstate(over="ignore", invalid="ignore"):
        tau = hist.tau + _kernels.inverse_power_cumint(sol.t, u, rhs.kappa)
    keep = np.isfinite(tau) & (tau < 1e300)
    n = int(np.argmin(keep)) if not keep.all() else tau.size
    x, y = chart.to_xy(u[:n], sol.x[:n, 1] + float(v_shift))
    return {"t": sol.t[:n].copy(), "tau": tau[:n], "x": np.asarray(x), "y": np.asarray(y)}


def reconstruct_manifolds(chart_data: ManifoldChart, cfg: LPConfig, rhs: DelayRHS, split,
                          chart: BlowupChart | None = None, v_shift=0) -> dict:
    """Blow down every nonzero head of a manifold chart and partition by
    half plane: keys ``'+'``, ``'-'`` and ``'excluded_radius'``
    (``min |u(0)|``, the gap left around the exceptional line)."""
    chart = chart or BlowupChart()
    clouds: dict[str, list] = {"+": [], "-": []}
    for i, head in enumerate(chart_data.psi_heads):
        if not np.any(head):
            continue
        hist = classical_history(head, chart_data.sigma, cfg, rhs, split)
        pt = blow_down_manifold_point(hist.segment, chart_data.sigma, rhs.kappa, chart, v_shift,
                                      source=(i, chart_data.sigma))
        clouds[pt.side].append(pt)
    us = [abs(p.x if chart.direction == "x" else p.y) for side in clouds.values() for p in side]
    clouds["excluded_radius"] = min(us) if us else math.nan
    return clouds


def write_cloud_csv(path, points: list[BlowdownPoint]) -> None:
    """``sigma, psi_index, x, y, tau, side, flags`` with repr-exact floats."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["sigma", "psi_index", "x", "y", "tau", "side", "flags"])
        for p in points:
            idx = p.source[0] if isinstance(p.source, tuple) else ""
            wr.writerow([repr(p.sigma), idx, repr(p.x), repr(p.y), repr(p.tau), p.side, "|".join(p.flags)])
