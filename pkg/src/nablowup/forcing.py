"""Scalar forcings ``h(tau)`` with certified exponential envelopes.

Every family computes its envelope constants ``(H, eta)`` analytically so
that ``|h(tau)| <= H exp(-eta tau)`` and ``|h'(tau)| <= H exp(-eta tau)``
hold on the declared domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "ForcingFn",
    "EnvelopeReport",
    "zero",
    "exponential",
    "exp_trig",
    "exp_poly",
    "tabulated",
    "verify_envelope",
    "time_reversed",
    "from_spec",
]

DOMAINS = ("two-sided", "forward-only", "backward-only")


@dataclass(frozen=True)
class ForcingFn:
    """Forcing ``h`` with derivative and envelope data.

    ``domain`` says where the envelope is certified: ``forward-only`` means
    ``tau >= 0``, ``backward-only`` means ``tau <= 0``. Backward-only
    envelopes read ``H exp(eta tau)`` (decay toward ``-inf``).
    """

    h: Callable[[np.ndarray], np.ndarray]
    hprime: Callable[[np.ndarray], np.ndarray]
    envelope_H: float
    decay_eta: float
    domain: str = "two-sided"
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}")
        if self.envelope_H < 0 or not self.decay_eta > 0:
            raise ValueError("envelope needs H >= 0 and eta > 0")

    @property
    def is_zero(self) -> bool:
        return self.family == "zero"

    def __call__(self, tau):
        return self.h(tau)

    def envelope(self, tau):
        tau = np.asarray(tau, dtype=float)
        sgn = 1.0 if self.domain == "backward-only" else -1.0
        return self.envelope_H * np.exp(sgn * self.decay_eta * tau)


def _vec(fn):
    def wrapped(tau):
        arr = np.asarray(tau, dtype=float)
        out = fn(arr)
        return float(out) if arr.ndim == 0 else out
    return wrapped


def zero(eta: float = math.inf) -> ForcingFn:
    """``h = 0``; ``eta`` defaults to ``inf`` so that no rate condition binds."""
    z = _vec(lambda t: np.zeros_like(t))
    return ForcingFn(z, z, 0.0, eta, "two-sided", "zero", {})


def exponential(a: float, eta: float, domain: str = "two-sided") -> ForcingFn:
    """``h = a exp(-eta tau)``; ``H = |a| max(1, eta)``."""
    h = _vec(lambda t: a * np.exp(-eta * t))
    hp = _vec(lambda t: -eta * a * np.exp(-eta * t))
    return ForcingFn(h, hp, abs(a) * max(1.0, eta), eta, domain, "exponential",
                     {"a": a, "eta": eta})


def exp_trig(a: float, eta: float, omega: float, phase: float = 0.0,
             domain: str = "two-sided") -> ForcingFn:
    """``h = a exp(-eta tau) sin(omega tau + phase)``.

    ``|h'| = |a| e^{-eta tau} |omega cos - eta sin| <= |a| sqrt(eta^2 + omega^2) e^{-eta tau}``.
    """
    def h(t):
        return a * np.exp(-eta * t) * np.sin(omega * t + phase)

    def hp(t):
        return a * np.exp(-eta * t) * (omega * np.cos(omega * t + phase)
                                       - eta * np.sin(omega * t + phase))

    H = abs(a) * max(1.0, math.hypot(eta, omega))
    return ForcingFn(_vec(h), _vec(hp), H, eta, domain, "exp_trig",
                     {"a": a, "eta": eta, "omega": omega, "phase": phase})


def _poly_exp_bound(coeffs: Sequence[float], eps: float) -> float:
    # sup_{t>=0} t^k e^{-eps t} = (k/(e eps))^k
    return sum(abs(c) * ((k / (math.e * eps)) ** k if k else 1.0) for k, c in enumerate(coeffs))


def exp_poly(coeffs: Sequence[float], eta: float, eps: float | None = None) -> ForcingFn:
    """``h = p(tau) exp(-eta tau)`` with ``p = sum coeffs[k] tau^k``, forward-only.

    The certified rate is ``eta - eps`` (default ``eps = eta/2``); the
    polynomial factor is absorbed into ``H``.
    """
    coeffs = [float(c) for c in coeffs]
    eps = eta / 2 if eps is None else eps
    if not 0 < eps < eta:
        raise ValueError("need 0 < eps < eta")
    p = np.polynomial.Polynomial(coeffs)
    dp = p.deriv()
    h = _vec(lambda t: p(t) * np.exp(-eta * t))
    hp = _vec(lambda t: (dp(t) - eta * p(t)) * np.exp(-eta * t))
    dcoef = list((dp - eta * p).coef)
    H = max(_poly_exp_bound(coeffs, eps), _poly_exp_bound(dcoef, eps))
    return ForcingFn(h, hp, H, eta - eps, "forward-only", "exp_poly",
                     {"coeffs": coeffs, "eta": eta, "eps": eps})


def _ppoly_abs_max(pp, i: int, x0: float, x1: float) -> float:
    """max of ``|pp|`` on piece ``i`` (polynomial up to degree 2)."""
    c = pp.c[:, i]
    poly = np.polynomial.Polynomial(c[::-1])
    cand = [0.0, x1 - x0]
    for r in poly.deriv().roots():
        if abs(r.imag) < 1e-14 and 0.0 <= r.real <= x1 - x0:
            cand.append(r.real)
    return float(max(abs(poly(x)) for x in cand))


def tabulated(taus: Sequence[float], values: Sequence[float], eta: float) -> ForcingFn:
    """Shape-preserving cubic interpolation of samples, forward-only from
    ``taus[0]``, with exponential continuation ``h(tau_n) e^{-eta(tau - tau_n)}``
    past the last sample.

    ``H`` is certified piecewise: the interpolant stays between the endpoint
    values on each interval and its derivative is a quadratic there.
    """
    taus = np.asarray(taus, dtype=float)
    values = np.asarray(values, dtype=float)
    if taus.ndim != 1 or taus.shape != values.shape or taus.size < 2:
        raise ValueError("need matching 1-d samples, at least two")
    if np.any(np.diff(taus) <= 0):
        raise ValueError("sample times must increase")
    if taus[0] < 0:
        raise ValueError("tabulated forcing is forward-only; first sample must be >= 0")
    ip = PchipInterpolator(taus, values, extrapolate=False)
    dip = ip.derivative()
    t_end, v_end = taus[-1], values[-1]

    def h(t):
        inside = ip(np.clip(t, taus[0], t_end))
        tail = v_end * np.exp(-eta * (t - t_end))
        return np.where(t > t_end, tail, inside)

    def hp(t):
        inside = dip(np.clip(t, taus[0], t_end))
        tail = -eta * v_end * np.exp(-eta * (t - t_end))
        return np.where(t > t_end, tail, inside)

    H = 0.0
    for i in range(taus.size - 1):
        w = math.exp(eta * taus[i + 1])
        H = max(H, max(abs(values[i]), abs(values[i + 1])) * w)
        H = max(H, _ppoly_abs_max(dip, i, taus[i], taus[i + 1]) * w)
    H = max(H, abs(v_end) * math.exp(eta * t_end) * max(1.0, eta))
    return ForcingFn(_vec(h), _vec(hp), H, eta, "forward-only", "tabulated",
                     {"taus": taus.tolist(), "values": values.tolist(), "eta": eta})


@dataclass(frozen=True)
class EnvelopeReport:
    max_h_weighted: float
    max_hprime_weighted: float
    passed: bool


def verify_envelope(fn: ForcingFn, grid) -> EnvelopeReport:
    """Sampled check of ``|h|, |h'| <= H exp(-eta tau)`` on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if fn.domain == "forward-only" and np.any(grid < 0):
        raise ValueError("grid leaves the forward-only domain")
    if fn.domain == "backward-only" and np.any(grid > 0):
        raise ValueError("grid leaves the backward-only domain")
    if fn.is_zero:
        mh = float(np.max(np.abs(fn.h(grid)), initial=0.0))
        mhp = float(np.max(np.abs(fn.hprime(grid)), initial=0.0))
        return EnvelopeReport(mh, mhp, mh == 0.0 and mhp == 0.0)
    sgn = -1.0 if fn.domain == "backward-only" else 1.0
    weight = np.exp(sgn * fn.decay_eta * grid)
    mh = float(np.max(np.abs(fn.h(grid)) * weight))
    mhp = float(np.max(np.abs(fn.hprime(grid)) * weight))
    # subnormal samples carry absolute rounding error no relative slack can absorb
    lim = fn.envelope_H * (1 + 1e-9) + np.finfo(float).tiny
    return EnvelopeReport(mh, mhp, bool(mh <= lim and mhp <= lim))


def time_reversed(fn: ForcingFn) -> ForcingFn:
    """``tau -> h(-tau)`` for the unstable-manifold recipe (reverse time
    before blowing up)."""
    swap = {"two-sided": "two-sided", "forward-only": "backward-only",
            "backward-only": "forward-only"}
    return ForcingFn(_vec(lambda t: fn.h(-t)), _vec(lambda t: -fn.hprime(-t)),
                     fn.envelope_H, fn.decay_eta, swap[fn.domain],
                     fn.family, dict(fn.params, reversed=True))


def from_spec(spec: dict) -> ForcingFn:
    """Build a forcing from a scenario block ``{"family": ..., "params": {...}}``.

    Declared ``H``/``eta`` in the block must not undercut the certified ones.
    """
    family = spec.get("family", "zero")
    p = dict(spec.get("params", {}))
    if family == "zero":
        fn = zero()
    elif family == "exponential":
        fn = exponential(p["a"], p["eta"], p.get("domain", "two-sided"))
    elif family == "exp_trig":
        fn = exp_trig(p["a"], p["eta"], p["omega"], p.get("phase", 0.0), p.get("domain", "two-sided"))
    elif family == "exp_poly":
        fn = exp_poly(p["coeffs"], p["eta"], p.get("eps"))
    elif family == "tabulated":
        fn = tabulated(p["taus"], p["values"], p["eta"])
    else:
        raise ValueError(f"unknown forcing family {family!r}")
    if "H" in spec and spec["H"] < fn.envelope_H * (1 - 1e-12):
        raise ValueError(f"declared H={spec['H']} is below the certified {fn.envelope_H}")
    if "eta" in spec and spec["eta"] > fn.decay_eta * (1 + 1e-12):
        raise ValueError(f"declared eta={spec['eta']} exceeds the certified {fn.decay_eta}")
    return replace(fn, envelope_H=float(spec.get("H", fn.envelope_H)),
                   decay_eta=float(spec.get("eta", fn.decay_eta)))
