"""Sequential hot loops with a numba backend and a pure-numpy fallback.

Set ``NABLOWUP_NO_NUMBA=1`` to force the numpy path. Both backends
implement the same four kernels:

* ``linrec_forward``  -- ``S[j+1] = M S[j] + c0 R[j] + c1 R[j+1]``
* ``linrec_backward`` -- ``U[j] = M U[j+1] + d0 R[j] + d1 R[j+1]``
* ``inverse_power_cumint`` -- cumulative ``int |u|^-kappa`` of a piecewise
  linear ``u``, ``inf`` from the first zero or sign change on
* ``decayed_running_max`` -- ``m[j] = max(a[j], c * m[j-1])``
"""
from __future__ import annotations

import math
import os

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "BACKEND",
    "linrec_forward",
    "linrec_backward",
    "inverse_power_cumint",
    "decayed_running_max",
    "numpy_kernels",
    "numba_kernels",
]

ZERO_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# numpy backend

def _np_diag_recurrence(M: np.ndarray, x0: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Solve ``z[k+1] = M z[k] + b[k+1]`` in eigen-coordinates; ``None`` if
    ``M`` is too close to defective for the transform to be trusted."""
    d, V = np.linalg.eig(M)
    if np.linalg.cond(V) > 1e8:
        return None
    Vinv = np.linalg.inv(V)
    src = np.empty((b.shape[0] + 1, 2), dtype=complex)
    src[0] = Vinv @ x0
    src[1:] = b @ Vinv.T
    z = np.empty_like(src)
    for k in range(2):
        z[:, k] = lfilter([1.0], [1.0, -d[k]], src[:, k])
    return (z @ V.T).real


def _np_loop_recurrence(M, x0, b):
    out = np.empty((b.shape[0] + 1, 2))
    out[0] = x0
    for k in range(b.shape[0]):
        out[k + 1] = M @ out[k] + b[k]
    return out


def np_linrec_forward(M, c0, c1, R, x0):
    R = np.asarray(R, dtype=float)
    b = R[:-1] @ c0.T + R[1:] @ c1.T
    out = _np_diag_recurrence(M, np.asarray(x0, float), b)
    return _np_loop_recurrence(M, np.asarray(x0, float), b) if out is None else out


def np_linrec_backward(M, d0, d1, R, xN):
    R = np.asarray(R, dtype=float)
    b = R[:-1] @ d0.T + R[1:] @ d1.T
    rb = b[::-1]
    out = _np_diag_recurrence(M, np.asarray(xN, float), rb)
    if out is None:
        out = _np_loop_recurrence(M, np.asarray(xN, float), rb)
    return out[::-1].copy()


def _piece_integrals(h, a0, a1, kappa):
    """``int`` of ``|lin(a0, a1)|^-kappa`` over pieces of width ``h``;
    ``a0, a1`` positive."""
    r = (a1 - a0) / a0
    small = np.abs(r) < 1e-8
    rs = np.where(small, 1.0, r)
    if kappa == 1:
        core = np.log1p(rs) / rs
    else:
        e = 1.0 - kappa
        core = np.expm1(e * np.log1p(rs)) / (e * rs)
    core = np.where(small, 1.0 - 0.5 * kappa * r, core)
    return h * core / a0 ** kappa


def np_inverse_power_cumint(t, u, kappa, floor=ZERO_FLOOR):
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    out = np.zeros(t.shape[0])
    if t.shape[0] < 2:
        if t.shape[0] and abs(u[0]) < floor:
            out[:] = np.inf
        return out
    a = np.abs(u)
    bad_node = a < floor
    bad = bad_node[:-1] | bad_node[1:] | (np.sign(u[:-1]) != np.sign(u[1:]))
    a0 = np.where(bad, 1.0, a[:-1])
    a1 = np.where(bad, 1.0, a[1:])
    pieces = _piece_integrals(np.diff(t), a0, a1, kappa)
    pieces = np.where(bad, np.inf, pieces)
    out[1:] = np.cumsum(pieces)
    if bad_node[0]:
        out[:] = np.inf
    return out


def np_decayed_running_max(a, c, m_init):
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    if c <= 0.0:
        out[:] = a
        out[0] = max(a[0], m_init)
        return out
    rate = -math.log(c)
    block = n if rate <= 0.0 else max(1, min(n, int(200.0 / rate)))
    carry = m_init
    first = True
    for s in range(0, n, block):
        seg = a[s:s + block]
        k = np.arange(seg.shape[0])
        scale = np.exp(rate * k)
        acc = np.maximum.accumulate(seg * scale) / scale
        # the carried value enters at k=0 undamped only for the very first node
        carry_term = carry * np.exp(-rate * (k + (0 if first else 1)))
        blk = np.maximum(acc, carry_term)
        out[s:s + block] = blk
        carry = blk[-1]
        first = False
    return out


# ---------------------------------------------------------------------------
# numba backend

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def nb_linrec_forward(M, c0, c1, R, x0):
        n = R.shape[0]
        out = np.empty((n, 2))
        out[0, 0] = x0[0]
        out[0, 1] = x0[1]
        for j in range(n - 1):
            for r in range(2):
                acc = 0.0
                for c in range(2):
                    acc += M[r, c] * out[j, c] + c0[r, c] * R[j, c] + c1[r, c] * R[j + 1, c]
                out[j + 1, r] = acc
        return out

    @njit(cache=True)
    def nb_linrec_backward(M, d0, d1, R, xN):
        n = R.shape[0]
        out = np.empty((n, 2))
        out[n - 1, 0] = xN[0]
        out[n - 1, 1] = xN[1]
        for j in range(n - 2, -1, -1):
            for r in range(2):
                acc = 0.0
                for c in range(2):
                    acc += M[r, c] * out[j + 1, c] + d0[r, c] * R[j, c] + d1[r, c] * R[j + 1, c]
                out[j, r] = acc
        return out

    @njit(cache=True)
    def nb_inverse_power_cumint(t, u, kappa, floor):
        n = t.shape[0]
        out = np.zeros(n)
        if n == 0:
            return out
        if abs(u[0]) < floor:
            out[:] = np.inf
            return out
        acc = 0.0
        for j in range(n - 1):
            a0 = abs(u[j])
            a1 = abs(u[j + 1])
            if a1 < floor or (u[j] > 0) != (u[j + 1] > 0):
                out[j + 1:] = np.inf
                return out
            h = t[j + 1] - t[j]
            r = (a1 - a0) / a0
            if abs(r) < 1e-8:
                core = 1.0 - 0.5 * kappa * r
            elif kappa == 1:
                core = math.log1p(r) / r
            else:
                e = 1.0 - kappa
                core = math.expm1(e * math.log1p(r)) / (e * r)
            acc += h * core / a0 ** kappa
            out[j + 1] = acc
        return out

    @njit(cache=True)
    def nb_decayed_running_max(a, c, m_init):
        n = a.shape[0]
        out = np.empty(n)
        if n == 0:
            return out
        m = max(a[0], m_init)
        out[0] = m
        for j in range(1, n):
            m = max(a[j], c * m)
            out[j] = m
        return out

    return nb_linrec_forward, nb_linrec_backward, nb_inverse_power_cumint, nb_decayed_running_max


class _Kernels:
    def __init__(self, name, fwd, bwd, cumint, runmax):
        self.name = name
        self._fwd, self._bwd, self._cumint, self._runmax = fwd, bwd, cumint, runmax

    def linrec_forward(self, M, c0, c1, R, x0):
        return self._fwd(*(np.ascontiguousarray(a, dtype=float) for a in (M, c0, c1, R, x0)))

    def linrec_backward(self, M, d0, d1, R, xN):
        return self._bwd(*(np.ascontiguousarray(a, dtype=float) for a in (M, d0, d1, R, xN)))

    def inverse_power_cumint(self, t, u, kappa, floor=ZERO_FLOOR):
        return self._cumint(np.ascontiguousarray(t, dtype=float),
                            np.ascontiguousarray(u, dtype=float), int(kappa), float(floor))

    def decayed_running_max(self, a, c, m_init=0.0):
        return self._runmax(np.ascontiguousarray(a, dtype=float), float(c), float(m_init))


numpy_kernels = _Kernels("numpy", np_linrec_forward, np_linrec_backward,
                         np_inverse_power_cumint, np_decayed_running_max)


def _select():
    if os.environ.get("NABLOWUP_NO_NUMBA", "").strip() not in ("", "0"):
        return None
    try:
        return _Kernels("numba", *_build_numba())
    except ImportError:
        return None


numba_kernels = _select()
_active = numba_kernels or numpy_kernels
BACKEND = _active.name

linrec_forward = _active.linrec_forward
linrec_backward = _active.linrec_backward
inverse_power_cumint = _active.inverse_power_cumint
decayed_running_max = _active.decayed_running_max
