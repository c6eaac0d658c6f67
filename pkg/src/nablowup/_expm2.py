"""Closed-form ``exp(t A)`` for real 2x2 ``A``, vectorized over ``t``.

With ``m = tr(A)/2`` and ``N = A - m I`` one has ``N^2 = q I`` where
``q = m^2 - det(A)``, so ``exp(tA) = e^{mt} (c(t) I + s(t) N)`` with
``c, s`` hyperbolic (``q > 0``), trigonometric (``q < 0``) or polynomial
(``q = 0``, defective or scalar) in ``t``.
"""
from __future__ import annotations

import numpy as np

__all__ = ["expm2"]


def expm2(A, t) -> np.ndarray:
    """``exp(t A)``; shape ``(2, 2)`` for scalar ``t`` else ``(n, 2, 2)``."""
    A = np.asarray(A, dtype=float)
    tt = np.asarray(t, dtype=float)
    ts = np.atleast_1d(tt).ravel()
    m = 0.5 * (A[0, 0] + A[1, 1])
    N = A - m * np.eye(2)
    q = m * m - (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    scale = max(1.0, float(np.abs(A).max())) ** 2
    r = np.sqrt(abs(q))
    x = r * ts
    with np.errstate(over="ignore", invalid="ignore"):
        if abs(q) <= 1e-15 * scale:
            c = np.exp(m * ts)
            s = ts * np.exp(m * ts)
        elif q > 0:
            # projector form: the cosh/sinh split cancels the slow mode
            small = np.abs(x) < 1e-3
            e1 = np.exp((m + r) * ts)
            e2 = np.exp((m - r) * ts)
            Pp = (N + r * np.eye(2)) / (2 * r)
            Pm = (r * np.eye(2) - N) / (2 * r)
            out = e1[:, None, None] * Pp + e2[:, None, None] * Pm
            if np.any(small):
                xs = x[small]
                em = np.exp(m * ts[small])
                cs = em * (1.0 + xs * xs / 2.0 + xs ** 4 / 24.0)
                ss = em * ts[small] * (1.0 + xs * xs / 6.0 + xs ** 4 / 120.0)
                out[small] = cs[:, None, None] * np.eye(2) + ss[:, None, None] * N
            return out[0] if tt.ndim == 0 else out.reshape(tt.shape + (2, 2))
        else:
            em = np.exp(m * ts)
            c = em * np.cos(x)
            sinc = np.where(np.abs(x) < 1e-4, 1.0 - x * x / 6.0, np.sin(x) / np.where(x == 0, 1.0, x))
            s = em * ts * sinc
    out = c[:, None, None] * np.eye(2) + s[:, None, None] * N
    return out[0] if tt.ndim == 0 else out.reshape(tt.shape + (2, 2))
