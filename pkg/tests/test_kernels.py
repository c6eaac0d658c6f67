import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nablowup import _kernels

BACKENDS = [k for k in (_kernels.numpy_kernels, _kernels.numba_kernels) if k is not None]
floats = st.floats(-1.0, 1.0)


def ref_forward(M, c0, c1, R, x0):
    out = [np.asarray(x0, float)]
    for k in range(len(R) - 1):
        out.append(M @ out[-1] + c0 @ R[k] + c1 @ R[k + 1])
    return np.array(out)


def ref_runmax(a, c, m):
    out = np.empty(len(a))
    prev = m
    for k, x in enumerate(a):
        prev = max(x, prev if k == 0 else c * prev)
        out[k] = prev
    return out


@pytest.mark.parametrize("k", BACKENDS, ids=lambda k: k.name)
@given(st.integers(0, 2 ** 31), st.integers(1, 60), st.sampled_from([0, 1]))
def test_linrec_against_loop(k, seed, n, defective):
    rng = np.random.default_rng(seed)
    M = np.array([[0.9, 1.0], [0.0, 0.9]]) if defective else 0.5 * rng.normal(size=(2, 2))
    c0, c1 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    R = rng.normal(size=(n + 1, 2))
    x0 = rng.normal(size=2)
    ref = ref_forward(M, c0, c1, R, x0)
    scale = 1 + np.abs(ref).max()
    assert np.max(np.abs(k.linrec_forward(M, c0, c1, R, x0) - ref)) <= 1e-10 * scale
    back = k.linrec_backward(M, c0, c1, R, x0)
    ref_b = ref_forward(M, c1, c0, R[::-1], x0)[::-1]
    assert np.max(np.abs(back - ref_b)) <= 1e-10 * (1 + np.abs(ref_b).max())


@pytest.mark.parametrize("k", BACKENDS, ids=lambda k: k.name)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=80), st.floats(0.0, 1.0), st.floats(0.0, 20.0))
def test_running_max_against_loop(k, a, c, m):
    a = np.array(a)
    assert np.allclose(k.decayed_running_max(a, c, m), ref_runmax(a, c, m), rtol=1e-12, atol=0)


@pytest.mark.parametrize("k", BACKENDS, ids=lambda k: k.name)
@pytest.mark.parametrize("kappa", [1, 2, 3])
def test_cumint_exact_on_linear_pieces(k, kappa):
    t = np.array([0.0, 0.5, 1.5, 2.0])
    u = np.array([1.0, 2.0, 2.0, 0.5])
    got = k.inverse_power_cumint(t, u, kappa)
    # closed form of int (a + b s)^-kappa per piece
    def piece(h, a0, a1):
        b = (a1 - a0) / h
        if b == 0:
            return h / a0 ** kappa
        if kappa == 1:
            return np.log(a1 / a0) / b
        return (a1 ** (1 - kappa) - a0 ** (1 - kappa)) / (b * (1 - kappa))
    ref = np.concatenate([[0.0], np.cumsum([piece(t[i + 1] - t[i], u[i], u[i + 1]) for i in range(3)])])
    assert np.allclose(got, ref, rtol=1e-13)
    assert np.all(np.isinf(k.inverse_power_cumint(t, np.array([1.0, -1.0, 1.0, 1.0]), kappa)[1:]))


@pytest.mark.skipif(_kernels.numba_kernels is None, reason="numba unavailable")
def test_backend_parity():
    rng = np.random.default_rng(3)
    n = 4000
    M = np.array([[0.95, 0.02], [-0.01, 0.9]])
    c0, c1 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    R = rng.normal(size=(n + 1, 2))
    t = np.linspace(0, 20, n + 1)
    u = 0.5 + 0.4 * np.sin(t)
    a = np.abs(rng.normal(size=n + 1))
    nb, npk = _kernels.numba_kernels, _kernels.numpy_kernels
    for f in (lambda k: k.linrec_forward(M, c0, c1, R, np.ones(2)),
              lambda k: k.linrec_backward(M, c0, c1, R, np.ones(2)),
              lambda k: k.inverse_power_cumint(t, u, 2),
              lambda k: k.decayed_running_max(a, 0.999, 1.0)):
        x, y = f(nb), f(npk)
        assert np.max(np.abs(x - y)) <= 1e-10 * (1 + np.abs(y).max())


def test_no_numba_env():
    env = dict(os.environ, NABLOWUP_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from nablowup import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
