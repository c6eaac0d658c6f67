"""The fading-memory phase space: history segments on ``(-inf, 0]`` with the
weighted sup norm ``sup_theta e^{lambda theta} |phi(theta)|``.

A :class:`Segment` stores samples on a window ``[-Theta, 0]`` (linear
interpolation in between) and an analytic tail for ``theta < -Theta``. The
tail is a sum of :class:`TailTerm` s, each either a frozen constant or a
linear-flow extension ``e^{(theta + Theta) A} c``; the empty sum is the
zero tail. Sums keep projections of frozen-tail segments exact.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from . import _kernels
from ._expm2 import expm2
from .errors import UnboundedTail

__all__ = [
    "TailTerm",
    "Segment",
    "BParams",
    "make_grid",
    "bnorm",
    "gamma_n",
    "history_integral",
    "lipschitz_check",
    "LipschitzReport",
    "write_segment_csv",
    "read_segment_csv",
    "ZERO_FLOOR",
]

ZERO_FLOOR = 1e-12
_ROUNDOFF = 1e-12


@dataclass(frozen=True)
class TailTerm:
    """One additive piece of a tail, written in ``s = theta + Theta <= 0``.

    ``frozen``: constant ``vec``; ``linear``: ``expm(s A) @ vec``. With
    ``unstable=True`` the vector is restricted to the unstable eigenspace of
    ``A`` and, for a single real unstable mode ``mu``, evaluated as
    ``e^{mu s} vec``; round-off in stable directions would otherwise grow
    without bound as ``s -> -inf``.
    """

    kind: str
    vec: np.ndarray
    A: np.ndarray | None = None
    unstable: bool = False

    def __post_init__(self):
        if self.kind not in ("frozen", "linear"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=float).reshape(2))
        object.__setattr__(self, "_mu", None)
        if self.kind == "linear":
            if self.A is None:
                raise ValueError("linear tail needs a matrix")
            object.__setattr__(self, "A", np.asarray(self.A, dtype=float).reshape(2, 2))
            if self.unstable:
                self._restrict()

    def _restrict(self) -> None:
        d, V = np.linalg.eig(self.A)
        up = np.flatnonzero(d.real > 0)
        if up.size == 0:
            object.__setattr__(self, "vec", np.zeros(2))
        elif up.size == 1:
            k = int(up[0])
            c = np.linalg.solve(V, self.vec.astype(complex))[k]
            object.__setattr__(self, "vec", np.real(c * V[:, k]))
            object.__setattr__(self, "_mu", float(d[k].real))

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.kind == "frozen":
            return np.broadcast_to(self.vec, s.shape + (2,)).copy()
        if self._mu is not None:
            return np.exp(self._mu * s)[..., None] * self.vec
        return expm2(self.A, s) @ self.vec

    def reanchored(self, shift: float) -> TailTerm:
        """Same function written for a window longer by ``shift``."""
        if self.kind == "frozen" or shift == 0:
            return self
        if self._mu is not None:
            return TailTerm("linear", math.exp(-self._mu * shift) * self.vec, self.A, True)
        return TailTerm("linear", expm2(self.A, -shift) @ self.vec, self.A, self.unstable)

    def scaled(self, c: float) -> TailTerm:
        return TailTerm(self.kind, c * self.vec, self.A, self.unstable)

    def modes(self) -> list[tuple[complex, float]]:
        """``(eigenvalue, |component|)`` pairs; round-off components dropped."""
        if self.kind == "frozen":
            return [(0.0, float(np.linalg.norm(self.vec)))]
        if self._mu is not None:
            n = float(np.abs(self.vec).max())
            return [(complex(self._mu), n)] if n > 0 else []
        d, V = np.linalg.eig(self.A)
        if np.linalg.cond(V) > 1e10:
            return []
        coef = np.linalg.solve(V, self.vec.astype(complex))
        scale = float(np.linalg.norm(self.vec))
        out = []
        for k in range(2):
            mag = float(abs(coef[k]) * np.linalg.norm(V[:, k]))
            if mag > _ROUNDOFF * max(scale, 1e-300):
                out.append((complex(d[k]), mag))
        return out

    def describe(self) -> str:
        if self.kind == "frozen":
            return f"frozen({self.vec[0]!r},{self.vec[1]!r})"
        tag = ";unstable" if self.unstable else ""
        return f"linear({self.vec[0]!r},{self.vec[1]!r};A={self.A.ravel().tolist()!r}{tag})"


def make_grid(Theta: float, h0: float = 1e-3, ratio: float = 1.2, hmax: float = 0.05) -> np.ndarray:
    """Ascending grid on ``[-Theta, 0]``, geometrically refined toward 0."""
    if Theta <= 0:
        return np.array([0.0])
    pts = [0.0]
    h = h0
    while pts[-1] > -Theta:
        pts.append(pts[-1] - h)
        h = min(h * ratio, hmax)
    pts[-1] = -Theta
    if len(pts) > 2 and pts[-2] - pts[-1] < 0.25 * h0:
        del pts[-2]
    return np.array(pts[::-1])


@dataclass(frozen=True)
class Segment:
    """History function on ``(-inf, 0]``.

    ``theta`` ascends from ``-Theta`` to ``0``; ``values`` has shape
    ``(n, 2)``.
    """

    theta: np.ndarray
    values: np.ndarray
    tail: tuple[TailTerm, ...] = ()

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        va = np.asarray(self.values, dtype=float)
        if th.ndim != 1 or va.shape != (th.size, 2):
            raise ValueError("values must have shape (len(theta), 2)")
        if th[-1] != 0.0:
            raise ValueError("grid must end at theta = 0")
        if th.size > 1 and np.any(np.diff(th) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "values", va)
        object.__setattr__(self, "tail", tuple(self.tail))

    # construction -----------------------------------------------------
    @classmethod
    def from_function(cls, fn: Callable, theta: np.ndarray, tail: Sequence[TailTerm] | str = "frozen"):
        theta = np.asarray(theta, dtype=float)
        vals = np.asarray([np.asarray(fn(t), dtype=float) for t in theta]).reshape(-1, 2)
        if isinstance(tail, str):
            tail = cls._tail_rule(tail, vals[0])
        return cls(theta, vals, tuple(tail))

    @classmethod
    def from_samples(cls, theta, values, tail: Sequence[TailTerm] | str = "frozen", A=None):
        theta = np.asarray(theta, dtype=float)
        values = np.asarray(values, dtype=float).reshape(-1, 2)
        if theta[0] > theta[-1]:
            theta, values = theta[::-1], values[::-1]
        if isinstance(tail, str):
            tail = cls._tail_rule(tail, values[0], A)
        return cls(theta, values, tuple(tail))

    @staticmethod
    def _tail_rule(rule: str, last, A=None) -> tuple[TailTerm, ...]:
        if rule == "zero":
            return ()
        if rule == "frozen":
            return (TailTerm("frozen", last),) if np.any(last != 0) else ()
        if rule == "linear":
            return (TailTerm("linear", last, A),)
        raise ValueError(f"unknown tail rule {rule!r}")

    @classmethod
    def constant(cls, x, Theta: float = 1.0, tail: str = "frozen", theta=None) -> Segment:
        theta = np.array([-Theta, 0.0]) if theta is None else np.asarray(theta, float)
        vals = np.tile(np.asarray(x, dtype=float), (theta.size, 1))
        return cls(theta, vals, cls._tail_rule(tail, vals[0]))

    @classmethod
    def zeros(cls, Theta: float = 1.0) -> Segment:
        return cls(np.array([-Theta, 0.0]), np.zeros((2, 2)), ())

    # structure --------------------------------------------------------
    @property
    def Theta(self) -> float:
        return float(-self.theta[0])

    @property
    def head(self) -> np.ndarray:
        return self.values[-1].copy()

    @property
    def tail_rule(self) -> str:
        if not self.tail:
            return "zero"
        return "+".join(t.describe() for t in self.tail)

    def tail_value(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros(s.shape + (2,))
        for term in self.tail:
            out += term(s)
        return out

    def __call__(self, theta):
        th = np.asarray(theta, dtype=float)
        flat = np.atleast_1d(th)
        if np.any(flat > 1e-14):
            raise ValueError("segments live on theta <= 0")
        flat = np.minimum(flat, 0.0)
        out = np.empty(flat.shape + (2,))
        inside = flat >= self.theta[0]
        if self.theta.size == 1:
            out[inside] = self.values[0]
        else:
            for k in range(2):
                out[inside, k] = np.interp(flat[inside], self.theta, self.values[:, k])
        if np.any(~inside):
            out[~inside] = self.tail_value(flat[~inside] + self.Theta)
        return out[0] if th.ndim == 0 else out

    # linear algebra ---------------------------------------------------
    def _aligned(self, other: Segment):
        Theta = max(self.Theta, other.Theta)
        grid = np.union1d(self.theta, other.theta)
        grid = grid[grid >= -Theta]
        a_tail = [t.reanchored(Theta - self.Theta) for t in self.tail]
        b_tail = [t.reanchored(Theta - other.Theta) for t in other.tail]
        return grid, self(grid), other(grid), a_tail, b_tail

    def __add__(self, other: Segment) -> Segment:
        if self.theta.shape == other.theta.shape and np.array_equal(self.theta, other.theta):
            return Segment(self.theta, self.values + other.values, self.tail + other.tail)
        grid, a, b, ta, tb = self._aligned(other)
        return Segment(grid, a + b, tuple(ta + tb))

    def __neg__(self) -> Segment:
        return Segment(self.theta, -self.values, tuple(t.scaled(-1.0) for t in self.tail))

    def __sub__(self, other: Segment) -> Segment:
        return self + (-other)

    def __mul__(self, c: float) -> Segment:
        c = float(c)
        return Segment(self.theta, c * self.values, tuple(t.scaled(c) for t in self.tail))

    __rmul__ = __mul__

    def simplified(self) -> Segment:
        """Merge frozen tail terms and drop vanishing ones."""
        frozen = np.zeros(2)
        rest = []
        for t in self.tail:
            if t.kind == "frozen":
                frozen = frozen + t.vec
            elif np.any(t.vec != 0):
                rest.append(t)
        terms = ([TailTerm("frozen", frozen)] if np.any(frozen != 0) else []) + rest
        return Segment(self.theta, self.values, tuple(terms))

    def shifted(self, t: float) -> Segment:
        """``theta -> phi(theta + t)`` restricted to ``theta <= -t``, re-based so
        that the new ``theta = 0`` sits at old ``-t`` (for ``t <= Theta``)."""
        if t < 0 or t > self.Theta:
            raise ValueError("shift must lie in [0, Theta]")
        keep = self.theta <= -t
        grid = np.union1d(self.theta[keep], [-t])
        return Segment(grid + t, self(grid), self.tail)


@dataclass(frozen=True)
class BParams:
    """Norm weight ``lam``, Lipschitz bound ``M`` and window length ``Theta``."""

    lam: float
    M: float = math.inf
    Theta: float = 20.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.M > 0:
            raise ValueError("M must be positive")


def _lam(p) -> float:
    return p.lam if isinstance(p, BParams) else float(p)


def tail_sup(seg: Segment, lam: float) -> float:
    """``sup_{theta < -Theta} e^{lambda theta} |tail(theta)|``."""
    if not seg.tail:
        return 0.0
    rates = []
    for term in seg.tail:
        modes = term.modes()
        if term.kind == "linear" and not modes and not term.unstable and np.any(term.vec != 0):
            # defective matrix: fall back to sampling its spectrum
            ev = np.linalg.eigvals(term.A)
            modes = [(complex(ev[0]), float(np.linalg.norm(term.vec)))]
        for mu, mag in modes:
            r = lam + float(np.real(mu))
            if r <= 0:
                raise UnboundedTail(f"tail grows like e^{{{-r:.3g} |theta|}} against the weight")
            rates.append((r, mag))
    if not rates:
        return 0.0
    rmin = min(r for r, _ in rates)
    S = 60.0 / rmin
    s = -np.concatenate([[0.0], np.geomspace(1e-4, S, 600)])
    vals = np.linalg.norm(seg.tail_value(s), axis=1) * np.exp(lam * s)
    remainder = sum(mag * math.exp(-r * S) for r, mag in rates)
    return float(math.exp(-lam * seg.Theta) * (vals.max() + remainder))


def bnorm(phi: Segment, p) -> float:
    """Weighted sup norm: grid sup on the window plus the analytic tail sup."""
    lam = _lam(p)
    w = np.exp(lam * phi.theta) * np.linalg.norm(phi.values, axis=1)
    return float(max(w.max(), tail_sup(phi, lam)))


def gamma_n(x, n: int, Theta: float | None = None) -> Segment:
    """Tent ``(n theta + 1) x`` on ``[-1/n, 0]``, zero before."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    x = np.asarray(x, dtype=float).reshape(2)
    Theta = 2.0 / n if Theta is None else max(Theta, 1.0 / n)
    theta = np.array([-Theta, -1.0 / n, 0.0]) if Theta > 1.0 / n else np.array([-1.0 / n, 0.0])
    vals = np.array([np.zeros(2) if th <= -1.0 / n else (n * th + 1) * x for th in theta])
    return Segment(theta, vals, ())


def _window_nodes(phi: Segment, t: float) -> tuple[np.ndarray, np.ndarray]:
    lo = max(-t, phi.theta[0])
    keep = phi.theta > lo
    th = np.concatenate([[lo], phi.theta[keep]])
    return th, phi(th)[:, 0]


def history_integral(phi: Segment, t: float, kappa: int, floor: float = ZERO_FLOOR) -> float:
    """``int_{-t}^0 |u(s)|^-kappa ds`` for the first component ``u`` of ``phi``.

    Returns ``inf`` when ``u`` has (numerically) a zero in ``[-t, 0]``: a sign
    change or a sample below ``floor``. On the window the integrand is
    integrated exactly for the piecewise linear ``u``; tail pieces use
    adaptive quadrature.
    """
    if t <= 0:
        return 0.0
    th, u = _window_nodes(phi, t)
    cum = _kernels.inverse_power_cumint(th, u, kappa, floor)
    total = float(cum[-1])
    if math.isinf(total) or t <= phi.Theta:
        return total
    # tail part over [-t, -Theta], written in s = theta + Theta
    s_lo = -(t - phi.Theta)
    probe = np.linspace(s_lo, 0.0, 257)
    ut = phi.tail_value(probe)[:, 0]
    if np.any(np.abs(ut) < floor) or np.any(np.sign(ut) != np.sign(u[0])):
        return math.inf
    if len(phi.tail) == 1 and phi.tail[0].kind == "frozen":
        return total + (t - phi.Theta) * abs(phi.tail[0].vec[0]) ** (-kappa)

    def integrand(s):
        return abs(float(phi.tail_value(s)[0, 0])) ** (-kappa)

    val, _ = quad(integrand, s_lo, 0.0, epsabs=0.0, epsrel=1e-11, limit=200, points=probe[1:-1:32])
    return total + val


@dataclass(frozen=True)
class LipschitzReport:
    certified: bool
    max_ratio: float


def lipschitz_check(phi: Segment, M: float) -> LipschitzReport:
    """Largest difference quotient over adjacent grid pairs and along the tail."""
    ratio = 0.0
    if phi.theta.size > 1:
        d = np.linalg.norm(np.diff(phi.values, axis=0), axis=1) / np.diff(phi.theta)
        ratio = float(d.max())
    if phi.tail:
        s = -np.concatenate([[0.0], np.geomspace(1e-4, 60.0, 400)])
        tv = phi.tail_value(s)
        seam = float(np.linalg.norm(tv[0] - phi.values[0]))
        if seam > 1e-9 * max(1.0, float(np.abs(phi.values).max())):
            return LipschitzReport(False, math.inf)
        deriv = np.zeros((s.size, 2))
        for term in phi.tail:
            if term.kind == "linear":
                deriv += (term.A @ term(s).T).T
        ratio = max(ratio, float(np.linalg.norm(deriv, axis=1).max()))
    return LipschitzReport(ratio <= M * (1 + 1e-12), ratio)


def write_segment_csv(path, phi: Segment, params: BParams | None = None) -> None:
    """CSV with columns theta, u, v in descending theta; a comment line
    records lambda, M, Theta and the tail rule."""
    lam = params.lam if params else float("nan")
    M = params.M if params else float("nan")
    with open(path, "w", newline="") as fh:
        fh.write(f"# lambda={lam!r} M={M!r} Theta={phi.Theta!r} tail={phi.tail_rule}\n")
        w = csv.writer(fh)
        w.writerow(["theta", "u", "v"])
        for th, (a, b) in zip(phi.theta[::-1], phi.values[::-1]):
            w.writerow([repr(float(th)), repr(float(a)), repr(float(b))])


def read_segment_csv(path, tail: str = "frozen") -> Segment:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))[1:]
    data = np.array([[float(x) for x in r] for r in rows])
    return Segment.from_samples(data[:, 0], data[:, 1:], tail)
