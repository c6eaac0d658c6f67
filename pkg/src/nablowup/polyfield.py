"""Exact bivariate polynomial algebra for planar vector fields.

Coefficients are :class:`fractions.Fraction`; every transformation here
(blow-up pullback, division by powers of ``u``, recentring) is exact.
Floating point only appears in eigenvalue extraction and in the
refinement of irrational roots on the exceptional line.
"""
from __future__ import annotations

import ast
import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    NonInvariantAxis,
    NonInvariantAxisWarning,
    NonzeroRemainder,
    ZeroKappaWarning,
)

__all__ = [
    "Poly",
    "PolyMap2",
    "BlowupChart",
    "DesingularizedField",
    "AxisEquilibrium",
    "blowup_pullback",
    "pushforward",
    "desingularize",
    "axis_equilibria_and_linearize",
    "translate_equilibrium",
    "real_roots",
]

Rational = Fraction | int


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        return Fraction(c)
    return Fraction(c)


class Poly:
    """Bivariate polynomial ``sum c_ij * a^i b^j`` with rational coefficients.

    The variables are positional; ``var_names`` only affects printing.
    Zero coefficients are never stored.
    """

    __slots__ = ("terms", "var_names", "__dict__")

    def __init__(self, terms: Mapping[tuple[int, int], Rational] | None = None,
                 var_names: tuple[str, str] = ("u", "v")):
        clean: dict[tuple[int, int], Fraction] = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError("negative exponent")
            c = _frac(c)
            if c:
                clean[(int(i), int(j))] = clean.get((int(i), int(j)), Fraction(0)) + c
                if not clean[(int(i), int(j))]:
                    del clean[(int(i), int(j))]
        self.terms = clean
        self.var_names = tuple(var_names)

    # construction -----------------------------------------------------
    @classmethod
    def const(cls, c: Rational, var_names=("u", "v")) -> Poly:
        return cls({(0, 0): c}, var_names)

    @classmethod
    def var(cls, k: int, var_names=("u", "v")) -> Poly:
        return cls({(1, 0) if k == 0 else (0, 1): 1}, var_names)

    @classmethod
    def monomial(cls, i: int, j: int, c: Rational = 1, var_names=("u", "v")) -> Poly:
        return cls({(i, j): c}, var_names)

    def renamed(self, var_names: tuple[str, str]) -> Poly:
        return Poly(self.terms, var_names)

    # arithmetic -------------------------------------------------------
    def _coerce(self, other) -> Poly:
        if isinstance(other, Poly):
            return other
        return Poly.const(other, self.var_names)

    def __add__(self, other) -> Poly:
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return Poly(out, self.var_names)

    __radd__ = __add__

    def __neg__(self) -> Poly:
        return Poly({k: -c for k, c in self.terms.items()}, self.var_names)

    def __sub__(self, other) -> Poly:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> Poly:
        return self._coerce(other) - self

    def __mul__(self, other) -> Poly:
        other = self._coerce(other)
        out: dict[tuple[int, int], Fraction] = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                k = (i1 + i2, j1 + j2)
                out[k] = out.get(k, Fraction(0)) + c1 * c2
        return Poly(out, self.var_names)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Poly:
        if n < 0:
            raise ValueError("negative power")
        out = Poly.const(1, self.var_names)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == Poly.const(other).terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        return f"Poly({self.to_text()!r})"

    # structure --------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((i + j for i, j in self.terms), default=-1)

    def u_valuation(self) -> float:
        """Largest ``k`` with ``a^k`` dividing the polynomial (inf for zero)."""
        return min((i for i, _ in self.terms), default=math.inf)

    def div_u_power(self, k: int) -> Poly:
        """Exact division by ``a^k``; raises :class:`NonzeroRemainder`."""
        if k == 0:
            return self
        if any(i < k for i, _ in self.terms):
            rem = {(i, j): c for (i, j), c in self.terms.items() if i < k}
            raise NonzeroRemainder(
                f"division by {self.var_names[0]}^{k} leaves remainder "
                f"{Poly(rem, self.var_names).to_text()}")
        return Poly({(i - k, j): c for (i, j), c in self.terms.items()}, self.var_names)

    def diff(self, k: int) -> Poly:
        out = {}
        for (i, j), c in self.terms.items():
            if k == 0 and i:
                out[(i - 1, j)] = c * i
            elif k == 1 and j:
                out[(i, j - 1)] = c * j
        return Poly(out, self.var_names)

    def compose(self, pa: Poly, pb: Poly) -> Poly:
        """Substitute ``a <- pa`` and ``b <- pb``."""
        names = pa.var_names
        out = Poly({}, names)
        pa_pows: dict[int, Poly] = {}
        pb_pows: dict[int, Poly] = {}
        for (i, j), c in self.terms.items():
            if i not in pa_pows:
                pa_pows[i] = pa ** i
            if j not in pb_pows:
                pb_pows[j] = pb ** j
            out = out + pa_pows[i] * pb_pows[j] * c
        return Poly(out.terms, names)

    def shift_b(self, c: Rational) -> Poly:
        """Recentre the second variable: ``p(a, b + c)``."""
        a = Poly.var(0, self.var_names)
        b = Poly.var(1, self.var_names) + _frac(c)
        return self.compose(a, b)

    def restrict_a0(self) -> list[Fraction]:
        """Coefficients (low to high) of ``p(0, b)``."""
        deg = max((j for i, j in self.terms if i == 0), default=-1)
        out = [Fraction(0)] * (deg + 1)
        for (i, j), c in self.terms.items():
            if i == 0:
                out[j] = c
        return out

    # evaluation -------------------------------------------------------
    def __call__(self, a, b):
        """Evaluate at a point.

        Rational inputs give an exact :class:`Fraction`; float or numpy
        inputs are evaluated in floating point via the compiled form.
        """
        if all(isinstance(x, (int, Fraction)) for x in (a, b)):
            a, b = Fraction(a), Fraction(b)
            return sum((c * a ** i * b ** j for (i, j), c in self.terms.items()), Fraction(0))
        return self.evalf(a, b)

    @cached_property
    def _compiled(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.terms:
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
        keys = sorted(self.terms)
        ex = np.array(keys, dtype=np.int64)
        co = np.array([float(self.terms[k]) for k in keys])
        return ex, co

    def evalf(self, a, b):
        ex, co = self._compiled
        a_arr = np.asarray(a, dtype=float)
        b_arr = np.asarray(b, dtype=float)
        shape = np.broadcast(a_arr, b_arr).shape
        if co.size == 0:
            out = np.zeros(shape)
        else:
            a_f = np.broadcast_to(a_arr, shape)[..., None]
            b_f = np.broadcast_to(b_arr, shape)[..., None]
            out = (co * a_f ** ex[:, 0] * b_f ** ex[:, 1]).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    def coef_bound(self, radius: float, min_degree: int = 0) -> float:
        """``sum |c_ij| radius^(i+j)`` over terms of degree >= ``min_degree``.

        Upper bound for ``|p|`` on the square ``|a|, |b| <= radius``.
        """
        return float(sum(abs(float(c)) * radius ** (i + j)
                         for (i, j), c in self.terms.items() if i + j >= min_degree))

    # text format ------------------------------------------------------
    def sorted_terms(self) -> list[tuple[tuple[int, int], Fraction]]:
        # graded lex: total degree, then higher power of the first variable
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0] + kv[0][1], -kv[0][0]))

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        a, b = self.var_names
        parts = []
        for n, ((i, j), c) in enumerate(self.sorted_terms()):
            mag = abs(c)
            cs = str(mag.numerator) if mag.denominator == 1 else f"({mag.numerator}/{mag.denominator})"
            mono = [f"{x}^{k}" if k > 1 else x for x, k in ((a, i), (b, j)) if k]
            body = "*".join(mono if mag == 1 and mono else [cs, *mono])
            if n == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append(("- " if c < 0 else "+ ") + body)
        return " ".join(parts)

    @classmethod
    def parse(cls, text: str, var_names: tuple[str, str] = ("u", "v")) -> Poly:
        """Parse a polynomial expression: ``+ - *``, non-negative integer
        powers (``^`` or ``**``), parentheses, division by constants and
        juxtaposed factors such as ``3u^2v``. Decimal literals are exact."""
        a, b = var_names
        s = text.replace("^", "**").strip()
        if not s:
            raise ValueError("empty polynomial")
        s = " ".join(_juxtaposed(s, var_names))
        try:
            tree = ast.parse(s, mode="eval")
        except SyntaxError:
            raise ValueError(f"cannot parse polynomial {text!r}") from None
        return _poly_from_ast(tree.body, text, var_names)


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+)|([A-Za-z_]\w*)|(\*\*|[-+*/()]))")


def _juxtaposed(s: str, names: tuple[str, str]) -> list[str]:
    """Tokens with explicit ``*`` between adjacent operands; glued variable
    runs such as ``uvu`` are split into single names."""
    out: list[str] = []
    pos = 0
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            if s[pos:].strip():
                raise ValueError(f"cannot parse polynomial {s!r}")
            break
        pos = m.end()
        num, name, op = m.groups()
        toks = [num] if num else [op] if op else _split_names(name, names)
        for tok in toks:
            operand_start = tok == "(" or tok[0].isalnum() or tok[0] in "._"
            if out and operand_start and (out[-1] == ")" or out[-1][0].isalnum() or out[-1][0] in "._"):
                out.append("*")
            out.append(tok)
    return out


def _split_names(word: str, names: tuple[str, str]) -> list[str]:
    if word in names:
        return [word]
    parts, rest = [], word
    while rest:
        hit = next((n for n in sorted(names, key=len, reverse=True) if rest.startswith(n)), None)
        if hit is None:
            return [word]
        parts.append(hit)
        rest = rest[len(hit):]
    return parts


def _poly_from_ast(node, text: str, names: tuple[str, str]) -> Poly:
    def walk(n) -> Poly:
        if isinstance(n, ast.Constant) and isinstance(n.value, (int, float)) and not isinstance(n.value, bool):
            return Poly.const(Fraction(str(n.value)), names)
        if isinstance(n, ast.Name) and n.id in names:
            return Poly.var(names.index(n.id), names)
        if isinstance(n, ast.UnaryOp) and isinstance(n.op, (ast.UAdd, ast.USub)):
            p = walk(n.operand)
            return -p if isinstance(n.op, ast.USub) else p
        if isinstance(n, ast.BinOp):
            if isinstance(n.op, ast.Pow):
                e = walk(n.right)
                k = e.terms.get((0, 0), Fraction(0)) if e.degree <= 0 else None
                if k is None or k.denominator != 1 or k < 0:
                    raise ValueError(f"exponent must be a non-negative integer in {text!r}")
                return walk(n.left) ** int(k)
            left, right = walk(n.left), walk(n.right)
            if isinstance(n.op, ast.Add):
                return left + right
            if isinstance(n.op, ast.Sub):
                return left - right
            if isinstance(n.op, ast.Mult):
                return left * right
            if isinstance(n.op, ast.Div):
                if right.degree > 0 or right.is_zero:
                    raise ValueError(f"can only divide by a nonzero constant in {text!r}")
                return left * (1 / right.terms[(0, 0)])
        raise ValueError(f"bad term {ast.unparse(n)!r} in {text!r}")

    return walk(node)


@dataclass(frozen=True)
class PolyMap2:
    """Planar polynomial vector field ``(px, py)``."""

    px: Poly
    py: Poly
    var_names: tuple[str, str] = ("u", "v")

    def __post_init__(self):
        object.__setattr__(self, "px", self.px.renamed(self.var_names))
        object.__setattr__(self, "py", self.py.renamed(self.var_names))

    @classmethod
    def parse(cls, px: str, py: str, var_names=("u", "v")) -> PolyMap2:
        return cls(Poly.parse(px, var_names), Poly.parse(py, var_names), tuple(var_names))

    @classmethod
    def zero(cls, var_names=("u", "v")) -> PolyMap2:
        return cls(Poly({}, var_names), Poly({}, var_names), tuple(var_names))

    @property
    def comps(self) -> tuple[Poly, Poly]:
        return (self.px, self.py)

    @property
    def is_zero(self) -> bool:
        return self.px.is_zero and self.py.is_zero

    def __call__(self, a, b):
        return (self.px(a, b), self.py(a, b))

    def evalf(self, a, b) -> np.ndarray:
        """Vectorized float evaluation; returns shape ``(..., 2)``."""
        return np.stack([np.asarray(self.px.evalf(a, b)), np.asarray(self.py.evalf(a, b))], axis=-1)

    @cached_property
    def jacobian_polys(self) -> tuple[tuple[Poly, Poly], tuple[Poly, Poly]]:
        return ((self.px.diff(0), self.px.diff(1)), (self.py.diff(0), self.py.diff(1)))

    def jacobian(self, a, b):
        """Jacobian at a point; exact ``Fraction`` entries for rational input."""
        J = self.jacobian_polys
        if all(isinstance(x, (int, Fraction)) for x in (a, b)):
            return [[J[r][c](a, b) for c in range(2)] for r in range(2)]
        return np.array([[J[r][c].evalf(a, b) for c in range(2)] for r in range(2)], dtype=float)

    def jacobianf(self, a, b) -> np.ndarray:
        """Vectorized float Jacobian, shape ``(..., 2, 2)``."""
        J = self.jacobian_polys
        rows = [np.stack([np.asarray(J[r][c].evalf(a, b)) for c in range(2)], axis=-1)
                for r in range(2)]
        return np.stack(rows, axis=-2)

    def linear_part(self) -> np.ndarray:
        return np.array(self.jacobian(0, 0), dtype=float)

    def shift_v(self, c: Rational) -> PolyMap2:
        return PolyMap2(self.px.shift_b(c), self.py.shift_b(c), self.var_names)

    def div_u_power(self, k: int) -> PolyMap2:
        return PolyMap2(self.px.div_u_power(k), self.py.div_u_power(k), self.var_names)

    def scaled(self, c: Rational) -> PolyMap2:
        return PolyMap2(self.px * c, self.py * c, self.var_names)

    def to_text(self) -> tuple[str, str]:
        return (self.px.to_text(), self.py.to_text())


@dataclass(frozen=True)
class BlowupChart:
    """Directional (optionally weighted) blow-up chart.

    x-directional: ``(x, y) = (sign * u^p, u^q * v)``;
    y-directional: ``(x, y) = (u^q * v, sign * u^p)``.
    Weights ``(1, 1)`` with ``sign=+1`` in the x direction give the classical
    chart ``(x, y) = (u, u v)``, which covers both half planes ``x > 0`` and
    ``x < 0`` through the sign of ``u``.
    """

    direction: str = "x"
    sign: int = 1
    weights: tuple[int, int] = (1, 1)

    def __post_init__(self):
        if self.direction not in ("x", "y"):
            raise ValueError("direction must be 'x' or 'y'")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        p, q = self.weights
        if p < 1 or q < 1 or math.gcd(p, q) != 1:
            raise ValueError(f"weights must be coprime positive integers, got {self.weights}")

    def substitution(self) -> tuple[Poly, Poly]:
        """Polynomials ``(x(u, v), y(u, v))``."""
        p, q = self.weights
        a = Poly.monomial(p, 0, self.sign)
        b = Poly.monomial(q, 1, 1)
        return (a, b) if self.direction == "x" else (b, a)

    def to_xy(self, u, v):
        p, q = self.weights
        a = self.sign * u ** p
        b = u ** q * v
        return (a, b) if self.direction == "x" else (b, a)

    def from_xy(self, x, y):
        """Inverse chart map on the region where it is defined (``u > 0``
        when ``p`` is even)."""
        p, q = self.weights
        a, b = (x, y) if self.direction == "x" else (y, x)
        s = a * self.sign
        if p == 1:
            u = s
        elif p % 2:
            u = math.copysign(abs(s) ** (1.0 / p), s)
        else:
            if s < 0:
                raise ValueError("point not covered by this chart")
            u = s ** (1.0 / p)
        if u == 0:
            raise ValueError("point on the exceptional line")
        return u, b / u ** q


def blowup_pullback(field: PolyMap2, chart: BlowupChart) -> PolyMap2:
    """Exact pullback of ``field`` (in ``x, y``) through ``chart``.

    With ``a = sign * u^p`` the chart's directional coordinate and
    ``b = u^q v`` the other one, the transformed field is
    ``u' = sign * a'/(p u^(p-1))`` and ``v' = (b' - q u^(q-1) v u')/u^q``.
    Both divisions must be exact; they are whenever the origin is an
    equilibrium of a weight-(1, 1) input.
    """
    p, q = chart.weights
    names = ("u", "v")
    xs, ys = chart.substitution()
    fx = field.px.compose(xs, ys)
    fy = field.py.compose(xs, ys)
    fa, fb = (fx, fy) if chart.direction == "x" else (fy, fx)
    try:
        up = (fa * Fraction(chart.sign, p)).div_u_power(p - 1)
        vnum = fb - Poly.monomial(q - 1, 1, q, names) * up
        vp = vnum.div_u_power(q)
    except NonzeroRemainder as exc:
        raise NonzeroRemainder(
            f"blow-up of {field.to_text()} in chart {chart} is not polynomial: {exc}") from None
    return PolyMap2(up, vp, names)


def pushforward(blown: PolyMap2, chart: BlowupChart, u, v):
    """Map a blown-up vector at ``(u, v)`` through the chart differential.

    Exact for rational input; used to certify pullback round trips.
    """
    p, q = chart.weights
    up, vp = blown(u, v)
    da = chart.sign * p * u ** (p - 1) * up
    db = q * u ** (q - 1) * v * up + u ** q * vp
    return (da, db) if chart.direction == "x" else (db, da)


@dataclass(frozen=True)
class DesingularizedField:
    """Desingularized autonomous part ``f`` and forcing coefficient ``g``.

    ``v_shift`` records the accumulated recentring ``v -> v + v_shift``
    so that blow-down can return to the chart's original ``v``.
    """

    f: PolyMap2
    g: PolyMap2
    kappa: int
    axis_invariant: bool = True
    v_shift: Fraction = Fraction(0)
    chart: BlowupChart = field(default_factory=BlowupChart)


def desingularize(field: PolyMap2, kappa: int | None = None,
                  forcing_field: PolyMap2 | None = None,
                  chart: BlowupChart | None = None) -> DesingularizedField:
    """Divide the blown-up field(s) by the common factor ``u^kappa``.

    ``kappa`` defaults to the minimum ``u``-adic valuation of ``field``'s
    components. ``forcing_field`` (the blown-up ``G``) is divided by the
    same power and must be divisible.
    """
    val = min(field.px.u_valuation(), field.py.u_valuation())
    if kappa is None:
        if val == math.inf:
            raise ValueError("cannot desingularize the zero field")
        kappa = int(val)
    elif kappa > val:
        raise NonzeroRemainder(f"field is only divisible by u^{val}, not u^{kappa}")
    if kappa == 0:
        warnings.warn("blown-up field has no common factor u; kappa = 0", ZeroKappaWarning,
                      stacklevel=2)
    f = field.div_u_power(kappa)
    g = (forcing_field or PolyMap2.zero()).div_u_power(kappa)
    invariant = f.px.u_valuation() >= 1
    if not invariant:
        warnings.warn("u-component of the desingularized field does not vanish on u = 0",
                      NonInvariantAxisWarning, stacklevel=2)
    return DesingularizedField(f, g, kappa, invariant, Fraction(0), chart or BlowupChart())


def translate_equilibrium(dfield: DesingularizedField, v_star) -> DesingularizedField:
    """Recentre ``v -> v + v_star`` so that ``(0, v_star)`` moves to the origin."""
    c = _frac(v_star)
    return DesingularizedField(dfield.f.shift_v(c), dfield.g.shift_v(c), dfield.kappa,
                               dfield.axis_invariant, dfield.v_shift + c, dfield.chart)


# ---------------------------------------------------------------------------
# univariate root finding on the exceptional line

def _trim(p: list[Fraction]) -> list[Fraction]:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _peval(p: Sequence[Fraction], x) -> Fraction:
    acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _pdiv(n: list[Fraction], d: list[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    n = _trim(n)
    d = _trim(d)
    if not d:
        raise ZeroDivisionError
    q = [Fraction(0)] * max(len(n) - len(d) + 1, 1)
    r = list(n)
    while len(r) >= len(d) and r:
        k = len(r) - len(d)
        c = r[-1] / d[-1]
        q[k] = c
        for i, dc in enumerate(d):
            r[i + k] -= c * dc
        r = _trim(r)
    return _trim(q), r


def _pgcd(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a, b = _trim(a), _trim(b)
    while b:
        _, r = _pdiv(a, b)
        a, b = b, r
    return [c / a[-1] for c in a] if a else a


def _pderiv(p: list[Fraction]) -> list[Fraction]:
    return [c * k for k, c in enumerate(p)][1:]


def _divisors(n: int) -> list[int]:
    n = abs(n)
    out = set()
    k = 1
    while k * k <= n:
        if n % k == 0:
            out.add(k)
            out.add(n // k)
        k += 1
    return sorted(out)


def _rational_roots(p: list[Fraction]) -> list[Fraction]:
    p = _trim(p)
    lcm = 1
    for c in p:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in p]
    # strip the root at zero before the divisor test
    roots = []
    while ints and ints[0] == 0:
        ints.pop(0)
        if Fraction(0) not in roots:
            roots.append(Fraction(0))
    if len(ints) <= 1:
        return roots
    a0, an = ints[0], ints[-1]
    for num in _divisors(a0):
        for den in _divisors(an):
            for s in (1, -1):
                x = Fraction(s * num, den)
                if x not in roots and _peval(p, x) == 0:
                    roots.append(x)
    return sorted(roots)


def _sturm(p: list[Fraction]) -> list[list[Fraction]]:
    seq = [p, _pderiv(p)]
    while _trim(seq[-1]) and len(_trim(seq[-1])) > 1:
        _, r = _pdiv(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])
    return [s for s in seq if _trim(s)]


def _sign_changes(seq, x: Fraction) -> int:
    signs = [v for v in (_peval(s, x) for s in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def real_roots(coeffs: Sequence[Rational], tol: float = 1e-12) -> list[Fraction | float]:
    """Distinct real roots of a univariate rational polynomial.

    Rational roots are returned exactly as ``Fraction``; the remaining
    real roots are isolated with a Sturm sequence and bisected to width
    ``tol`` (returned as ``float``).
    """
    p = _trim([_frac(c) for c in coeffs])
    if not p:
        raise ValueError("zero polynomial has a continuum of roots")
    exact = _rational_roots(p)
    q = list(p)
    for r in exact:
        while True:
            quo, rem = _pdiv(q, [-r, Fraction(1)])
            if rem:
                break
            q = quo
    q = _trim(q)
    out: list[Fraction | float] = list(exact)
    if len(q) > 1:
        sq, _ = _pdiv(q, _pgcd(q, _pderiv(q)))
        seq = _sturm(sq)
        bound = 1 + max(abs(c / sq[-1]) for c in sq[:-1])
        stack = [(-bound, bound)]
        intervals = []
        while stack:
            lo, hi = stack.pop()
            n = _sign_changes(seq, lo) - _sign_changes(seq, hi)
            if n == 0:
                continue
            if n == 1:
                intervals.append((lo, hi))
                continue
            mid = (lo + hi) / 2
            if _peval(sq, mid) == 0:
                out.append(mid)
                mid_l, mid_r = mid - (hi - lo) / 1024, mid + (hi - lo) / 1024
                stack.extend([(lo, mid_l), (mid_r, hi)])
            else:
                stack.extend([(lo, mid), (mid, hi)])
        for lo, hi in intervals:
            flo = _peval(sq, lo)
            while hi - lo > tol:
                mid = (lo + hi) / 2
                fm = _peval(sq, mid)
                if fm == 0:
                    lo = hi = mid
                    break
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
                # keep denominators small
                lo = Fraction(lo).limit_denominator(1 << 60) if lo.denominator > (1 << 62) else lo
            out.append(float((lo + hi) / 2))
    return sorted(out, key=float)


@dataclass(frozen=True)
class AxisEquilibrium:
    v_star: Fraction | float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    exact: bool

    @property
    def point(self) -> tuple[float, float]:
        return (0.0, float(self.v_star))


HYPERBOLIC_TOL = 1e-9


def classify_eigenvalues(eigs: np.ndarray, tol: float = HYPERBOLIC_TOL) -> str:
    re_ = np.real(eigs)
    if np.any(np.abs(re_) < tol):
        return "non-hyperbolic"
    if re_.min() < 0 < re_.max():
        return "hyperbolic-saddle"
    return "hyperbolic-node/focus"


def axis_equilibria_and_linearize(dfield: DesingularizedField,
                                  tol: float = 1e-12) -> list[AxisEquilibrium]:
    """Equilibria ``(0, v*)`` of ``f`` on the exceptional line with their
    linearization and hyperbolicity class."""
    f = dfield.f
    if f.px.u_valuation() < 1:
        raise NonInvariantAxis("u-component of f does not vanish on u = 0")
    coeffs = f.py.restrict_a0()
    if not _trim(coeffs):
        raise ValueError("v-component vanishes identically on u = 0: line of equilibria")
    out = []
    for r in real_roots(coeffs, tol):
        exact = isinstance(r, Fraction)
        if exact:
            J_exact = f.jacobian(0, r)
            J = np.array([[float(c) for c in row] for row in J_exact])
        else:
            J = f.jacobian(0.0, r)
        eig = np.linalg.eigvals(J)
        out.append(AxisEquilibrium(r, J, eig, classify_eigenvalues(eig), exact))
    return out
