import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nablowup.errors import NonInvariantAxis, NonInvariantAxisWarning, NonzeroRemainder, ZeroKappaWarning
from nablowup.polyfield import (BlowupChart, Poly, PolyMap2, axis_equilibria_and_linearize,
                                blowup_pullback, desingularize, translate_equilibrium)

u, v = Poly.var(0), Poly.var(1)
EXAMPLE = PolyMap2.parse("x^2 - 2*x*y", "y^2 - 2*x*y", ("x", "y"))

coef = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def polys(draw, max_deg=3, min_deg=0):
    terms = {}
    for i in range(max_deg + 1):
        for j in range(max_deg + 1 - i):
            if i + j >= min_deg and draw(st.booleans()):
                terms[(i, j)] = draw(coef)
    return Poly(terms)


def test_example_blowup_exact():
    blown = blowup_pullback(EXAMPLE, BlowupChart())
    assert blown.px == u ** 2 * (1 - 2 * v)
    assert blown.py == 3 * u * v * (v - 1)


def test_radial_field_blows_up_to_constant_direction():
    blown = blowup_pullback(PolyMap2.parse("x", "y", ("x", "y")), BlowupChart())
    assert blown.px == u and blown.py.is_zero


def test_nonzero_remainder_without_equilibrium():
    with pytest.raises(NonzeroRemainder):
        blowup_pullback(PolyMap2.parse("1", "0", ("x", "y")), BlowupChart())


@given(polys(min_deg=2), polys(min_deg=1))
def test_pullback_chain_rule(px, py):
    # the chart image of the pulled-back flow obeys the original field
    F = PolyMap2(px, py)
    blown = blowup_pullback(F, BlowupChart())
    rng = np.random.default_rng(0)
    for a, b in rng.uniform(-1, 1, size=(5, 2)):
        up, vp = blown.evalf(a, b)
        x_dot, y_dot = up, up * b + a * vp
        want = F.evalf(a, a * b)
        assert np.allclose([x_dot, y_dot], want, atol=1e-10)


def test_chain_rule_along_flow_by_finite_differences():
    rng = np.random.default_rng(3)
    px = Poly({(i, j): Fraction(int(c), 3) for (i, j), c in zip([(2, 0), (1, 1), (0, 3)], rng.integers(-4, 5, 3))})
    py = Poly({(i, j): Fraction(int(c), 2) for (i, j), c in zip([(1, 0), (0, 2), (2, 1)], rng.integers(-4, 5, 3))})
    F = PolyMap2(px, py)
    blown = blowup_pullback(F, BlowupChart())
    from scipy.integrate import solve_ivp
    sol = solve_ivp(lambda t, z: blown.evalf(*z), (0, 0.2), [0.3, 0.4], rtol=1e-12, atol=1e-14,
                    dense_output=True)
    h = 1e-5
    for t in (0.05, 0.1, 0.15):
        img = lambda s: np.array([sol.sol(s)[0], sol.sol(s)[0] * sol.sol(s)[1]])
        fd = (img(t + h) - img(t - h)) / (2 * h)
        x, y = img(t)
        assert np.allclose(fd, F.evalf(x, y), atol=1e-8)


@pytest.mark.parametrize("field,kappa,want", [
    (("u^2*(1 - 2*v)", "3*u*v*(v - 1)"), 1, ("u*(1 - 2*v)", "3*v*(v - 1)")),
    (("u^3", "u^3*v"), 3, ("1", "v")),
    (("u^2 + u^3*v", "u^2*v"), 2, ("1 + u*v", "v")),
])
def test_desingularize_examples(field, kappa, want):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = desingularize(PolyMap2.parse(*field))
    assert d.kappa == kappa
    assert d.f.px == Poly.parse(want[0]) and d.f.py == Poly.parse(want[1])


def test_zero_kappa_warns():
    with pytest.warns(ZeroKappaWarning), pytest.warns(NonInvariantAxisWarning):
        d = desingularize(PolyMap2.parse("1 + u", "v"))
    assert d.kappa == 0


def test_explicit_kappa_too_large():
    with pytest.raises(NonzeroRemainder):
        desingularize(PolyMap2.parse("u^2", "u*v"), kappa=2)


def test_example_equilibria():
    d = desingularize(blowup_pullback(EXAMPLE, BlowupChart()))
    eqs = axis_equilibria_and_linearize(d)
    assert [e.v_star for e in eqs] == [Fraction(0), Fraction(1)]
    assert np.array_equal(eqs[0].jacobian, np.diag([1.0, -3.0]))
    assert np.array_equal(eqs[1].jacobian, np.diag([-1.0, 3.0]))
    assert all(e.classification == "hyperbolic-saddle" and e.exact for e in eqs)
    # (0, 1/2) zeroes only the u-rate
    assert d.f(Fraction(0), Fraction(1, 2))[1] != 0


def test_trivial_saddle():
    with pytest.warns(ZeroKappaWarning):
        eqs = axis_equilibria_and_linearize(desingularize(PolyMap2.parse("u", "-v")))
    assert len(eqs) == 1 and eqs[0].v_star == 0
    assert np.array_equal(eqs[0].jacobian, np.diag([1.0, -1.0]))


def test_non_invariant_axis():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = desingularize(PolyMap2.parse("1 + u", "v"))
    with pytest.raises(NonInvariantAxis):
        axis_equilibria_and_linearize(d)


def test_translate_example():
    d = desingularize(blowup_pullback(EXAMPLE, BlowupChart()))
    t = translate_equilibrium(d, 1)
    assert t.f.py == 3 * (v + 1) * v
    assert t.v_shift == 1
    assert translate_equilibrium(d, 0).f == d.f


@given(polys(), polys(), coef)
def test_translate_round_trip(px, py, c):
    F = PolyMap2(px, py)
    assert F.shift_v(c).shift_v(-c) == F


@given(polys(), polys(), polys())
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) * c == a * c + b * c
    assert a - a == Poly({})


@given(polys(), st.fractions(-3, 3, max_denominator=5), st.fractions(-3, 3, max_denominator=5))
def test_exact_and_float_evaluation_agree(p, a, b):
    assert float(p(a, b)) == pytest.approx(float(p.evalf(float(a), float(b))), abs=1e-9)


@given(polys())
def test_parse_round_trip(p):
    assert Poly.parse(p.to_text()) == p


def test_chart_round_trip():
    ch = BlowupChart()
    rng = np.random.default_rng(1)
    for x, y in rng.uniform(-2, 2, (50, 2)):
        if abs(x) < 1e-3:
            continue
        uu, vv = ch.from_xy(x, y)
        assert np.allclose(ch.to_xy(uu, vv), (x, y), rtol=0, atol=1e-12)
