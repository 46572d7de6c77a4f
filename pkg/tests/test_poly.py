import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gopw.poly import (
    CenterMismatchError,
    CenteredPolynomial,
    F,
    F_inv,
    add,
    differentiate,
    evaluate,
    m,
    multiply,
    scale,
    truncate,
)

C0 = (0.5, -0.25)


def mono(r, j, coeff=1.0, center=C0):
    return CenteredPolynomial.monomial(center, r, j, coeff)


# multi-index map --------------------------------------------------------------

def test_F_first_entries():
    assert [F(0, 0), F(1, 0), F(0, 1), F(2, 0), F(1, 1), F(0, 2)] == [1, 2, 3, 4, 5, 6]
    assert m(0) == 1 and m(3) == 10


def test_F_bijection_and_roundtrip_to_degree_40():
    seen = set()
    for d in range(41):
        for j in range(d + 1):
            k = F(d - j, j)
            assert F_inv(k) == (d - j, j)
            seen.add(k)
    assert seen == set(range(1, m(40) + 1))


def test_F_rejects_bad_input():
    with pytest.raises(ValueError):
        F(-1, 0)
    with pytest.raises(ValueError):
        F_inv(0)


# evaluate ---------------------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(CenteredPolynomial.constant((0, 0), 1.0), (0.3, 0.7)) == 1.0
    assert evaluate(mono(1, 0, center=(0.5, 0.0)), (0.75, 0.0)) == pytest.approx(0.25, abs=1e-15)
    p = mono(2, 0, center=(0, 0)) + mono(0, 2, center=(0, 0))
    assert evaluate(p, (3.0, 4.0)) == pytest.approx(25.0, abs=1e-13)


def test_evaluate_at_center_is_constant_coefficient():
    p = CenteredPolynomial(C0, np.arange(1.0, 11.0))
    assert evaluate(p, C0) == 1.0


def test_coeff_length_must_be_triangular():
    with pytest.raises(ValueError):
        CenteredPolynomial(C0, np.ones(4))


# arithmetic -------------------------------------------------------------------

def test_multiply_examples():
    x = mono(1, 0)
    assert multiply(x, x) == mono(2, 0)
    p = CenteredPolynomial(C0, [1.0, 2.0, 3.0])
    assert multiply(p, CenteredPolynomial.constant(C0, 1.0)) == p
    one = CenteredPolynomial.constant(C0, 1.0)
    assert multiply(one + x, one - x) == one - mono(2, 0)
    assert multiply(p, mono(2, 1)).degree == p.degree + 3


def test_add_and_scale():
    p = CenteredPolynomial(C0, [1.0, 2.0, 3.0])
    q = mono(2, 0, 5.0)
    s = add(p, q)
    assert s.degree == 2
    assert s.coeff(2, 0) == 5.0 and s.coeff(0, 1) == 3.0
    assert scale(p, 2j).coeff(1, 0) == 4j


def test_mismatched_centers_raise():
    with pytest.raises(CenterMismatchError):
        mono(1, 0, center=(0, 0)) * mono(1, 0, center=(0, 1))
    with pytest.raises(CenterMismatchError):
        add(mono(1, 0, center=(0, 0)), mono(1, 0, center=(0, 1)))


# calculus ---------------------------------------------------------------------

def test_differentiate_examples():
    assert differentiate(mono(3, 0), "x") == mono(2, 0, 3.0)
    dy = differentiate(mono(3, 0) + mono(1, 0), "y")
    assert np.all(dy.coeffs == 0)
    lap = (mono(2, 0) + mono(0, 2)).laplacian()
    assert lap == CenteredPolynomial.constant(C0, 4.0)


def test_differentiate_lowers_degree():
    p = CenteredPolynomial(C0, np.ones(m(5)))
    assert p.diff(0).degree == 4
    assert CenteredPolynomial.constant(C0, 3.0).diff(1).degree == 0


# truncate ---------------------------------------------------------------------

def test_truncate_examples():
    x = mono(1, 0)
    assert truncate(mono(3, 0) + x, 1) == x
    p = CenteredPolynomial(C0, np.arange(1.0, 11.0))
    assert truncate(p, p.degree) == p
    one = CenteredPolynomial.constant(C0, 1.0)
    q = one + mono(1, 1) + mono(0, 4)
    assert truncate(q, 2) == one + mono(1, 1)


# properties -------------------------------------------------------------------

def _poly(draw, deg, complex_=False):
    n = m(deg)
    re = np.array(draw(st.lists(st.floats(-1, 1), min_size=n, max_size=n)))
    if complex_:
        im = np.array(draw(st.lists(st.floats(-1, 1), min_size=n, max_size=n)))
        return CenteredPolynomial(C0, re + 1j * im)
    return CenteredPolynomial(C0, re)


@st.composite
def poly_pair_and_point(draw):
    dp = draw(st.integers(0, 12))
    dq = draw(st.integers(0, 12))
    cplx = draw(st.booleans())
    p = _poly(draw, dp, cplx)
    q = _poly(draw, dq)
    x = draw(st.floats(-0.5, 0.5))
    y = draw(st.floats(-0.5, 0.5))
    return p, q, (C0[0] + x, C0[1] + y)


@settings(max_examples=60, deadline=None)
@given(poly_pair_and_point())
def test_multiply_evaluates_as_product(data):
    p, q, r = data
    lhs = evaluate(multiply(p, q), r)
    rhs = evaluate(p, r) * evaluate(q, r)
    # scale for cancellation: the product of absolute-value polynomials
    bound = evaluate(CenteredPolynomial(C0, abs(p.coeffs)), (C0[0] + abs(r[0] - C0[0]), C0[1] + abs(r[1] - C0[1])))
    bound *= evaluate(CenteredPolynomial(C0, abs(q.coeffs)), (C0[0] + abs(r[0] - C0[0]), C0[1] + abs(r[1] - C0[1])))
    assert abs(lhs - rhs) <= 1e-12 * max(bound, 1e-300)


@st.composite
def single_poly(draw):
    return _poly(draw, draw(st.integers(0, 12)), draw(st.booleans()))


@st.composite
def integer_poly(draw):
    # integer coefficients keep the derivative products exact in floating point
    n = m(draw(st.integers(0, 12)))
    return CenteredPolynomial(C0, np.array(draw(st.lists(st.integers(-10**6, 10**6), min_size=n, max_size=n)), float))


@settings(max_examples=60, deadline=None)
@given(integer_poly())
def test_mixed_partials_commute(p):
    assert differentiate(differentiate(p, "x"), "y") == differentiate(differentiate(p, "y"), "x")


@settings(max_examples=60, deadline=None)
@given(single_poly(), st.integers(0, 14))
def test_truncate_plus_remainder_reconstructs(p, n):
    t = truncate(p, n)
    rem = p - t
    assert t + rem == p
    assert t.degree == min(n, p.degree)
    # remainder holds no terms of degree <= n
    k = min(m(n), rem.coeffs.size)
    assert np.all(rem.coeffs[:k] == 0)
