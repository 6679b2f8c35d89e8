import random
from fractions import Fraction

import pytest

from rdsymm.expr import exp_, jet, mul, rat, sin_, sym
from rdsymm.jets import JetContext, JetOrderError, laplacian, total_derivative
from rdsymm.numeric import eval_at, to_float

u, v, t = jet("u"), jet("v"), sym("t")
x1, x2 = sym("x1"), sym("x2")


def test_spec_examples():
    ctx = JetContext(2)
    assert total_derivative(u, 1, ctx) == jet("u", 0, (1,))
    assert total_derivative(x1 * u, "t", ctx) == x1 * jet("u", 1)
    got = total_derivative(u * jet("v", 0, (1,)), 1, ctx)
    expect = jet("u", 0, (1,)) * jet("v", 0, (1,)) + u * jet("v", 0, (1, 1))
    assert got == expect


def test_symmetric_indices():
    ctx = JetContext(2)
    a = total_derivative(total_derivative(u, 1, ctx), 2, ctx)
    b = total_derivative(total_derivative(u, 2, ctx), 1, ctx)
    assert a == b == jet("u", 0, (1, 2))


def test_order_cap():
    ctx = JetContext(1, max_order=2)
    e = jet("u", 0, (1, 1))
    with pytest.raises(JetOrderError):
        total_derivative(e, 1, ctx)


def test_finite_difference_oracle():
    """D_x of an expression agrees with the x-derivative of the same
    expression evaluated along a concrete smooth field u = sin(x+2t),
    v = x^2 t."""
    ctx = JetContext(1)
    expr = u * jet("v", 0, (1,)) + sin_(u)
    de = total_derivative(expr, 1, ctx)

    def field_point(tv: Fraction, xv: Fraction):
        # jets of u = sin(x + 2t), v = x^2 * t
        import mpmath
        s = float(xv + 2 * tv)
        vals = {
            t: tv, x1: xv,
            u: None, v: None,
        }
        point = {t: tv, x1: xv}
        point[jet("u")] = mpmath.sin(s)
        point[jet("u", 0, (1,))] = mpmath.cos(s)
        point[jet("u", 0, (1, 1))] = -mpmath.sin(s)
        point[jet("v")] = float(xv * xv * tv)
        point[jet("v", 0, (1,))] = float(2 * xv * tv)
        point[jet("v", 0, (1, 1))] = float(2 * tv)
        return point

    h = 1e-6
    for xv in (Fraction(1, 2), Fraction(2), Fraction(-1)):
        tv = Fraction(1, 3)
        exact = to_float(eval_at(de, field_point(tv, xv)))
        up = to_float(eval_at(expr, field_point(tv, xv + Fraction(1, 10**6))))
        dn = to_float(eval_at(expr, field_point(tv, xv - Fraction(1, 10**6))))
        fd = (up - dn) / (2 * h)
        assert abs(fd - exact) / max(1.0, abs(exact)) < 1e-5


def test_laplacian():
    ctx = JetContext(2)
    assert laplacian(u, ctx) == jet("u", 0, (1, 1)) + jet("u", 0, (2, 2))
