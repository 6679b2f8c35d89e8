"""Vector fields on jet space.

A ``Generator`` is the first-order operator

    X = eta*d_t + xi_i*d_{x_i} - pi1*d_u - pi2*d_v

(note the minus signs on the pi's).  ``prolong`` extends it to jet
coordinates through the characteristic recursion

    phi^a_{J,i} = D_i phi^a_J - (D_i eta) u^a_{J,t} - sum_k (D_i xi^k) u^a_{J,k}

with phi^a at order zero equal to -pi^a.

The named operators below are the dilation/Galilei/conformal family for the
triangular systems.  The boost and conformal weights carry the coefficients
that actually verify by direct prolongation (weight sign opposite to the
shift part, and 1/a^2 on the u->v mixing); realized structure constants and
the worked-example suite pin them down, see the package tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

from .expr import (EMPTY_RULES, Expr, Jet, MINUS_ONE, ONE, RuleSet, T, ZERO,
                   add, differentiate, exp_, is_zero, jet, jets_in, mul, powe,
                   rat, sym)
from .jets import JetContext, total_derivative, x_squared


@dataclass(frozen=True)
class Generator:
    eta: Expr
    xi: Tuple[Expr, ...]
    pi1: Expr
    pi2: Expr

    @property
    def m(self) -> int:
        return len(self.xi)

    def phi(self, dep: str) -> Expr:
        """Coefficient of d_{u^a} for the order-zero jet."""
        return mul(MINUS_ONE, self.pi1 if dep == "u" else self.pi2)

    def apply_to(self, e: Expr, rules: RuleSet = EMPTY_RULES) -> Expr:
        """Zeroth-order action on a function of (t, x, u, v)."""
        parts = [mul(self.eta, differentiate(e, T, rules))]
        for i, c in enumerate(self.xi, start=1):
            parts.append(mul(c, differentiate(e, sym(f"x{i}"), rules)))
        parts.append(mul(MINUS_ONE, self.pi1, differentiate(e, jet("u"), rules)))
        parts.append(mul(MINUS_ONE, self.pi2, differentiate(e, jet("v"), rules)))
        return add(*parts)

    def is_zero(self) -> bool:
        return (is_zero(self.eta) and all(is_zero(c) for c in self.xi)
                and is_zero(self.pi1) and is_zero(self.pi2))

    def __add__(self, other: "Generator") -> "Generator":
        if self.m != other.m:
            raise ValueError("generators over different dimensions")
        return Generator(add(self.eta, other.eta),
                         tuple(add(a, b) for a, b in zip(self.xi, other.xi)),
                         add(self.pi1, other.pi1), add(self.pi2, other.pi2))

    def __sub__(self, other: "Generator") -> "Generator":
        return self + other.scale(rat(-1))

    def scale(self, c) -> "Generator":
        c = c if isinstance(c, Expr) else rat(c)
        return Generator(mul(c, self.eta), tuple(mul(c, x) for x in self.xi),
                         mul(c, self.pi1), mul(c, self.pi2))

    def __neg__(self) -> "Generator":
        return self.scale(rat(-1))


def zero_generator(m: int) -> Generator:
    return Generator(ZERO, (ZERO,) * m, ZERO, ZERO)


def generator(m: int, eta=ZERO, xi=None, phi_u=ZERO, phi_v=ZERO) -> Generator:
    """Build from d_u/d_v coefficients (phis), handling the sign convention."""
    xi = tuple(xi) if xi is not None else (ZERO,) * m
    if len(xi) != m:
        raise ValueError("xi length != m")
    return Generator(eta, xi, mul(MINUS_ONE, phi_u), mul(MINUS_ONE, phi_v))


class ProlongedGenerator:
    """Generator plus phi-coefficients for every jet up to the context cap."""

    def __init__(self, base: Generator, ctx: JetContext,
                 rules: RuleSet = EMPTY_RULES):
        if base.m != ctx.m:
            raise ValueError("generator dimension != context dimension")
        self.base = base
        self.ctx = ctx
        self.rules = rules
        self._phi: Dict[Tuple[str, int, Tuple[int, ...]], Expr] = {}
        self._dxi: Dict[Tuple[object, int], Expr] = {}

    def _dcoef(self, which, direction) -> Expr:
        key = (which, direction)
        if key not in self._dxi:
            if which == "eta":
                e = self.base.eta
            else:
                e = self.base.xi[which - 1]
            self._dxi[key] = total_derivative(e, direction, self.ctx, self.rules)
        return self._dxi[key]

    def phi(self, j: Jet) -> Expr:
        key = (j.dep, j.nt, j.xs)
        hit = self._phi.get(key)
        if hit is not None:
            return hit
        if j.order == 0:
            out = self.base.phi(j.dep)
        else:
            # peel the last derivative direction (t's first, then xs)
            if j.xs:
                direction = j.xs[-1]
                parent = Jet(j.dep, j.nt, j.xs[:-1])
            else:
                direction = "t"
                parent = Jet(j.dep, j.nt - 1, ())
            prev = self.phi(parent)
            out = total_derivative(prev, direction, self.ctx, self.rules)
            out = add(out, mul(MINUS_ONE, self._dcoef("eta", direction),
                               parent.bump("t")))
            for k in range(1, self.ctx.m + 1):
                out = add(out, mul(MINUS_ONE, self._dcoef(k, direction),
                                   parent.bump(k)))
        self._phi[key] = out
        return out

    def apply_to(self, e: Expr) -> Expr:
        """pr X (e) for e an expression in (t, x, jets)."""
        parts = [mul(self.base.eta, differentiate(e, T, self.rules))]
        for i, c in enumerate(self.base.xi, start=1):
            parts.append(mul(c, differentiate(e, sym(f"x{i}"), self.rules)))
        for j in sorted(jets_in(e), key=Expr.key):
            d = differentiate(e, j, self.rules)
            if not is_zero(d):
                parts.append(mul(self.phi(j), d))
        return add(*parts)


def prolong(x: Generator, order: int, ctx: JetContext,
            rules: RuleSet = EMPTY_RULES) -> ProlongedGenerator:
    if order > ctx.max_order:
        raise ValueError("requested order exceeds context cap")
    return ProlongedGenerator(x, ctx, rules)


def commutator(x: Generator, y: Generator,
               rules: RuleSet = EMPTY_RULES) -> Generator:
    """[X, Y]; coefficients X(Y-coeff) - Y(X-coeff)."""
    if x.m != y.m:
        raise ValueError("generators over different dimensions")
    eta = add(x.apply_to(y.eta, rules), mul(MINUS_ONE, y.apply_to(x.eta, rules)))
    xi = tuple(add(x.apply_to(cy, rules), mul(MINUS_ONE, y.apply_to(cx, rules)))
               for cx, cy in zip(x.xi, y.xi))
    pi1 = add(x.apply_to(y.pi1, rules), mul(MINUS_ONE, y.apply_to(x.pi1, rules)))
    pi2 = add(x.apply_to(y.pi2, rules), mul(MINUS_ONE, y.apply_to(x.pi2, rules)))
    return Generator(eta, xi, pi1, pi2)


# ---------------------------------------------------------------------------
# named operators


class CauchyRiemannError(ValueError):
    pass


def _weight_bracket(a: Expr):
    """(phi_u, phi_v) of (1/a)(u du + v dv) - (1/a^2) u dv."""
    u, v = jet("u"), jet("v")
    inv_a = powe(a, MINUS_ONE)
    inv_a2 = powe(a, rat(-2))
    return mul(inv_a, u), add(mul(inv_a, v), mul(MINUS_ONE, inv_a2, u))


def named_operator(name: str, m: int, *, a: Optional[Expr] = None,
                   gamma: Optional[Expr] = None, lam: Optional[Expr] = None,
                   p: Optional[Expr] = None, index: int = 1,
                   index2: int = 2, H: Optional[Sequence[Expr]] = None,
                   lam_vec: Optional[Sequence] = None) -> Generator:
    """The operators the classification states its results with.

    P0, P (shift along x_index), J (rotation in the index/index2 plane),
    D, Dtilde, K, Ktilde, G, Ghat (boost direction = index), Hfield.
    """
    u, v = jet("u"), jet("v")
    xs = [sym(f"x{i}") for i in range(1, m + 1)]
    if name == "P0":
        return generator(m, eta=ONE)
    if name == "P":
        xi = [ZERO] * m
        xi[index - 1] = ONE
        return generator(m, xi=xi)
    if name == "J":
        if m < 2:
            raise ValueError("rotations need m >= 2")
        xi = [ZERO] * m
        xi[index2 - 1] = xs[index - 1]
        xi[index - 1] = mul(MINUS_ONE, xs[index2 - 1])
        return generator(m, xi=xi)
    if name == "D":
        return generator(m, eta=T, xi=[mul(rat(1, 2), x) for x in xs])
    if name == "Dtilde":
        return generator(m, eta=mul(rat(3), T), xi=[mul(rat(2), x) for x in xs],
                         phi_v=mul(MINUS_ONE, v))
    if name == "K":
        if a is None or is_zero(a):
            raise ValueError("K requires a != 0")
        wu, wv = _weight_bracket(a)
        x2 = x_squared(JetContext(m))
        half_x2 = mul(rat(-1, 2), x2)
        tm = mul(rat(-m), T)
        return generator(
            m, eta=mul(rat(2), T, T), xi=[mul(rat(2), T, x) for x in xs],
            phi_u=add(mul(half_x2, wu), mul(tm, u)),
            phi_v=add(mul(half_x2, wv), mul(tm, v)))
    if name == "Ktilde":
        if lam is None:
            raise ValueError("Ktilde requires lam")
        kgen = named_operator("K", m, a=a)
        pval = p if p is not None else ZERO
        c = powe(add(lam, MINUS_ONE), MINUS_ONE)
        extra = generator(
            m,
            phi_u=mul(c, T, pval, u),
            phi_v=add(mul(c, T, add(rat(2), mul(MINUS_ONE, lam)), v), mul(c, u)))
        return kgen + extra
    if name == "G":
        if a is None or is_zero(a):
            raise ValueError("G requires a != 0")
        wu, wv = _weight_bracket(a)
        xi = [ZERO] * m
        xi[index - 1] = T
        half_x = mul(rat(-1, 2), xs[index - 1])
        return generator(m, xi=xi, phi_u=mul(half_x, wu), phi_v=mul(half_x, wv))
    if name == "Ghat":
        if a is None or is_zero(a):
            raise ValueError("Ghat requires a != 0")
        if gamma is None:
            raise ValueError("Ghat requires gamma")
        wu, wv = _weight_bracket(a)
        pref = exp_(mul(gamma, T))
        xi = [ZERO] * m
        xi[index - 1] = pref
        w = mul(rat(-1, 2), gamma, xs[index - 1], pref)
        return generator(m, xi=xi, phi_u=mul(w, wu), phi_v=mul(w, wv))
    if name == "Hfield":
        return h_field(m, H=H, lam_vec=lam_vec)
    raise ValueError(f"unknown named operator {name!r}")


def h_field(m: int, H: Optional[Sequence[Expr]] = None,
            lam_vec: Optional[Sequence] = None,
            rules: RuleSet = EMPTY_RULES) -> Generator:
    """The a=0 conformal-type operator

        X = 2m H^a d_{x_a} - (m-2) H^a_{x_a} u d_u - (m+2) H^a_{x_a} v d_v.

    For m > 2, H^a = 2 lam_b x_b x_a - x^2 lam_a from a direction vector;
    for m = 2 the supplied pair must satisfy the Cauchy-Riemann conditions;
    for m = 1 any H(x1) is accepted.
    """
    u, v = jet("u"), jet("v")
    xs = [sym(f"x{i}") for i in range(1, m + 1)]
    if m > 2:
        if H is None:
            if lam_vec is None:
                raise ValueError("Hfield with m>2 needs lam_vec")
            lams = [c if isinstance(c, Expr) else rat(c) for c in lam_vec]
            x2 = x_squared(JetContext(m))
            H = [add(mul(rat(2), add(*[mul(lams[b], xs[b]) for b in range(m)]),
                         xs[axis]),
                     mul(MINUS_ONE, x2, lams[axis]))
                 for axis in range(m)]
    else:
        if H is None:
            raise ValueError("Hfield with m<=2 needs explicit H")
    H = list(H)
    if len(H) != m:
        raise ValueError("H must have one component per spatial direction")
    if m == 2:
        from .equality import decide_equivalence
        cr1 = add(differentiate(H[0], xs[0], rules),
                  mul(MINUS_ONE, differentiate(H[1], xs[1], rules)))
        cr2 = add(differentiate(H[0], xs[1], rules),
                  differentiate(H[1], xs[0], rules))
        if not (decide_equivalence(cr1, ZERO) and decide_equivalence(cr2, ZERO)):
            raise CauchyRiemannError(
                "H pair violates the Cauchy-Riemann conditions")
    div = add(*[differentiate(H[i], xs[i], rules) for i in range(m)])
    return generator(
        m, xi=[mul(rat(2 * m), h) for h in H],
        phi_u=mul(rat(-(m - 2)), div, u),
        phi_v=mul(rat(-(m + 2)), div, v))
