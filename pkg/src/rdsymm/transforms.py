"""Equivalence transformations of the system class.

``LinearEquiv`` is the general linear family (u, v scaled together with a
shear and shifts, time and space rescaled); the numbered additional
equivalence transformations (AETs) are time-dependent point maps; the a=0
family additionally admits v-shifts by functions of u (and, under an
admissibility PDE system, of (u, t, x)).

``apply_equiv`` re-derives the transformed nonlinearities mechanically: it
pushes the map through the equations with total derivatives, eliminates
t-jets through the system, and re-expresses the result in the new dependent
variables.  A transform is applicable precisely when that calculation closes
up point-form again (no leftover jets, no explicit t or x)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

from .equality import decide_equivalence
from .expr import (Expr, MINUS_ONE, ONE, T, ZERO, add,
                   differentiate, exp_, is_zero, jet, jets_in, mul, powe, rat,
                   substitute, sym, free_symbols, Sym)
from .fields import Generator
from .jets import laplacian, total_derivative
from .systems import RDSystem, evolution_reduce, triangular, drift

U = jet("u")
V = jet("v")


class InapplicableTransform(Exception):
    pass


@dataclass(frozen=True)
class PointMap:
    """u -> cu*u + ru,  v -> cv*v + w   with cu, cv, ru functions of (t, x)
    and w a function of (u, t, x); cu, cv nonzero."""
    cu: Expr = ONE
    ru: Expr = ZERO
    cv: Expr = ONE
    w: Expr = ZERO

    def u_new(self) -> Expr:
        return add(mul(self.cu, U), self.ru)

    def v_new(self) -> Expr:
        return add(mul(self.cv, V), self.w)

    def inverse_binding(self, u_sym: Expr, v_sym: Expr) -> Dict:
        """Old (u, v) in terms of new symbols."""
        u_old = mul(add(u_sym, mul(MINUS_ONE, self.ru)), powe(self.cu, MINUS_ONE))
        w_old = substitute(self.w, {U: u_old})
        v_old = mul(add(v_sym, mul(MINUS_ONE, w_old)), powe(self.cv, MINUS_ONE))
        return {U: u_old, V: v_old}


@dataclass(frozen=True)
class LinearEquiv:
    """(x.2): u -> K1 u + b1, v -> K1 v + K2 u + b2, t -> lam^-2 t,
    x -> lam^-1 x; K1, lam nonzero."""
    K1: Expr = ONE
    K2: Expr = ZERO
    b1: Expr = ZERO
    b2: Expr = ZERO
    lam: Expr = ONE

    def point_map(self) -> PointMap:
        return PointMap(cu=self.K1, ru=self.b1, cv=self.K1,
                        w=add(mul(self.K2, U), self.b2))

    def inverse(self) -> "LinearEquiv":
        k1i = powe(self.K1, MINUS_ONE)
        k2i = mul(MINUS_ONE, self.K2, powe(self.K1, rat(-2)))
        b1i = mul(MINUS_ONE, self.b1, k1i)
        b2i = add(mul(MINUS_ONE, self.b2, k1i),
                  mul(self.K2, self.b1, powe(self.K1, rat(-2))))
        return LinearEquiv(K1=k1i, K2=k2i, b1=b1i, b2=b2i,
                           lam=powe(self.lam, MINUS_ONE))


@dataclass(frozen=True)
class VShift:
    """v -> v + Phi(u); valid for a = 0 only."""
    phi: Expr  # expression in u

    def point_map(self) -> PointMap:
        return PointMap(w=self.phi)


@dataclass(frozen=True)
class VShiftFull:
    """v -> v + Phihat(u, t, x); a = 0 only, subject to admissibility."""
    phihat: Expr

    def point_map(self) -> PointMap:
        return PointMap(w=self.phihat)


def aet(index: int, **params) -> PointMap:
    """The numbered additional equivalence transformations (1-10); item 11
    is VShiftFull and is built separately."""
    p = {k: (v if isinstance(v, Expr) else rat(v)) for k, v in params.items()}
    t = T
    x2 = None

    def need(*names):
        missing = [n for n in names if n not in p]
        if missing:
            raise ValueError(f"AET {index} needs parameters {missing}")
        return [p[n] for n in names]

    if index == 1:
        (om,) = need("omega")
        e = exp_(mul(om, t))
        return PointMap(cu=e, cv=e)
    if index == 2:
        om, mu = need("omega", "mu")
        m = int(p.get("m", rat(1)).value) if "m" in p else None
        if m is None:
            raise ValueError("AET 2 needs m for the x^2 shift")
        xs = [sym(f"x{i}") for i in range(1, m + 1)]
        x2 = add(*[mul(x, x) for x in xs])
        return PointMap(ru=add(mul(om, t), mul(mu, x2)))
    if index == 3:
        rho, mu = need("rho", "mu")
        m = int(p.get("m", rat(1)).value) if "m" in p else None
        if m is None:
            raise ValueError("AET 3 needs m for the x^2 shift")
        xs = [sym(f"x{i}") for i in range(1, m + 1)]
        x2 = add(*[mul(x, x) for x in xs])
        return PointMap(w=add(mul(rho, t), mul(mu, x2)))
    if index == 4:
        (rho,) = need("rho")
        return PointMap(ru=mul(rho, t), cv=exp_(mul(rho, t)))
    if index == 5:
        (rho,) = need("rho")
        return PointMap(w=mul(rho, t, U))
    if index == 6:
        om, kap, rho = need("omega", "kappa", "rho")
        return PointMap(cu=exp_(mul(om, t)),
                        w=add(mul(kap, t, U), mul(rat(1, 2), rho, t, t)))
    if index == 7:
        rho, lam = need("rho", "lam")
        return PointMap(w=add(mul(MINUS_ONE, rho, t, U),
                              mul(rat(1, 2), rho, lam, t, t)))
    if index == 8:
        rho, eps = need("rho", "eps")
        e = exp_(mul(rho, t))
        return PointMap(cu=e, cv=e, w=mul(rat(1, 2), eps, t, t, U, e))
    if index == 9:
        (rho,) = need("rho")
        return PointMap(ru=mul(rho, t),
                        w=add(mul(rho, t, U), mul(rat(1, 2), rho, rho, t, t)))
    if index == 10:
        (om,) = need("omega")
        e = exp_(mul(om, t))
        return PointMap(cu=e, cv=e, w=mul(MINUS_ONE, om, t, U, e))
    raise ValueError(f"unknown AET index {index}")


# ---------------------------------------------------------------------------


def _transformed_f(system: RDSystem, pm: PointMap) -> Tuple[Expr, Expr]:
    """Push the point map through both equations; returns the new f's in the
    new variables or raises InapplicableTransform."""
    ctx = system.ctx()
    un = pm.u_new()
    vn = pm.v_new()
    if system.family == "triangular":
        raw1 = add(total_derivative(un, "t", ctx, system.rules),
                   mul(MINUS_ONE, system.a, laplacian(un, ctx, system.rules)))
        raw2 = add(total_derivative(vn, "t", ctx, system.rules),
                   mul(MINUS_ONE, laplacian(un, ctx, system.rules)),
                   mul(MINUS_ONE, system.a, laplacian(vn, ctx, system.rules)))
    else:
        xm = system.m
        raw1 = add(total_derivative(un, "t", ctx, system.rules),
                   mul(MINUS_ONE, system.p,
                       total_derivative(vn, xm, ctx, system.rules)))
        raw2 = add(total_derivative(vn, "t", ctx, system.rules),
                   mul(MINUS_ONE, laplacian(un, ctx, system.rules)))
    from .expr import expand
    raw1 = expand(evolution_reduce(raw1, system))
    raw2 = expand(evolution_reduce(raw2, system))
    # express in the new dependent variables
    u_tmp, v_tmp = sym("_unew"), sym("_vnew")
    inv = pm.inverse_binding(u_tmp, v_tmp)
    out = []
    for raw in (raw1, raw2):
        e = substitute(raw, inv, system.rules)
        e = expand(substitute(e, {u_tmp: U, v_tmp: V}, system.rules))
        leftover_jets = [j for j in jets_in(e) if j.order > 0]
        if leftover_jets:
            raise InapplicableTransform(
                f"transform leaves derivative terms {sorted(map(str, leftover_jets))}")
        out.append(e)
    return out[0], out[1]


def _point_form_check(f: Expr, label: str):
    bad = [s for s in free_symbols(f)
           if (isinstance(s, Sym) and (s.name == "t" or s.name.startswith("x")
                                       and s.name[1:].isdigit()))]
    if bad:
        raise InapplicableTransform(
            f"{label} keeps explicit {sorted(set(map(str, bad)))};"
            " not a point nonlinearity")


def apply_equiv(system: RDSystem, transform) -> RDSystem:
    """Transformed system of the same family; raises InapplicableTransform
    when the preconditions or the point-form requirement are violated."""
    if isinstance(transform, LinearEquiv):
        if is_zero(transform.K1) or is_zero(transform.lam):
            raise InapplicableTransform("linear transform needs K1, lam != 0")
        f1n, f2n = _transformed_f(system, transform.point_map())
        lam2 = mul(transform.lam, transform.lam)
        f1n = mul(lam2, f1n)
        f2n = mul(lam2, f2n)
        _point_form_check(f1n, "f1")
        _point_form_check(f2n, "f2")
        if system.family == "triangular":
            return triangular(system.m, system.a, f1n, f2n, system.rules,
                              system.max_order)
        return drift(system.m, system.p, f1n, f2n, system.rules,
                     system.max_order)
    if isinstance(transform, (VShift, VShiftFull)):
        if not (system.family == "triangular" and is_zero(system.a)):
            raise InapplicableTransform("v-shifts require the a = 0 family")
        if isinstance(transform, VShiftFull):
            ok, residuals = check_eqv3_admissible(system, transform.phihat)
            if not ok:
                raise InapplicableTransform(
                    "shift violates the admissibility system; residuals: "
                    + "; ".join(str(r) for r in residuals))
        pm = transform.point_map()
    elif isinstance(transform, PointMap):
        pm = transform
    else:
        raise InapplicableTransform(f"unknown transform {transform!r}")
    f1n, f2n = _transformed_f(system, pm)
    _point_form_check(f1n, "f1")
    _point_form_check(f2n, "f2")
    if system.family == "triangular":
        return triangular(system.m, system.a, f1n, f2n, system.rules,
                          system.max_order)
    return drift(system.m, system.p, f1n, f2n, system.rules, system.max_order)


def preserves_class(system: RDSystem, transform) -> bool:
    try:
        apply_equiv(system, transform)
        return True
    except InapplicableTransform:
        return False


def check_eqv3_admissible(system: RDSystem, phihat: Expr):
    """Admissibility of v -> v + Phihat(u, t, x) for a = 0:

        f2_v Phihat_t  - Phihat_tt   - f1 Phihat_tu   = 0
        f2_v Phihat_xn - Phihat_txn  - f1 Phihat_uxn  = 0   (each n)

    plus the structural preconditions: f1 free of v and f2 at most linear
    in v.  Returns (admissible, residuals); precondition violations raise.
    """
    if not (system.family == "triangular" and is_zero(system.a)):
        raise InapplicableTransform("admissibility applies to a = 0 only")
    rules = system.rules
    if V in free_symbols(system.f1):
        raise InapplicableTransform("f1 must not depend on v")
    f2v = differentiate(system.f2, V, rules)
    if V in free_symbols(f2v):
        raise InapplicableTransform("f2 must be at most linear in v")
    pt = differentiate(phihat, T, rules)
    ptt = differentiate(pt, T, rules)
    ptu = differentiate(pt, U, rules)
    residuals = [add(mul(f2v, pt), mul(MINUS_ONE, ptt),
                     mul(MINUS_ONE, system.f1, ptu))]
    for i in range(1, system.m + 1):
        xi = sym(f"x{i}")
        px = differentiate(phihat, xi, rules)
        residuals.append(add(mul(f2v, px),
                             mul(MINUS_ONE, differentiate(pt, xi, rules)),
                             mul(MINUS_ONE, system.f1,
                                 differentiate(px, U, rules))))
    ok = all(bool(decide_equivalence(r, ZERO)) for r in residuals)
    return ok, residuals


def pushforward(x: Generator, tr: LinearEquiv) -> Generator:
    """The generator in the transformed variables (exact change of
    variables on coefficients)."""
    lam2 = mul(tr.lam, tr.lam)
    inv_lam2 = powe(lam2, MINUS_ONE)
    inv_lam = powe(tr.lam, MINUS_ONE)
    m = x.m
    # old coordinates in terms of new ones
    inv = tr.inverse()
    old_u = add(mul(inv.K1, U), inv.b1)
    old_w = add(mul(inv.K2, U), inv.b2)
    old_v = add(mul(inv.K1, V), old_w)
    binding = {T: mul(lam2, T), U: old_u, V: old_v}
    for i in range(1, m + 1):
        binding[sym(f"x{i}")] = mul(tr.lam, sym(f"x{i}"))

    def push(e):
        return substitute(e, binding)

    eta = mul(inv_lam2, push(x.eta))
    xi = tuple(mul(inv_lam, push(c)) for c in x.xi)
    pi1 = mul(tr.K1, push(x.pi1))
    pi2 = add(mul(tr.K1, push(x.pi2)), mul(tr.K2, push(x.pi1)))
    return Generator(eta, xi, pi1, pi2)
