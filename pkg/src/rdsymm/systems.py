"""Reaction-diffusion system families and symmetry decisions.

Families:

* triangular  u_t - a*Lap(u) = f1,  v_t - Lap(u) - a*Lap(v) = f2   (a may be 0)
* drift       u_t - p*v_{x_m} = f1,  v_t - Lap(u) = f2             (p != 0)

``symmetry_residual`` applies the second prolongation of a generator to both
equations and eliminates every t-jet through the system (evolution
substitution), leaving polynomials in the spatial jets; a generator is a
symmetry iff both reduce to zero.

The classifying-equation residuals are transcribed from the classification's
closed displays, with two corrections that the cross-validation suite pins
down against direct prolongation: the second equation carries the
``+ C2*f1`` coupling term, and the diffusion terms on the shifts read
``- a*Lap(B2) - Lap(B1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .equality import EQUAL, DIFFERENT, EqDecision, decide_equivalence
from .expr import (EMPTY_RULES, Expr, Jet, Ker, KernelRule, MINUS_ONE, ONE,
                   RuleSet, T, ZERO, add, differentiate, is_zero, jet,
                   jets_in, ker, mul, powe, rat, sym, free_symbols, Sym, Rat)
from .fields import Generator, prolong
from .jets import JetContext, JetOrderError, laplacian, total_derivative

U = jet("u")
V = jet("v")


@dataclass(frozen=True)
class RDSystem:
    m: int
    family: str              # "triangular" | "drift"
    f1: Expr
    f2: Expr
    a: Expr = ZERO           # triangular diffusion constant
    p: Expr = ONE            # drift magnitude (normalized to the last axis)
    rules: RuleSet = field(default_factory=lambda: EMPTY_RULES)
    max_order: int = 4

    def ctx(self) -> JetContext:
        return JetContext(self.m, self.max_order)

    def with_rules(self, rules: RuleSet) -> "RDSystem":
        return RDSystem(self.m, self.family, self.f1, self.f2, self.a,
                        self.p, rules, self.max_order)

    def rhs(self) -> Tuple[Expr, Expr]:
        ctx = self.ctx()
        lap_u = add(*[jet("u", 0, (i, i)) for i in range(1, self.m + 1)])
        lap_v = add(*[jet("v", 0, (i, i)) for i in range(1, self.m + 1)])
        if self.family == "triangular":
            return (add(mul(self.a, lap_u), self.f1),
                    add(lap_u, mul(self.a, lap_v), self.f2))
        if self.family == "drift":
            return (add(mul(self.p, jet("v", 0, (self.m,))), self.f1),
                    add(lap_u, self.f2))
        raise ValueError(f"unknown family {self.family!r}")


def triangular(m: int, a, f1: Expr, f2: Expr, rules: RuleSet = EMPTY_RULES,
               max_order: int = 4) -> RDSystem:
    a = a if isinstance(a, Expr) else rat(a)
    return RDSystem(m, "triangular", f1, f2, a=a, rules=rules,
                    max_order=max_order)


def drift(m: int, p, f1: Expr, f2: Expr, rules: RuleSet = EMPTY_RULES,
          max_order: int = 4) -> RDSystem:
    p = p if isinstance(p, Expr) else rat(p)
    return RDSystem(m, "drift", f1, f2, p=p, rules=rules,
                    max_order=max_order)


# ---------------------------------------------------------------------------
# drift normalization


@dataclass
class DriftNormalization:
    rotation: Tuple[Tuple[Expr, ...], ...]   # orthogonal, maps old x to new x
    p_norm: Expr
    degenerate: bool                          # True when p = 0


def drift_normalize(p_vec: Sequence) -> DriftNormalization:
    """Orthogonal change of the x-variables sending p to (0, ..., 0, |p|)."""
    p = [c if isinstance(c, Expr) else rat(c) for c in p_vec]
    m = len(p)
    norm2 = add(*[mul(c, c) for c in p])
    if is_zero(norm2):
        ident = tuple(tuple(ONE if i == j else ZERO for j in range(m))
                      for i in range(m))
        return DriftNormalization(ident, ZERO, True)
    norm = powe(norm2, rat(1, 2))
    # Householder reflection with w = p - |p| e_m  (identity if w = 0)
    w = list(p)
    w[m - 1] = add(w[m - 1], mul(MINUS_ONE, norm))
    ww = add(*[mul(c, c) for c in w])
    if is_zero(ww):
        rot = tuple(tuple(ONE if i == j else ZERO for j in range(m))
                    for i in range(m))
    else:
        inv = powe(ww, MINUS_ONE)
        rot = tuple(tuple(add((ONE if i == j else ZERO),
                              mul(rat(-2), w[i], w[j], inv))
                          for j in range(m)) for i in range(m))
    return DriftNormalization(rot, norm, False)


# ---------------------------------------------------------------------------
# symmetry residuals


_MAX_REDUCE_PASSES = 8


def evolution_reduce(e: Expr, system: RDSystem) -> Expr:
    """Eliminate every jet carrying t-derivatives using the system."""
    ctx = system.ctx()
    rhs_u, rhs_v = system.rhs()
    rhs = {"u": rhs_u, "v": rhs_v}
    from .expr import substitute
    for _ in range(_MAX_REDUCE_PASSES):
        tjets = [j for j in jets_in(e) if j.nt >= 1]
        if not tjets:
            return e
        binding = {}
        for j in tjets:
            repl = rhs[j.dep]
            for i in j.xs:
                repl = total_derivative(repl, i, ctx, system.rules)
            for _ in range(j.nt - 1):
                repl = total_derivative(repl, "t", ctx, system.rules)
            binding[j] = repl
        e = substitute(e, binding, system.rules)
    raise JetOrderError("evolution substitution did not terminate")


def symmetry_residual(system: RDSystem, x: Generator) -> Tuple[Expr, Expr]:
    """pr X applied to both equations, reduced on the solution manifold."""
    if x.m != system.m:
        raise ValueError("generator dimension != system dimension")
    ctx = system.ctx()
    rhs_u, rhs_v = system.rhs()
    delta1 = add(jet("u", 1), mul(MINUS_ONE, rhs_u))
    delta2 = add(jet("v", 1), mul(MINUS_ONE, rhs_v))
    pr = prolong(x, 2, ctx, system.rules)
    r1 = evolution_reduce(pr.apply_to(delta1), system)
    r2 = evolution_reduce(pr.apply_to(delta2), system)
    return r1, r2


@dataclass
class SymmetryReport:
    residuals: Tuple[Expr, Expr]
    decisions: Tuple[EqDecision, EqDecision]
    verdict: str                  # holds / fails / undecided
    counterexample: Optional[dict] = None

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    @property
    def decision_path(self) -> str:
        return "+".join(d.path for d in self.decisions)


def is_symmetry(system: RDSystem, x: Generator, seed: int = 0) -> SymmetryReport:
    r1, r2 = symmetry_residual(system, x)
    d1 = decide_equivalence(r1, ZERO, seed=seed)
    d2 = decide_equivalence(r2, ZERO, seed=seed + 1)
    if d1.verdict == EQUAL and d2.verdict == EQUAL:
        verdict = "holds"
        ce = None
    elif DIFFERENT in (d1.verdict, d2.verdict):
        verdict = "fails"
        ce = d1.counterexample if d1.verdict == DIFFERENT else d2.counterexample
    else:
        verdict = "undecided"
        ce = None
    return SymmetryReport((r1, r2), (d1, d2), verdict, ce)


# ---------------------------------------------------------------------------
# classifying-equation residuals (triangular, a != 0): main symmetries


def _op_apply(f: Expr, C1: Expr, C2: Expr, B1: Expr, B2: Expr,
              extra_scale: Expr = ZERO, rules: RuleSet = EMPTY_RULES) -> Expr:
    """[B1 du + B2 dv + C1(u du + v dv) + C2 u dv + extra_scale(u du + v dv)] f."""
    fu = differentiate(f, U, rules)
    fv = differentiate(f, V, rules)
    scale = add(C1, extra_scale)
    return add(mul(B1, fu), mul(B2, fv),
               mul(scale, add(mul(U, fu), mul(V, fv))),
               mul(C2, U, fv))


def classifying_residual_main(system: RDSystem, C1: Expr, C2: Expr,
                              B1: Expr, B2: Expr, mu: Expr) -> Tuple[Expr, Expr]:
    """Residuals of the main-symmetry classifying equations (lhs - rhs)."""
    if system.family != "triangular" or is_zero(system.a):
        raise ValueError("main classifying equations require triangular a != 0")
    ctx = system.ctx()
    rules = system.rules
    a = system.a
    f1, f2 = system.f1, system.f2
    C1t = differentiate(C1, T, rules)
    C2t = differentiate(C2, T, rules)
    lhs1 = add(mul(add(mu, C1), f1), mul(C1t, U),
               differentiate(B1, T, rules),
               mul(MINUS_ONE, a, laplacian(B1, ctx, rules)))
    rhs1 = _op_apply(f1, C1, C2, B1, B2, rules=rules)
    lhs2 = add(mul(add(mu, C1), f2), mul(C2, f1), mul(C2t, U), mul(C1t, V),
               differentiate(B2, T, rules),
               mul(MINUS_ONE, a, laplacian(B2, ctx, rules)),
               mul(MINUS_ONE, laplacian(B1, ctx, rules)))
    rhs2 = _op_apply(f2, C1, C2, B1, B2, rules=rules)
    return (add(lhs1, mul(MINUS_ONE, rhs1)), add(lhs2, mul(MINUS_ONE, rhs2)))


@dataclass
class FullSymmetryData:
    """Coefficient data of the general symmetry for a != 0:
    lam (conformal), mu (dilation), sigma (boosts), omega (exp boosts) with
    rate gamma, plus the main-symmetry functions C1(t), C2(t), B1, B2."""
    lam: Expr = ZERO
    mu: Expr = ZERO
    sigma: Tuple[Expr, ...] = ()
    omega: Tuple[Expr, ...] = ()
    gamma: Expr = ZERO
    C1: Expr = ZERO
    C2: Expr = ZERO
    B1: Expr = ZERO
    B2: Expr = ZERO


def classifying_residual_full(system: RDSystem,
                              data: FullSymmetryData) -> Tuple[Expr, Expr]:
    """Residuals of the full classifying equations for a != 0."""
    if system.family != "triangular" or is_zero(system.a):
        raise ValueError("full classifying equations require triangular a != 0")
    ctx = system.ctx()
    rules = system.rules
    a = system.a
    inv_a = powe(a, MINUS_ONE)
    inv_a2 = powe(a, rat(-2))
    f1, f2 = system.f1, system.f2
    m = system.m
    xs = ctx.xs()
    sigma = tuple(data.sigma) or (ZERO,) * m
    omega = tuple(data.omega) or (ZERO,) * m
    x2 = add(*[mul(x, x) for x in xs])
    S_omega = mul(data.gamma, ker("exp", mul(data.gamma, T)),
                  add(*[mul(omega[i], xs[i]) for i in range(m)]))
    S = add(mul(rat(1, 2), data.lam, x2),
            add(*[mul(sigma[i], xs[i]) for i in range(m)]),
            S_omega)
    C1t = differentiate(data.C1, T, rules)
    C2t = differentiate(data.C2, T, rules)
    lam_t = mul(data.lam, rat(m + 4), T)

    def op(f):
        fu = differentiate(f, U, rules)
        fv = differentiate(f, V, rules)
        euler = add(mul(U, fu), mul(V, fv))
        return add(mul(data.B1, fu), mul(data.B2, fv),
                   mul(data.C1, euler), mul(data.C2, U, fv),
                   mul(data.lam, rat(m), T, euler),
                   mul(S, add(mul(inv_a, euler),
                              mul(MINUS_ONE, inv_a2, U, fv))))

    # the omega sector also carries the time derivative of its weight,
    # gamma*S_omega times the boost weight bracket, on the left-hand sides
    lhs1 = add(mul(add(lam_t, data.mu, mul(inv_a, S), data.C1), f1),
               mul(data.gamma, S_omega, inv_a, U),
               mul(C1t, U), differentiate(data.B1, T, rules),
               mul(MINUS_ONE, a, laplacian(data.B1, ctx, rules)))
    lhs2 = add(mul(add(lam_t, data.mu, data.C1), f2),
               mul(data.C2, f1),
               mul(S, add(mul(inv_a, f2), mul(MINUS_ONE, inv_a2, f1))),
               mul(data.gamma, S_omega,
                   add(mul(inv_a, V), mul(MINUS_ONE, inv_a2, U))),
               mul(C1t, V), mul(C2t, U),
               differentiate(data.B2, T, rules),
               mul(MINUS_ONE, a, laplacian(data.B2, ctx, rules)),
               mul(MINUS_ONE, laplacian(data.B1, ctx, rules)))
    return (add(lhs1, mul(MINUS_ONE, op(f1))),
            add(lhs2, mul(MINUS_ONE, op(f2))))


def classifying_residual_drift(system: RDSystem, F: Expr, B1: Expr, B2: Expr,
                               mu: Expr) -> Tuple[Expr, Expr]:
    """Residuals of the drift-family classifying equations (p = 1)."""
    if system.family != "drift":
        raise ValueError("drift classifying equations require the drift family")
    if not (isinstance(system.p, Rat) and system.p.value == 1):
        raise ValueError("normalize the drift to p = 1 first")
    ctx = system.ctx()
    rules = system.rules
    f1, f2 = system.f1, system.f2
    Ft = differentiate(F, T, rules)
    xm = sym(f"x{system.m}")

    def op(f):
        fu = differentiate(f, U, rules)
        fv = differentiate(f, V, rules)
        return add(mul(B1, fu), mul(B2, fv), mul(F, U, fu),
                   mul(add(F, mu), V, fv))

    lhs1 = add(mul(add(mul(rat(3), mu), F), f1), mul(Ft, U),
               differentiate(B1, T, rules),
               mul(MINUS_ONE, differentiate(B2, xm, rules)))
    lhs2 = add(mul(add(mul(rat(4), mu), F), f2), mul(Ft, V),
               differentiate(B2, T, rules),
               mul(MINUS_ONE, laplacian(B1, ctx, rules)))
    return (add(lhs1, mul(MINUS_ONE, op(f1))),
            add(lhs2, mul(MINUS_ONE, op(f2))))


def classifying_residual_a0(system: RDSystem, alpha: Expr, N: Expr, M: Expr,
                            H: Optional[Sequence[Expr]], B1: Expr, B2: Expr,
                            B3: Expr) -> Tuple[Expr, Expr]:
    """Residuals of the classifying equations for the nilpotent case a = 0.

    H is the spatial field (one component per direction, None for zero);
    B3 may depend on u as well as t, x.
    """
    if not (system.family == "triangular" and is_zero(system.a)):
        raise ValueError("a = 0 classifying equations require triangular a = 0")
    ctx = system.ctx()
    rules = system.rules
    m = system.m
    xs = ctx.xs()
    f1, f2 = system.f1, system.f2
    if H is None:
        H = [ZERO] * m
    div = add(*[differentiate(H[i], xs[i], rules) for i in range(m)])
    wu = add(N, mul(rat(m - 2), div))      # weight on u d_u
    wv = add(M, mul(rat(m + 2), div))      # weight on v d_v
    Nt = differentiate(N, T, rules)
    Mt = differentiate(M, T, rules)

    def op(f):
        fu = differentiate(f, U, rules)
        fv = differentiate(f, V, rules)
        return add(mul(B1, fu), mul(B2, fv), mul(B3, U, fv),
                   mul(wu, U, fu), mul(wv, V, fv))

    lhs1 = add(mul(add(alpha, mul(rat(2), N), mul(MINUS_ONE, M),
                       mul(rat(m - 2), div)), f1),
               mul(Nt, U), differentiate(B1, T, rules))
    lhs2 = add(mul(add(alpha, N, mul(rat(m + 2), div)), f2),
               mul(B3, f1), mul(Mt, V),
               mul(differentiate(B3, T, rules), U),
               differentiate(B2, T, rules),
               mul(MINUS_ONE, laplacian(B1, ctx, rules)),
               mul(rat(2 - m), laplacian(div, ctx, rules), U))
    return (add(lhs1, mul(MINUS_ONE, op(f1))),
            add(lhs2, mul(MINUS_ONE, op(f2))))


# ---------------------------------------------------------------------------
# extension tests (a != 0): Galilei / exp-Galilei / conformal


def galilei_residuals(system: RDSystem) -> Tuple[Expr, Expr]:
    """a f1 = (a(u du + v dv) - u dv) f1 ; a f2 - f1 = (...) f2."""
    a = system.a
    rules = system.rules
    out = []
    for k, f in enumerate((system.f1, system.f2)):
        fu = differentiate(f, U, rules)
        fv = differentiate(f, V, rules)
        applied = add(mul(a, add(mul(U, fu), mul(V, fv))),
                      mul(MINUS_ONE, U, fv))
        lhs = mul(a, f) if k == 0 else add(mul(a, system.f2),
                                           mul(MINUS_ONE, system.f1))
        out.append(add(lhs, mul(MINUS_ONE, applied)))
    return tuple(out)


def conformal_residuals(system: RDSystem) -> Tuple[Expr, Expr]:
    """(m+4) f^a = m (u du + v dv) f^a."""
    m = system.m
    rules = system.rules
    out = []
    for f in (system.f1, system.f2):
        fu = differentiate(f, U, rules)
        fv = differentiate(f, V, rules)
        out.append(add(mul(rat(m + 4), f),
                       mul(rat(-m), add(mul(U, fu), mul(V, fv)))))
    return tuple(out)


def exp_galilei_gamma(system: RDSystem) -> Optional[Expr]:
    """The rate gamma for which a(f1 + gamma u) = (a(u du+v dv) - u dv) f1
    and a(f2 + gamma v) - gamma u = (...) f2 both hold, if one exists."""
    a = system.a
    g1, g2 = galilei_residuals(system)
    try:
        from .expr import expand, ExprError
        g1 = expand(g1)
    except ExprError:
        pass
    # first equation demands  a*gamma*u = -g1, so gamma = -g1/(a u)
    cand = mul(MINUS_ONE, g1, powe(mul(a, U), MINUS_ONE))
    bad = {U.key(), V.key(), T.key()}
    if any(s.key() in bad or isinstance(s, Jet) or
           (isinstance(s, Sym) and s.name.startswith("x"))
           for s in free_symbols(cand)):
        return None
    gamma = cand
    # residual of  a(f2 + gamma v) - gamma u - f1 = Op f2,  written via g2
    # (the -f1 coupling is required for consistency with direct prolongation
    # of Ghat; see the worked-example tests)
    r2 = add(g2, mul(a, gamma, V), mul(MINUS_ONE, gamma, U))
    if decide_equivalence(r2, ZERO):
        return gamma
    return None


@dataclass
class ExtensionReport:
    galilei: bool
    exp_galilei: bool
    conformal: bool
    gamma: Optional[Expr] = None

    def labels(self):
        out = set()
        if self.galilei:
            out.add("Galilei")
        if self.exp_galilei:
            out.add("ExpGalilei")
        if self.conformal:
            out.add("Conformal")
        return out


def extension_check(system: RDSystem) -> ExtensionReport:
    """Which extended operators (G, Ghat, K) the nonlinearities admit."""
    if system.family != "triangular" or is_zero(system.a):
        raise ValueError("extension tests apply to triangular a != 0")
    g1, g2 = galilei_residuals(system)
    gal = bool(decide_equivalence(g1, ZERO)) and bool(decide_equivalence(g2, ZERO))
    conf = False
    if gal:
        c1, c2 = conformal_residuals(system)
        conf = bool(decide_equivalence(c1, ZERO)) and bool(decide_equivalence(c2, ZERO))
    gamma = exp_galilei_gamma(system)
    expg = gamma is not None
    return ExtensionReport(gal, expg, conf, gamma if expg else None)


# ---------------------------------------------------------------------------
# kernel-rule builders


def heat_kernel_rule(name: str, m: int, a: Expr, nu: Expr) -> KernelRule:
    """psi_t = a*Lap(psi) + nu*psi for psi(t, x1..xm)."""
    params = [T] + [sym(f"x{i}") for i in range(1, m + 1)]
    lap = add(*[Ker(name, tuple(params),
                    tuple(2 if j == i else 0 for j in range(m + 1)))
                for i in range(1, m + 1)])
    template = add(mul(a, lap), mul(nu, Ker(name, tuple(params),
                                            (0,) * (m + 1))))
    return KernelRule(name, 0, 1, params, template)


def laplace_kernel_rule(name: str, m: int, mu: Expr) -> KernelRule:
    """Lap(Psi) = mu*Psi for Psi(x1..xm): rewrites the x_m-second-derivative."""
    params = [sym(f"x{i}") for i in range(1, m + 1)]
    rest = add(*[Ker(name, tuple(params),
                     tuple(2 if j == i else 0 for j in range(m)))
                 for i in range(m - 1)])
    template = add(mul(mu, Ker(name, tuple(params), (0,) * m)),
                   mul(MINUS_ONE, rest))
    return KernelRule(name, m - 1, 2, params, template)


def w_kernel_rules(name: str, m: int, f1: Expr, f2: Expr,
                   rules: RuleSet = EMPTY_RULES) -> KernelRule:
    """W_t = f2_v - W_u * f1 for W(t, x1..xm, u); needs f1, f2_v free of v."""
    params = [T] + [sym(f"x{i}") for i in range(1, m + 1)] + [U]
    f2v = differentiate(f2, V, rules)
    for e in (f1, f2v):
        if V in free_symbols(e):
            raise ValueError("W kernel requires f1 and f2_v independent of v")
    wu = Ker(name, tuple(params),
             tuple(0 if i < m + 1 else 1 for i in range(m + 2)))
    template = add(f2v, mul(MINUS_ONE, wu, f1))
    return KernelRule(name, 0, 1, params, template)


def cauchy_riemann_rules(h1: str, h2: str) -> List[KernelRule]:
    """CR pair on (x1, x2): H2 derivatives rewrite through H1; H1 harmonic."""
    x1, x2 = sym("x1"), sym("x2")
    params = [x1, x2]
    h1_x1 = Ker(h1, (x1, x2), (1, 0))
    h1_x2 = Ker(h1, (x1, x2), (0, 1))
    h1_x1x1 = Ker(h1, (x1, x2), (2, 0))
    return [
        KernelRule(h2, 1, 1, params, h1_x1),                       # H2_x2 = H1_x1
        KernelRule(h2, 0, 1, params, mul(MINUS_ONE, h1_x2)),       # H2_x1 = -H1_x2
        KernelRule(h1, 1, 2, params, mul(MINUS_ONE, h1_x1x1)),     # H1 harmonic
    ]
