"""3x3 matrix realizations of the linear symmetry parts.

The matrices have the fixed pattern

        ( 0    0    0  )
    g = ( nu1  mu1  0  )
        ( nu2  mu2  mu1),

are conjugated by the equivalence-group matrices

        ( 1    0    0 )
    U = ( b1   K1   0 ),     K1 != 0,
        ( b2   K2   K1)

and classified up to conjugation plus nonzero rescaling of g.  Under
conjugation mu1 and mu2 are invariant and the first column transforms as

    nu1' = K1*nu1 - mu1*b1
    nu2' = K2*nu1 + K1*nu2 - mu2*b1 - mu1*b2,

which drives the canonicalization directly.  When both mu's are nonzero
only the ratio mu2/mu1 survives scaling, so that orbit class keeps it as a
continuous invariant on the canonical representative.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .equality import EQUAL, decide_equivalence
from .expr import (Expr, MINUS_ONE, ONE, ZERO, add, exp_, is_zero, jet, ker,
                   mul, powe, rat, sym)
from .fields import Generator, generator, named_operator

Matrix = Tuple[Tuple[Expr, ...], ...]


def _e(x) -> Expr:
    return x if isinstance(x, Expr) else rat(x)


@dataclass(frozen=True)
class NMatrix:
    nu1: Expr
    nu2: Expr
    mu1: Expr
    mu2: Expr

    def matrix(self) -> Matrix:
        return ((ZERO, ZERO, ZERO),
                (self.nu1, self.mu1, ZERO),
                (self.nu2, self.mu2, self.mu1))

    def scale(self, c) -> "NMatrix":
        c = _e(c)
        return NMatrix(mul(c, self.nu1), mul(c, self.nu2),
                       mul(c, self.mu1), mul(c, self.mu2))

    def is_zero(self) -> bool:
        return all(is_zero(e) for e in (self.nu1, self.nu2, self.mu1, self.mu2))


def nmatrix(nu1=0, nu2=0, mu1=0, mu2=0) -> NMatrix:
    return NMatrix(_e(nu1), _e(nu2), _e(mu1), _e(mu2))


@dataclass(frozen=True)
class UMatrix:
    b1: Expr
    b2: Expr
    K1: Expr
    K2: Expr

    def matrix(self) -> Matrix:
        return ((ONE, ZERO, ZERO),
                (self.b1, self.K1, ZERO),
                (self.b2, self.K2, self.K1))

    def inverse(self) -> Matrix:
        k1inv = powe(self.K1, MINUS_ONE)
        k1inv2 = powe(self.K1, rat(-2))
        return ((ONE, ZERO, ZERO),
                (mul(MINUS_ONE, self.b1, k1inv), k1inv, ZERO),
                (mul(add(mul(self.b1, self.K2),
                         mul(MINUS_ONE, self.b2, self.K1)), k1inv2),
                 mul(MINUS_ONE, self.K2, k1inv2), k1inv))


def umatrix(b1=0, b2=0, K1=1, K2=0) -> UMatrix:
    u = UMatrix(_e(b1), _e(b2), _e(K1), _e(K2))
    if is_zero(u.K1):
        raise ValueError("UMatrix requires K1 != 0")
    return u


IDENTITY_U = umatrix()


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(add(*[mul(a[i][k], b[k][j]) for k in range(3)])
                       for j in range(3)) for i in range(3))


def mat_commutator(a: Matrix, b: Matrix) -> Matrix:
    ab = mat_mul(a, b)
    ba = mat_mul(b, a)
    return tuple(tuple(add(ab[i][j], mul(MINUS_ONE, ba[i][j]))
                       for j in range(3)) for i in range(3))


def as_nmatrix(m: Matrix) -> NMatrix:
    """Check the (8.5) pattern and read off the four entries."""
    zeros = [(0, 0), (0, 1), (0, 2), (1, 2)]
    for i, j in zeros:
        if not decide_equivalence(m[i][j], ZERO):
            raise ValueError(f"matrix breaks the N pattern at {(i, j)}")
    if not decide_equivalence(m[1][1], m[2][2]):
        raise ValueError("matrix breaks the N pattern on the diagonal")
    return NMatrix(m[1][0], m[2][0], m[1][1], m[2][1])


def conjugate(g: NMatrix, u: UMatrix) -> NMatrix:
    """g -> U g U^{-1}; the result keeps the pattern."""
    if is_zero(u.K1):
        raise ValueError("conjugation requires K1 != 0")
    return as_nmatrix(mat_mul(mat_mul(u.matrix(), g.matrix()), u.inverse()))


# canonical representatives ------------------------------------------------


def g1() -> NMatrix:
    return nmatrix(mu1=1)


def g2(lam) -> NMatrix:
    return nmatrix(nu1=lam, nu2=1)


def g2_tilde() -> NMatrix:
    return nmatrix(nu2=1)


def g3() -> NMatrix:
    return nmatrix(nu1=1)


def g4(ratio=1) -> NMatrix:
    return nmatrix(mu1=1, mu2=ratio)


def g5() -> NMatrix:
    return nmatrix(mu2=1)


def g6() -> NMatrix:
    return nmatrix(nu1=1, mu2=1)


class CaseSplitNeeded(Exception):
    """Raised when a symbolic entry's vanishing cannot be decided."""

    def __init__(self, conditions):
        super().__init__("canonical form needs a case split on: "
                         + ", ".join(str(c) for c in conditions))
        self.conditions = tuple(conditions)


@dataclass
class CanonicalForm:
    label: str                    # g1, g3, g4, g5, g6, g2~, zero
    canonical: NMatrix
    witness: UMatrix
    scale: Expr                   # scale * U g U^{-1} == canonical, exactly
    invariant: Optional[Expr] = None   # mu2/mu1 for the g4 class


def _vanishes(e: Expr) -> bool:
    d = decide_equivalence(e, ZERO)
    if d.verdict == EQUAL:
        return True
    if d.verdict == "different":
        from .expr import free_symbols
        if d.path != "numeric" or not free_symbols(e):
            return False
        # nonzero only generically: a free parameter could still vanish
        raise CaseSplitNeeded([e])
    raise CaseSplitNeeded([e])


def canonical_form(g: NMatrix) -> CanonicalForm:
    """Orbit representative, conjugating witness and rescaling factor.

    Branches on the computable invariants mu1 != 0, mu2 != 0, g^2 != 0
    (equivalently nu1 != 0 when mu1 = 0 != mu2) and the first column.
    """
    nu1, nu2, mu1, mu2 = g.nu1, g.nu2, g.mu1, g.mu2
    if not _vanishes(mu1):
        inv = powe(mu1, MINUS_ONE)
        b1 = mul(nu1, inv)
        b2 = mul(add(nu2, mul(MINUS_ONE, mu2, b1)), inv)
        w = umatrix(b1=b1, b2=b2)
        if _vanishes(mu2):
            return CanonicalForm("g1", g1(), w, inv)
        ratio = mul(mu2, inv)
        return CanonicalForm("g4", g4(ratio), w, inv, invariant=ratio)
    if not _vanishes(mu2):
        scale = powe(mu2, MINUS_ONE)
        n1 = mul(nu1, scale)
        n2 = mul(nu2, scale)
        if not _vanishes(n1):
            k1 = powe(n1, MINUS_ONE)
            b1 = mul(k1, n2)
            w = umatrix(b1=b1, K1=k1)
            return CanonicalForm("g6", g6(), w, scale)
        w = umatrix(b1=n2)
        return CanonicalForm("g5", g5(), w, scale)
    if not _vanishes(nu1):
        k1 = powe(nu1, MINUS_ONE)
        k2 = mul(MINUS_ONE, k1, nu2, k1)
        w = umatrix(K1=k1, K2=mul(MINUS_ONE, nu2, powe(nu1, rat(-2))))
        return CanonicalForm("g3", g3(), w, ONE)
    if not _vanishes(nu2):
        w = umatrix(K1=powe(nu2, MINUS_ONE))
        return CanonicalForm("g2~", g2_tilde(), w, ONE)
    return CanonicalForm("zero", nmatrix(), IDENTITY_U, ONE)


# realization --------------------------------------------------------------


def realize(g: NMatrix, m: int = 1) -> Generator:
    """ghat = g22 u du + g33 v dv + g32 u dv + g21 du + g31 dv.

    As a map of matrices to vector fields this is an anti-homomorphism:
    [ghat, hhat] = -(widehat [g, h]).  The realized symmetry bases (and the
    table rows, which are written mu*D - u du - v dv etc.) enter with the
    opposite sign, where the bracket signs line up with the matrix ones;
    see :func:`realized_basis`.
    """
    u, v = jet("u"), jet("v")
    return generator(
        m,
        phi_u=add(mul(g.mu1, u), g.nu1),
        phi_v=add(mul(g.mu1, v), mul(g.mu2, u), g.nu2))


def realized_basis(g: NMatrix, m: int = 1) -> Generator:
    """-ghat: the sign under which field brackets match matrix brackets."""
    return realize(g, m).scale(rat(-1))


# algebra catalogs ---------------------------------------------------------


@dataclass
class AlgebraPresentation:
    name: str
    basis_names: Tuple[str, ...]
    basis: Tuple[NMatrix, ...]
    # nonzero commutators: (i, j) -> {k: coefficient}, 1-based indices
    brackets: dict
    note: str = ""


_G = {"g1": g1, "g3": g3, "g4": g4, "g5": g5, "g6": g6, "g2~": g2_tilde}


def _catalog_raw():
    lam = sym("lam")
    return {
        # two-dimensional, abelian
        "A2,1": (("g3", "g2~"), {}),
        "A2,2": (("g1", "g5"), {}),
        "A2,3": (("g5", "g2~"), {}),
        "A2,4": (("g6", "g2~"), {}),
        # two-dimensional, [e1, e2] = e2
        "A2,5": (("g1", "g2(lam)"), {(1, 2): {2: Fraction(1)}}),
        "A2,13": (("g1", "g3"), {(1, 2): {2: Fraction(1)}}),
        # three- and four-dimensional (Table 1); the A3,4 basis order is the
        # machine-verified assignment of the listed matrix set to the stated
        # constants (the printed order scrambles e1..e3)
        "A3,1": (("g1", "g3", "g2~"),
                 {(1, 2): {2: Fraction(1)}, (1, 3): {3: Fraction(1)}}),
        "A3,2": (("g5", "g1", "g2~"), {(2, 3): {3: Fraction(1)}}),
        "A3,3": (("g2~", "g5", "g6"), {(2, 3): {1: Fraction(1)}}),
        "A3,4": (("g4", "g2~", "g3"),
                 {(1, 2): {2: Fraction(1)},
                  (1, 3): {2: Fraction(1), 3: Fraction(1)}}),
        "A4": (("g1", "g3", "g2~", "g5"),
               {(1, 2): {2: Fraction(1)}, (1, 3): {3: Fraction(1)},
                (4, 2): {3: Fraction(1)}}),
    }


def algebra_catalog(name: str) -> AlgebraPresentation:
    raw = _catalog_raw()
    if name not in raw:
        raise KeyError(f"unknown algebra {name!r}; have {sorted(raw)}")
    names, brackets = raw[name]
    basis = []
    for n in names:
        if n == "g2(lam)":
            basis.append(g2(sym("lam")))
        else:
            basis.append(_G[n]())
    note = ""
    if name == "A3,4":
        note = ("basis order fixed by verifying the stated constants "
                "against the matrix brackets")
    return AlgebraPresentation(name, tuple(names), tuple(basis), dict(brackets),
                               note)


def closure_check(basis: Sequence[NMatrix], brackets: dict) -> bool:
    """Every pairwise commutator equals its stated rational combination and
    unlisted pairs commute."""
    n = len(basis)
    for i in range(n):
        for j in range(i + 1, n):
            got = mat_commutator(basis[i].matrix(), basis[j].matrix())
            want = brackets.get((i + 1, j + 1))
            if want is None:
                rev = brackets.get((j + 1, i + 1))
                want = ({k: -c for k, c in rev.items()} if rev else {})
            expect = nmatrix()
            for k, c in want.items():
                expect_k = basis[k - 1].scale(rat(c))
                expect = NMatrix(add(expect.nu1, expect_k.nu1),
                                 add(expect.nu2, expect_k.nu2),
                                 add(expect.mu1, expect_k.mu1),
                                 add(expect.mu2, expect_k.mu2))
            em = expect.matrix()
            for r in range(3):
                for c2 in range(3):
                    if not decide_equivalence(got[r][c2], em[r][c2]):
                        return False
    return True


# realized one- and two-dimensional families --------------------------------


def realized_symmetry(g: NMatrix, m: int, kind: str = "dilation",
                      mu=None, lam=None, omega=None, nu=None,
                      drift_version: bool = False) -> Generator:
    """The symmetry built on a matrix g:

    * ``dilation``:    mu*D + ghat           (g in {g1, g4, g5, g6})
    * ``exponential``: e^{lam t} ghat
    * ``exp_wave``:    e^{lam t + omega.x} ghat   (g in {g1, g2})

    ``drift_version`` swaps D for the drift dilation Dtilde.
    """
    t = sym("t")
    gh = realize(g, m)
    if kind == "dilation":
        dname = "Dtilde" if drift_version else "D"
        d = named_operator(dname, m)
        muv = _e(mu if mu is not None else 0)
        return d.scale(muv) + gh
    if kind == "exponential":
        pref = exp_(mul(_e(lam), t))
        return gh.scale(pref)
    if kind == "exp_wave":
        xs = [sym(f"x{i}") for i in range(1, m + 1)]
        om = [_e(c) for c in (omega or [0] * m)]
        pref = exp_(add(mul(_e(lam), t), *[mul(om[i], xs[i]) for i in range(m)]))
        return gh.scale(pref)
    raise ValueError(f"unknown realization kind {kind!r}")


def realized_two_dim(name: str, m: int = 1, mu=0, nu=0,
                     fundamental: Optional["FundamentalPair"] = None):
    """The two-dimensional main-symmetry realizations built on the matrix
    algebras: basis generators plus their expected nonzero brackets
    ((i, j) -> {k: coeff}, over the returned basis)."""
    mu, nu = _e(mu), _e(nu)
    t = sym("t")
    ap = algebra_catalog(name)
    e = [realized_basis(g, m) for g in ap.basis]
    d = named_operator("D", m)
    if name == "A2,1":
        basis = [d.scale(mu) + e[0] + e[1].scale(mul(nu, t)), e[1]]
        return basis, {}
    if name == "A2,2":
        basis = [d.scale(mu) + e[1] + e[0].scale(mul(nu, t)), e[0]]
        return basis, {}
    if name == "A2,3":
        basis = [d.scale(mu) - e[0], d.scale(nu) - e[1]]
        return basis, {}
    if name == "A2,4":
        if fundamental is None:
            raise ValueError("A2,4 realization needs a fundamental pair")
        fp = fundamental
        basis = [e[0].scale(fp.F1) + e[1].scale(fp.G1),
                 e[0].scale(fp.F2) + e[1].scale(fp.G2)]
        return basis, {}
    if name == "A2,5":
        basis = [d.scale(mu) - e[0], e[1]]
        return basis, {(1, 2): {2: Fraction(-1)}}
    if name == "A2,13":
        basis = [d.scale(mu) + e[0] + e[1].scale(mul(nu, t)), e[1]]
        return basis, {(1, 2): {2: Fraction(1)}}
    raise KeyError(f"no two-dimensional realization for {name!r}")


# drift-side one-dimensional operators and two-dimensional algebras ----------


def drift_one_dim(name: str, m: int = 1, mu=0, nu=0) -> Generator:
    """The one-dimensional main-symmetry operators of the first-derivative
    systems (the dilation swapped for its drift version; the exponential
    shift operators are taken at zero rates, where the pairs close)."""
    from .expr import T, jet as _jet
    mu, nu = _e(mu), _e(nu)
    u, v = _jet("u"), _jet("v")
    dt = named_operator("Dtilde", m)
    if name == "X1^(1)":
        return dt.scale(mu) + generator(m, phi_u=mul(rat(-1), u),
                                        phi_v=mul(rat(-1), v))
    if name == "X1^(2)":
        return dt + generator(m, phi_u=mul(rat(-1), nu))
    if name == "X1^(3)":
        return dt + generator(m, phi_u=u, phi_v=add(v, nu))
    if name == "X2^(nu)":
        pref = exp_(mul(nu, T))
        return generator(m, phi_u=mul(pref, u), phi_v=mul(pref, v))
    if name == "X3^(1)":
        return generator(m, phi_u=ONE)
    if name == "X3^(2)":
        return generator(m, phi_v=ONE)
    if name == "X3^(3)":
        return generator(m, phi_u=ONE, phi_v=ONE)
    raise KeyError(f"unknown drift operator {name!r}")


def drift_algebra(name: str, m: int = 1, mu=0, nu=0):
    """Two-dimensional drift algebras: basis plus expected nonzero brackets.

    A~2 as displayed does not close (its commutator produces a bare dv
    outside the span); it is returned with the extension element that
    closes it recorded in the bracket table against index 3.
    """
    from .expr import T, jet as _jet
    mu, nu = _e(mu), _e(nu)
    u, v = _jet("u"), _jet("v")
    dt = named_operator("Dtilde", m)
    if name == "A~1":
        return [dt, drift_one_dim("X2^(nu)", m, nu=rat(0))], {}
    if name == "A~2":
        basis = [drift_one_dim("X1^(2)", m, nu=nu),
                 drift_one_dim("X3^(3)", m),
                 drift_one_dim("X3^(2)", m)]
        return basis, {(1, 2): {3: Fraction(1)}, (1, 3): {3: Fraction(1)}}
    if name == "A~3":
        return ([drift_one_dim("X1^(3)", m, nu=nu),
                 drift_one_dim("X3^(1)", m)],
                {(1, 2): {2: Fraction(-1)}})
    if name == "A~4":
        return ([drift_one_dim("X1^(1)", m, mu=mu),
                 drift_one_dim("X3^(1)", m)],
                {(1, 2): {2: Fraction(1)}})
    if name == "A~5":
        return ([drift_one_dim("X1^(1)", m, mu=rat(1)),
                 drift_one_dim("X3^(2)", m)],
                {(1, 2): {2: Fraction(2)}})
    if name == "A~6":
        x1 = dt + generator(m, phi_u=mul(rat(4), u),
                            phi_v=add(mul(rat(4), v), T))
        return [x1, drift_one_dim("X3^(2)", m)], {(1, 2): {2: Fraction(-3)}}
    if name == "A~7":
        x1 = dt + generator(m, phi_u=add(mul(rat(3), u), T),
                            phi_v=mul(rat(3), v))
        return [x1, drift_one_dim("X3^(1)", m)], {(1, 2): {2: Fraction(-3)}}
    raise KeyError(f"unknown drift algebra {name!r}")


def field_closure_check(basis, brackets) -> bool:
    """Field-level analogue of closure_check over a generator basis."""
    from .fields import commutator, zero_generator
    n = len(basis)
    m = basis[0].m
    for i in range(n):
        for j in range(i + 1, n):
            got = commutator(basis[i], basis[j])
            want = brackets.get((i + 1, j + 1))
            if want is None:
                rev = brackets.get((j + 1, i + 1))
                want = {k: -c for k, c in rev.items()} if rev else {}
            expect = zero_generator(m)
            for k, c in want.items():
                expect = expect + basis[k - 1].scale(rat(c))
            pairs = [(got.eta, expect.eta), (got.pi1, expect.pi1),
                     (got.pi2, expect.pi2)] + list(zip(got.xi, expect.xi))
            if not all(bool(decide_equivalence(x, y)) for x, y in pairs):
                return False
    return True


# fundamental pairs for F_t = lam F + alp G, G_t = sig F + gam G -------------


@dataclass
class FundamentalPair:
    F1: Expr
    G1: Expr
    F2: Expr
    G2: Expr

    def pairs(self):
        return ((self.F1, self.G1), (self.F2, self.G2))


def fundamental_pair(lam, alp, sig, gam) -> FundamentalPair:
    """Two independent closed-form solutions of the 2x2 linear system,
    split over the sign of the discriminant (distinct real / repeated /
    complex conjugate eigenvalues)."""
    lam, alp, sig, gam = _e(lam), _e(alp), _e(sig), _e(gam)
    t = sym("t")
    tr = add(lam, gam)
    disc = add(mul(add(lam, mul(MINUS_ONE, gam)), add(lam, mul(MINUS_ONE, gam))),
               mul(rat(4), alp, sig))
    dsign = _disc_sign(disc)
    half = rat(1, 2)
    if dsign == 0:
        k = mul(half, tr)
        ekt = exp_(mul(k, t))
        # (F, G) = e^{kt} (v + t w) with w the nilpotent image of v
        if not is_zero(alp):
            # eigenvector (alp, k - lam); generalized direction (0, 1)
            F1, Gv1 = alp, add(k, mul(MINUS_ONE, lam))
            F2 = mul(t, alp)
            Gv2 = add(ONE, mul(t, add(k, mul(MINUS_ONE, lam))))
        elif not is_zero(sig):
            F1, Gv1 = ZERO, sig
            F2 = ONE
            Gv2 = mul(t, sig)
        else:
            # diagonal with equal rates: plain exponentials
            return FundamentalPair(ekt, ZERO, ZERO, ekt)
        return FundamentalPair(mul(ekt, F1), mul(ekt, Gv1),
                               mul(ekt, F2), mul(ekt, Gv2))
    if dsign > 0:
        root = powe(disc, half)
        k1 = mul(half, add(tr, root))
        k2 = mul(half, add(tr, mul(MINUS_ONE, root)))
        if not is_zero(alp):
            vecs = [(alp, add(k1, mul(MINUS_ONE, lam))),
                    (alp, add(k2, mul(MINUS_ONE, lam)))]
        else:
            # alp = 0: eigenvalues are lam and gam; disc > 0 means lam != gam
            vecs = [(ONE, mul(sig, powe(add(lam, mul(MINUS_ONE, gam)),
                                        MINUS_ONE))),
                    (ZERO, ONE)]
            k1, k2 = lam, gam
        (f1, g1v), (f2, g2v) = vecs
        return FundamentalPair(mul(exp_(mul(k1, t)), f1),
                               mul(exp_(mul(k1, t)), g1v),
                               mul(exp_(mul(k2, t)), f2),
                               mul(exp_(mul(k2, t)), g2v))
    # complex pair  (tr +- i q)/2, q = sqrt(-disc)
    q = mul(half, powe(mul(MINUS_ONE, disc), half))
    p = mul(half, tr)
    ept = exp_(mul(p, t))
    cq = ker("cos", mul(q, t))
    sq = ker("sin", mul(q, t))
    if not is_zero(alp):
        # real/imag parts of e^{(p+iq)t} (alp, p - lam + i q)
        b = add(p, mul(MINUS_ONE, lam))
        F1 = mul(ept, alp, cq)
        G1 = mul(ept, add(mul(b, cq), mul(MINUS_ONE, q, sq)))
        F2 = mul(ept, alp, sq)
        G2 = mul(ept, add(mul(b, sq), mul(q, cq)))
        return FundamentalPair(F1, G1, F2, G2)
    raise ValueError("complex eigenvalues require alp != 0 in this pattern")


class SignSplitNeeded(Exception):
    def __init__(self, disc):
        super().__init__(f"cannot decide the sign of the discriminant {disc}")
        self.disc = disc


def _disc_sign(disc: Expr) -> int:
    from .expr import Rat
    from .expr import normalize
    d = normalize(disc)
    if isinstance(d, Rat):
        if d.value > 0:
            return 1
        if d.value < 0:
            return -1
        return 0
    if decide_equivalence(d, ZERO):
        return 0
    raise SignSplitNeeded(disc)


def pair_residuals(fp: FundamentalPair, lam, alp, sig, gam):
    """Back-substitution residuals of both returned solutions."""
    from .expr import differentiate, T
    lam, alp, sig, gam = _e(lam), _e(alp), _e(sig), _e(gam)
    out = []
    for F, G in fp.pairs():
        out.append(add(differentiate(F, T),
                       mul(MINUS_ONE, add(mul(lam, F), mul(alp, G)))))
        out.append(add(differentiate(G, T),
                       mul(MINUS_ONE, add(mul(sig, F), mul(gam, G)))))
    return out


def wronskian_at_zero(fp: FundamentalPair) -> Expr:
    """F1 G2 - F2 G1 evaluated at t = 0 (symbolically)."""
    from .expr import substitute, T
    w = add(mul(fp.F1, fp.G2), mul(MINUS_ONE, mul(fp.F2, fp.G1)))
    return substitute(w, {T: ZERO})
