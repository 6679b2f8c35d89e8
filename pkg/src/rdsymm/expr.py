"""Exact symbolic expressions.

Nodes are immutable, with structural hashing and equality; the module-level
constructors (``rat``, ``add``, ``mul``, ``powe``, ``ker``, ...) are the only
way composite nodes get built and they normalize on construction, so every
``Expr`` you can hold is already in normal form:

* sums are flat, like terms merged, at most one rational term;
* products are flat with a rational coefficient and base^exponent pairs,
  exponents of equal bases added, ``exp`` factors merged into one;
* integer powers of rationals are folded, ``(b^p)^q`` collapses, and a power
  of a product distributes over its factors.

Products of sums are *not* distributed here; see :func:`expand`.

Symbols are assumed positive on the verification domain, which licenses
``ln(b^e) = e*ln(b)`` and friends; rational constants are never treated as
positive unless they are.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union


class ExprError(Exception):
    pass


class DomainError(ExprError):
    """Raised when evaluation leaves the allowed domain (ln(x<=0), 1/0)."""


Number = Union[int, Fraction]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise ExprError(f"not an exact number: {x!r}")


class Expr:
    __slots__ = ("_hash", "_key")

    def key(self):
        k = getattr(self, "_key", None)
        if k is None:
            k = self._make_key()
            self._key = k
        return k

    def __hash__(self):
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash(self.key())
            self._hash = h
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self.key() == other.key()

    def __lt__(self, other):
        return self.key() < other.key()

    # arithmetic sugar (used heavily by the rest of the package and tests)
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, mul(rat(-1), _coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), mul(rat(-1), self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return mul(self, powe(_coerce(other), rat(-1)))

    def __rtruediv__(self, other):
        return mul(_coerce(other), powe(self, rat(-1)))

    def __pow__(self, other):
        return powe(self, _coerce(other))

    def __neg__(self):
        return mul(rat(-1), self)

    def __repr__(self):
        from .parser import to_text

        return f"<{type(self).__name__} {to_text(self)}>"

    def __str__(self):
        from .parser import to_text

        return to_text(self)


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return rat(x)
    raise ExprError(f"cannot coerce {x!r} to Expr")


class Rat(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Fraction):
        self.value = value

    def _make_key(self):
        return (0, self.value.numerator, self.value.denominator)


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def _make_key(self):
        return (1, self.name)


class Jet(Expr):
    """A jet coordinate u^a_J; order zero is the dependent variable itself."""

    __slots__ = ("dep", "nt", "xs")

    def __init__(self, dep: str, nt: int = 0, xs: Sequence[int] = ()):
        if dep not in ("u", "v"):
            raise ExprError(f"unknown dependent {dep!r}")
        self.dep = dep
        self.nt = nt
        self.xs = tuple(sorted(xs))

    @property
    def order(self) -> int:
        return self.nt + len(self.xs)

    def bump(self, direction) -> "Jet":
        if direction == "t":
            return Jet(self.dep, self.nt + 1, self.xs)
        return Jet(self.dep, self.nt, self.xs + (int(direction),))

    def _make_key(self):
        return (2, self.dep, self.nt, self.xs)


class Ker(Expr):
    """Kernel application: exp/ln/sin/cos or an opaque named function.

    ``dvec[i]`` counts derivatives taken with respect to argument slot ``i``.
    Builtins always carry dvec == (0,); their derivatives are closed forms.
    """

    __slots__ = ("name", "args", "dvec")

    def __init__(self, name: str, args: Sequence[Expr], dvec: Sequence[int] = None):
        self.name = name
        self.args = tuple(args)
        self.dvec = tuple(dvec) if dvec is not None else (0,) * len(self.args)
        if len(self.dvec) != len(self.args):
            raise ExprError("dvec length mismatch")

    def _make_key(self):
        return (3, self.name, self.dvec, tuple(a.key() for a in self.args))


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Expr):
        self.base = base
        self.exp = exp

    def _make_key(self):
        return (4, self.base.key(), self.exp.key())


class Mul(Expr):
    """coeff * prod(base^exp for base, exp in pairs); pairs sorted by base."""

    __slots__ = ("coeff", "pairs")

    def __init__(self, coeff: Fraction, pairs):
        self.coeff = coeff
        self.pairs = tuple(pairs)

    def _make_key(self):
        return (5, self.coeff.numerator, self.coeff.denominator,
                tuple((b.key(), e.key()) for b, e in self.pairs))


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple(terms)

    def _make_key(self):
        return (6, tuple(t.key() for t in self.terms))


BUILTIN_KERNELS = ("exp", "ln", "sin", "cos")

_RAT_CACHE = {}


def rat(num, den=None) -> Rat:
    value = Fraction(num, den) if den is not None else (
        num if isinstance(num, Fraction) else Fraction(num))
    node = _RAT_CACHE.get(value)
    if node is None:
        node = Rat(value)
        if -64 <= value <= 64:
            _RAT_CACHE[value] = node
    return node


ZERO = rat(0)
ONE = rat(1)
MINUS_ONE = rat(-1)
HALF = rat(1, 2)


def sym(name: str) -> Sym:
    return Sym(name)


def jet(dep: str, nt: int = 0, xs: Sequence[int] = ()) -> Jet:
    return Jet(dep, nt, xs)


U = jet("u")
V = jet("v")
T = sym("t")


def xvar(i: int) -> Sym:
    return sym(f"x{i}")


def is_zero(e: Expr) -> bool:
    return isinstance(e, Rat) and e.value == 0


def is_one(e: Expr) -> bool:
    return isinstance(e, Rat) and e.value == 1


def is_int(e: Expr) -> bool:
    return isinstance(e, Rat) and e.value.denominator == 1


# ---------------------------------------------------------------------------
# constructors


def _term_parts(t: Expr):
    """Split an Add term into (Fraction coefficient, monomial pairs key)."""
    if isinstance(t, Rat):
        return t.value, None
    if isinstance(t, Mul):
        return t.coeff, t.pairs
    if isinstance(t, Pow):
        return Fraction(1), ((t.base, t.exp),)
    return Fraction(1), ((t, ONE),)


def _from_parts(coeff: Fraction, pairs) -> Expr:
    if pairs is None:
        return rat(coeff)
    return _make_mul(coeff, pairs)


def add(*terms) -> Expr:
    acc = {}
    order = []
    for t in terms:
        stack = [t]
        while stack:
            s = stack.pop()
            if isinstance(s, Add):
                stack.extend(reversed(s.terms))
                continue
            if isinstance(s, Rat) and s.value == 0:
                continue
            coeff, pairs = _term_parts(s)
            k = None if pairs is None else tuple((b.key(), e.key()) for b, e in pairs)
            if k in acc:
                acc[k] = (acc[k][0] + coeff, pairs)
            else:
                acc[k] = (coeff, pairs)
                order.append(k)
    out = []
    for k in order:
        coeff, pairs = acc[k]
        if coeff == 0:
            continue
        out.append(_from_parts(coeff, pairs))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=Expr.key)
    return Add(out)


def _make_mul(coeff: Fraction, pairs) -> Expr:
    """Assemble a product from already-collected (base, exp) pairs."""
    if coeff == 0:
        return ZERO
    pairs = [(b, e) for b, e in pairs if not is_zero(e)]
    if not pairs:
        return rat(coeff)
    pairs.sort(key=lambda be: be[0].key())
    if len(pairs) == 1:
        b, e = pairs[0]
        if coeff == 1:
            return b if is_one(e) else Pow(b, e)
        # a bare rational multiple of a sum distributes, so that like terms
        # across sums can merge
        if is_one(e) and isinstance(b, Add):
            return add(*[_scale_term(coeff, t) for t in b.terms])
    return Mul(coeff, tuple(pairs))


def _scale_term(coeff: Fraction, t: Expr) -> Expr:
    c, pairs = _term_parts(t)
    return _from_parts(coeff * c, pairs)


def mul(*factors) -> Expr:
    coeff = Fraction(1)
    bases = {}  # base key -> [base, list of exponents]
    base_order = []
    exp_args = []  # accumulated exponential-kernel arguments (already scaled)

    def put(base, expo):
        k = base.key()
        if k in bases:
            bases[k][1].append(expo)
        else:
            bases[k] = [base, [expo]]
            base_order.append(k)

    def classify(f, merge_exp=True):
        nonlocal coeff
        if isinstance(f, Rat):
            coeff *= f.value
            return
        if isinstance(f, Mul):
            coeff *= f.coeff
            for b, e in f.pairs:
                classify(Pow(b, e) if not is_one(e) else b, merge_exp)
            return
        if isinstance(f, Pow):
            base, expo = f.base, f.exp
        else:
            base, expo = f, ONE
        if merge_exp and isinstance(base, Ker) and base.name == "exp":
            exp_args.append(base.args[0] if is_one(expo)
                            else mul(expo, base.args[0]))
            return
        if isinstance(base, Rat) and is_int(expo):
            n = int(expo.value)
            if base.value == 0:
                if n > 0:
                    coeff = Fraction(0)
                    return
                raise DomainError("division by zero: 0 to a non-positive power")
            coeff *= base.value ** n
            return
        put(base, expo)

    for f in factors:
        classify(f)
        if coeff == 0:
            return ZERO
    if exp_args:
        merged = ker("exp", add(*exp_args))
        # ln extraction may have turned the exponential into a product;
        # fold its pieces back in (any surviving exp factor goes in as-is)
        classify(merged, merge_exp=False)
        if coeff == 0:
            return ZERO

    out_pairs = []
    pending = []  # collapse fallout that must be reclassified
    for k in base_order:
        base, exps = bases[k]
        e = add(*exps)
        if is_zero(e):
            continue
        if isinstance(base, Rat) and is_int(e):
            n = int(e.value)
            if base.value == 0 and n <= 0:
                raise DomainError("division by zero")
            coeff *= base.value ** n
            if coeff == 0:
                return ZERO
            continue
        collapsed = powe(base, e)
        if isinstance(collapsed, Pow) and collapsed.base.key() == k:
            out_pairs.append((collapsed.base, collapsed.exp))
        elif collapsed.key() == k and is_one(e):
            out_pairs.append((base, ONE))
        else:
            pending.append(collapsed)
    if pending:
        return mul(_make_mul(coeff, out_pairs), *pending)
    return _make_mul(coeff, out_pairs)


def _rat_root(value: Fraction, q: int) -> Optional[Fraction]:
    """Exact q-th root of a non-negative rational, if it exists."""
    def iroot(n: int) -> Optional[int]:
        if n in (0, 1):
            return n
        lo, hi = 1, n
        while lo <= hi:
            mid = (lo + hi) // 2
            p = mid ** q
            if p == n:
                return mid
            if p < n:
                lo = mid + 1
            else:
                hi = mid - 1
        return None

    rn = iroot(value.numerator)
    if rn is None:
        return None
    rd = iroot(value.denominator)
    if rd is None:
        return None
    return Fraction(rn, rd)


def powe(base: Expr, exp: Expr) -> Expr:
    if is_zero(exp):
        return ONE
    if is_one(exp):
        return base
    if is_one(base):
        return ONE
    if isinstance(base, Rat):
        if base.value == 0:
            if isinstance(exp, Rat):
                if exp.value > 0:
                    return ZERO
                raise DomainError("division by zero: 0 to a non-positive power")
            return Pow(base, exp)
        if isinstance(exp, Rat):
            if exp.value.denominator == 1:
                n = int(exp.value)
                return rat(base.value ** n)
            if base.value > 0:
                root = _rat_root(base.value, exp.value.denominator)
                if root is not None:
                    return rat(root ** exp.value.numerator)
            return Pow(base, exp)
        return Pow(base, exp)
    if isinstance(base, Pow):
        inner_exp = base.exp
        merge = is_int(exp) or not (isinstance(base.base, Rat) and base.base.value < 0)
        if merge:
            return powe(base.base, mul(inner_exp, exp))
        return Pow(base, exp)
    if isinstance(base, Mul):
        if is_int(exp) or base.coeff > 0:
            factors = [powe(rat(base.coeff), exp)]
            factors += [powe(Pow(b, e) if not is_one(e) else b, exp)
                        for b, e in base.pairs]
            return mul(*factors)
        return Pow(base, exp)
    if isinstance(base, Ker) and base.name == "exp":
        return ker("exp", mul(base.args[0], exp))
    return Pow(base, exp)


def _sign_flip(e: Expr):
    """Return (True, -e) when e's canonical leading sign is negative."""
    if isinstance(e, Rat):
        if e.value < 0:
            return True, rat(-e.value)
        return False, e
    if isinstance(e, Mul):
        if e.coeff < 0:
            return True, _make_mul(-e.coeff, e.pairs)
        return False, e
    if isinstance(e, Add):
        first = e.terms[0]
        c, _ = _term_parts(first)
        if c < 0:
            return True, mul(MINUS_ONE, e)
        return False, e
    return False, e


def _ln_split(term: Expr):
    """Match term == c * ln(b); return (c, b) or None."""
    if isinstance(term, Ker) and term.name == "ln":
        return Fraction(1), term.args[0]
    if isinstance(term, Mul) and len(term.pairs) == 1:
        (b, e), = term.pairs
        if isinstance(b, Ker) and b.name == "ln" and is_one(e):
            return term.coeff, b.args[0]
    return None


def ker(name: str, *args, dvec: Sequence[int] = None) -> Expr:
    args = tuple(_coerce(a) for a in args)
    if name in BUILTIN_KERNELS:
        if len(args) != 1:
            raise ExprError(f"{name} takes one argument")
        if dvec is not None and any(dvec):
            raise ExprError("builtin kernels have closed-form derivatives")
        (a,) = args
        if name == "exp":
            if is_zero(a):
                return ONE
            if isinstance(a, Ker) and a.name == "ln":
                return a.args[0]
            # pull rational multiples of ln out of the exponent
            terms = a.terms if isinstance(a, Add) else (a,)
            lnparts, rest = [], []
            for t in terms:
                m = _ln_split(t)
                if m is not None:
                    lnparts.append(m)
                else:
                    rest.append(t)
            if lnparts:
                factors = [powe(b, rat(c)) for c, b in lnparts]
                r = add(*rest)
                if not is_zero(r):
                    factors.append(Ker("exp", (r,)))
                return mul(*factors)
            return Ker("exp", (a,))
        if name == "ln":
            if is_one(a):
                return ZERO
            if isinstance(a, Ker) and a.name == "exp":
                return a.args[0]
            if isinstance(a, Pow):
                return mul(a.exp, ker("ln", a.base))
            if isinstance(a, Mul) and a.coeff == 1:
                return add(*[mul(e, ker("ln", b)) for b, e in a.pairs])
            if isinstance(a, Rat) and a.value <= 0:
                raise DomainError(f"ln of non-positive constant {a.value}")
            return Ker("ln", (a,))
        if name == "sin":
            if is_zero(a):
                return ZERO
            neg, a2 = _sign_flip(a)
            if neg:
                return mul(MINUS_ONE, Ker("sin", (a2,)))
            return Ker("sin", (a,))
        if name == "cos":
            if is_zero(a):
                return ONE
            _, a2 = _sign_flip(a)
            return Ker("cos", (a2,))
    return Ker(name, args, dvec)


def exp_(a) -> Expr:
    return ker("exp", a)


def ln_(a) -> Expr:
    return ker("ln", a)


def sin_(a) -> Expr:
    return ker("sin", a)


def cos_(a) -> Expr:
    return ker("cos", a)


def normalize(e: Expr) -> Expr:
    """Rebuild bottom-up through the normalizing constructors (idempotent)."""
    if isinstance(e, (Rat, Sym, Jet)):
        return e
    if isinstance(e, Ker):
        return Ker(e.name, tuple(normalize(a) for a in e.args), e.dvec) \
            if e.name not in BUILTIN_KERNELS else ker(e.name, *[normalize(a) for a in e.args])
    if isinstance(e, Pow):
        return powe(normalize(e.base), normalize(e.exp))
    if isinstance(e, Mul):
        return mul(rat(e.coeff), *[powe(normalize(b), normalize(x)) for b, x in e.pairs])
    if isinstance(e, Add):
        return add(*[normalize(t) for t in e.terms])
    raise ExprError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# traversal helpers


def atoms(e: Expr, kinds=(Sym, Jet)) -> set:
    out = set()
    stack = [e]
    while stack:
        s = stack.pop()
        if isinstance(s, kinds):
            out.add(s)
        if isinstance(s, Ker):
            stack.extend(s.args)
        elif isinstance(s, Pow):
            stack.append(s.base)
            stack.append(s.exp)
        elif isinstance(s, Mul):
            for b, x in s.pairs:
                stack.append(b)
                stack.append(x)
        elif isinstance(s, Add):
            stack.extend(s.terms)
    return out


def kernel_atoms(e: Expr) -> set:
    """All Ker nodes occurring in e (including inside other kernels' args)."""
    out = set()
    stack = [e]
    while stack:
        s = stack.pop()
        if isinstance(s, Ker):
            out.add(s)
            stack.extend(s.args)
        elif isinstance(s, Pow):
            stack.append(s.base)
            stack.append(s.exp)
        elif isinstance(s, Mul):
            for b, x in s.pairs:
                stack.append(b)
                stack.append(x)
        elif isinstance(s, Add):
            stack.extend(s.terms)
    return out


def free_symbols(e: Expr) -> set:
    return atoms(e, (Sym, Jet))


def jets_in(e: Expr) -> set:
    return atoms(e, (Jet,))


def contains(e: Expr, target: Expr) -> bool:
    stack = [e]
    tk = target.key()
    while stack:
        s = stack.pop()
        if s.key() == tk:
            return True
        if isinstance(s, Ker):
            stack.extend(s.args)
        elif isinstance(s, Pow):
            stack.append(s.base)
            stack.append(s.exp)
        elif isinstance(s, Mul):
            for b, x in s.pairs:
                stack.append(b)
                stack.append(x)
        elif isinstance(s, Add):
            stack.extend(s.terms)
    return False


# ---------------------------------------------------------------------------
# kernel rewrite rules


class KernelRule:
    """Defining relation  d^order/d(slot)^order  K(params) = template.

    The template is written in terms of the canonical parameter symbols and
    may mention other derivatives of the same kernel (by name), as long as
    every kernel occurrence in it carries strictly fewer slot-derivatives
    than ``order`` -- that is what makes rewriting terminate.
    """

    __slots__ = ("name", "slot", "order", "params", "template")

    def __init__(self, name: str, slot: int, order: int,
                 params: Sequence[Expr], template: Expr):
        self.name = name
        self.slot = slot
        self.order = order
        self.params = tuple(params)
        self.template = template


class RuleSet:
    def __init__(self, rules: Iterable[KernelRule] = ()):
        self._by_name = {}
        for r in rules:
            self._by_name.setdefault(r.name, []).append(r)

    def __bool__(self):
        return bool(self._by_name)

    def extend(self, rules: Iterable[KernelRule]) -> "RuleSet":
        out = RuleSet()
        for rs in self._by_name.values():
            for r in rs:
                out._by_name.setdefault(r.name, []).append(r)
        for r in rules:
            out._by_name.setdefault(r.name, []).append(r)
        return out

    def for_name(self, name: str):
        return self._by_name.get(name, ())


EMPTY_RULES = RuleSet()


def apply_rules(e: Expr, rules: RuleSet) -> Expr:
    """Rewrite every derived kernel in e through the defining rules."""
    if not rules:
        return e
    if isinstance(e, (Rat, Sym, Jet)):
        return e
    if isinstance(e, Ker):
        args = tuple(apply_rules(a, rules) for a in e.args)
        if any(e.dvec):
            return reduce_kernel(e.name, args, e.dvec, rules)
        if e.name in BUILTIN_KERNELS:
            return ker(e.name, *args)
        return Ker(e.name, args, e.dvec)
    if isinstance(e, Pow):
        return powe(apply_rules(e.base, rules), apply_rules(e.exp, rules))
    if isinstance(e, Mul):
        return mul(rat(e.coeff), *[powe(apply_rules(b, rules),
                                        apply_rules(x, rules))
                                   for b, x in e.pairs])
    if isinstance(e, Add):
        return add(*[apply_rules(t, rules) for t in e.terms])
    raise ExprError(f"unknown node {e!r}")


def reduce_kernel(name: str, args, dvec, rules: RuleSet) -> Expr:
    """Apply defining rewrite rules to a derived kernel, recursively."""
    for rule in rules.for_name(name):
        if dvec[rule.slot] >= rule.order:
            rem = list(dvec)
            rem[rule.slot] -= rule.order
            e = rule.template
            for i, n in enumerate(rem):
                for _ in range(n):
                    e = differentiate(e, rule.params[i], rules)
            binding = {p: a for p, a in zip(rule.params, args)}
            return substitute(e, binding, rules)
    return Ker(name, args, tuple(dvec))


# ---------------------------------------------------------------------------
# differentiation


def _ker_slot_derivative(e: Ker, slot: int, rules: RuleSet) -> Expr:
    if e.name in BUILTIN_KERNELS:
        a = e.args[0]
        if e.name == "exp":
            return Ker("exp", (a,))
        if e.name == "ln":
            return powe(a, MINUS_ONE)
        if e.name == "sin":
            return ker("cos", a)
        if e.name == "cos":
            return mul(MINUS_ONE, ker("sin", a))
    dvec = list(e.dvec)
    dvec[slot] += 1
    return reduce_kernel(e.name, e.args, dvec, rules)


def differentiate(e: Expr, s: Expr, rules: RuleSet = EMPTY_RULES,
                  _memo=None) -> Expr:
    """Exact partial derivative of e with respect to the atom s."""
    if not isinstance(s, (Sym, Jet)):
        raise ExprError(f"can only differentiate by a symbol, got {s!r}")
    if _memo is None:
        _memo = {}
    k = e.key()
    hit = _memo.get(k)
    if hit is not None:
        return hit

    if isinstance(e, Rat):
        out = ZERO
    elif isinstance(e, (Sym, Jet)):
        out = ONE if e == s else ZERO
    elif isinstance(e, Ker):
        parts = []
        for i, a in enumerate(e.args):
            da = differentiate(a, s, rules, _memo)
            if is_zero(da):
                continue
            parts.append(mul(_ker_slot_derivative(e, i, rules), da))
        out = add(*parts) if parts else ZERO
    elif isinstance(e, Pow):
        db = differentiate(e.base, s, rules, _memo)
        de = differentiate(e.exp, s, rules, _memo)
        parts = []
        if not is_zero(db):
            parts.append(mul(e.exp, powe(e.base, add(e.exp, MINUS_ONE)), db))
        if not is_zero(de):
            parts.append(mul(ker("ln", e.base), powe(e.base, e.exp), de))
        out = add(*parts) if parts else ZERO
    elif isinstance(e, Mul):
        factors = [Pow(b, x) if not is_one(x) else b for b, x in e.pairs]
        parts = []
        for i, f in enumerate(factors):
            df = differentiate(f, s, rules, _memo)
            if is_zero(df):
                continue
            rest = factors[:i] + factors[i + 1:]
            parts.append(mul(rat(e.coeff), df, *rest))
        out = add(*parts) if parts else ZERO
    elif isinstance(e, Add):
        out = add(*[differentiate(t, s, rules, _memo) for t in e.terms])
    else:
        raise ExprError(f"unknown node {e!r}")
    _memo[k] = out
    return out


# ---------------------------------------------------------------------------
# substitution


class KernelWitness:
    """Concrete replacement for an opaque kernel: body written in params."""

    __slots__ = ("params", "body")

    def __init__(self, params: Sequence[Expr], body: Expr):
        self.params = tuple(params)
        self.body = body


def substitute(e: Expr, binding: Mapping, rules: RuleSet = EMPTY_RULES) -> Expr:
    """Simultaneous capture-free substitution followed by normalization.

    Keys may be Sym/Jet atoms (mapping to Exprs) or kernel names (mapping to
    KernelWitness); binding a symbol not present is a no-op.
    """
    if not binding:
        return e
    atom_map = {}
    witness_map = {}
    for k, v in binding.items():
        if isinstance(k, str):
            witness_map[k] = v
        else:
            atom_map[k.key()] = _coerce(v)

    def walk(n: Expr) -> Expr:
        if isinstance(n, (Sym, Jet)):
            return atom_map.get(n.key(), n)
        if isinstance(n, Rat):
            return n
        if isinstance(n, Ker):
            new_args = [walk(a) for a in n.args]
            w = witness_map.get(n.name)
            if w is not None:
                body = w.body
                for i, cnt in enumerate(n.dvec):
                    for _ in range(cnt):
                        body = differentiate(body, w.params[i], rules)
                return substitute(body, dict(zip(w.params, new_args)), rules)
            if n.name in BUILTIN_KERNELS:
                return ker(n.name, *new_args)
            return Ker(n.name, tuple(new_args), n.dvec)
        if isinstance(n, Pow):
            return powe(walk(n.base), walk(n.exp))
        if isinstance(n, Mul):
            return mul(rat(n.coeff),
                       *[powe(walk(b), walk(x)) for b, x in n.pairs])
        if isinstance(n, Add):
            return add(*[walk(t) for t in n.terms])
        raise ExprError(f"unknown node {n!r}")

    return walk(e)


# ---------------------------------------------------------------------------
# expansion (full distribution + trig power reduction)


_EXPAND_TERM_CAP = 200_000


def _expand_mul_terms(aterms, bterms):
    out = []
    if len(aterms) * len(bterms) > _EXPAND_TERM_CAP:
        raise ExprError("expansion too large")
    for x in aterms:
        for y in bterms:
            out.append(mul(x, y))
    return out


def _terms_of(e: Expr):
    return list(e.terms) if isinstance(e, Add) else [e]


def _expand_node(e: Expr) -> Expr:
    if isinstance(e, (Rat, Sym, Jet)):
        return e
    if isinstance(e, Ker):
        if e.name in BUILTIN_KERNELS:
            return ker(e.name, _expand_node(e.args[0]))
        return Ker(e.name, tuple(_expand_node(a) for a in e.args), e.dvec)
    if isinstance(e, Pow):
        b = _expand_node(e.base)
        x = _expand_node(e.exp)
        if isinstance(b, Add) and is_int(x) and x.value > 1:
            n = int(x.value)
            terms = _terms_of(b)
            acc = terms
            for _ in range(n - 1):
                acc = _expand_mul_terms(acc, terms)
            return add(*acc)
        return powe(b, x)
    if isinstance(e, Mul):
        factor_term_lists = [[rat(e.coeff)]]
        for b, x in e.pairs:
            f = _expand_node(powe(_expand_node(b), _expand_node(x)))
            factor_term_lists.append(_terms_of(f))
        acc = factor_term_lists[0]
        for terms in factor_term_lists[1:]:
            acc = _expand_mul_terms(acc, terms)
        return add(*acc)
    if isinstance(e, Add):
        return add(*[_expand_node(t) for t in e.terms])
    raise ExprError(f"unknown node {e!r}")


def _cos_reduce_once(e: Expr):
    """Rewrite one cos(x)^n (n>=2) occurrence via cos^2 = 1 - sin^2."""
    terms = _terms_of(e)
    for idx, t in enumerate(terms):
        coeff, pairs = _term_parts(t)
        if pairs is None:
            continue
        for j, (b, x) in enumerate(pairs):
            if isinstance(b, Ker) and b.name == "cos" and is_int(x) and x.value >= 2:
                arg = b.args[0]
                rest = list(pairs[:j]) + list(pairs[j + 1:])
                k = int(x.value)
                repl = mul(
                    powe(add(ONE, mul(MINUS_ONE, powe(ker("sin", arg), rat(2)))),
                         rat(k // 2)),
                    powe(b, rat(k % 2)))
                new_term = mul(rat(coeff), repl,
                               *[Pow(bb, xx) if not is_one(xx) else bb
                                 for bb, xx in rest])
                new_terms = terms[:idx] + [_expand_node(new_term)] + terms[idx + 1:]
                return add(*new_terms), True
    return e, False


def expand(e: Expr) -> Expr:
    """Fully distribute products over sums and reduce cos powers to <= 1."""
    out = _expand_node(e)
    changed = True
    while changed:
        out, changed = _cos_reduce_once(out)
    return out
