"""Deciding whether two expressions are equivalent.

Layered decision, cheapest first:

1. the normalized difference is literally 0 (normalization happens at
   construction, so this is just a zero test);
2. full expansion of the difference (distribution + cos-power reduction)
   cancels to 0 -- sound both ways for polynomials over independent atoms;
3. randomized evaluation at rational points: any clear mismatch is a sound
   "different"; agreement at every point is "equal" with the sampling
   confidence recorded.

Opaque kernels are sampled as unconstrained smooth functions: every
distinct (kernel, derivative, argument-values) triple gets an independent
random value, consistently within one sample point.  Domain errors trigger
resampling; if every attempt at a point fails the verdict is "undecided".
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .expr import Expr, ExprError, DomainError, add, expand, is_zero, mul, rat, free_symbols
from .numeric import UnboundSymbol, eval_at, magnitude

EQUAL = "equal"
DIFFERENT = "different"
UNDECIDED = "undecided"

MISMATCH_TOL = 1e-20


@dataclass
class EqDecision:
    verdict: str                      # equal / different / undecided
    path: str                         # normalize / expand / numeric
    samples: int = 0
    counterexample: Optional[dict] = None
    note: str = ""

    def __bool__(self):
        return self.verdict == EQUAL


def _random_fraction(rng: random.Random) -> Fraction:
    # kept small so that exponentials of sampled combinations stay well
    # inside 60-digit working precision
    num = rng.randint(1, 6)
    den = rng.randint(1, 3)
    sign = -1 if rng.random() < 0.5 else 1
    return Fraction(sign * num, den)


def _positive_fraction(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(1, 6), rng.randint(1, 3))


class _KernelSampler:
    """Consistent random values for opaque-kernel atoms at one point."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.cache = {}

    def __call__(self, name, dvec, arg_values):
        key = (name, dvec, arg_values)
        if key not in self.cache:
            self.cache[key] = _random_fraction(self.rng)
        return self.cache[key]


def decide_equivalence(e1: Expr, e2: Expr, samples: int = 32,
                       max_resample: int = 8, seed: int = 0,
                       positive=()) -> EqDecision:
    """Decide e1 == e2; ``positive`` lists atoms sampled strictly positive
    (on top of u, v and any base of a symbolic power, which always are)."""
    diff = add(e1, mul(rat(-1), e2))
    if is_zero(diff):
        return EqDecision(EQUAL, "normalize")
    try:
        expanded = expand(diff)
    except ExprError:
        expanded = None
    if expanded is not None and is_zero(expanded):
        return EqDecision(EQUAL, "expand")
    target = expanded if expanded is not None else diff

    pos_keys = {a.key() for a in positive}
    for a in free_symbols(target):
        # u, v and anything exponentiated symbolically live on the
        # positive verification domain
        if getattr(a, "dep", None) is not None and a.order == 0:
            pos_keys.add(a.key())
    pos_keys |= {b.key() for b in _symbolic_power_bases(target)}

    fs = sorted(free_symbols(target), key=Expr.key)
    rng = random.Random(seed)
    done = 0
    for i in range(samples):
        ok = False
        for _ in range(max_resample):
            point = {}
            for a in fs:
                point[a] = (_positive_fraction(rng) if a.key() in pos_keys
                            else _random_fraction(rng))
            sampler = _KernelSampler(rng)
            try:
                val, scale = _eval_with_scale(target, point, sampler)
            except DomainError:
                continue
            except UnboundSymbol:
                return EqDecision(UNDECIDED, "numeric",
                                  note="unevaluable atom")
            ok = True
            if isinstance(val, Fraction):
                mismatch = val != 0
            else:
                # guard against catastrophic cancellation between terms:
                # a true zero leaves only rounding noise relative to the
                # largest term magnitude
                mismatch = magnitude(val) > MISMATCH_TOL * max(1.0, scale)
            if mismatch:
                return EqDecision(
                    DIFFERENT, "numeric", samples=done + 1,
                    counterexample={str(k): v for k, v in point.items()})
            break
        if ok:
            done += 1
    if done == 0:
        return EqDecision(UNDECIDED, "numeric",
                          note=f"all {samples} points hit domain errors")
    return EqDecision(EQUAL, "numeric", samples=done,
                      note=f"agreed at {done} random points")


def _eval_with_scale(target: Expr, point, sampler):
    """Evaluate; for sums also report the largest term magnitude."""
    from .expr import Add
    if isinstance(target, Add):
        vals = [eval_at(t, point, kernel_values=sampler)
                for t in target.terms]
        total = vals[0]
        from .numeric import _num_add
        for v in vals[1:]:
            total = _num_add(total, v, 60)
        scale = max(magnitude(v) for v in vals)
        return total, scale
    val = eval_at(target, point, kernel_values=sampler)
    return val, magnitude(val)


def _symbolic_power_bases(e: Expr):
    from .expr import Add, Jet, Ker, Mul, Pow, Rat, Sym
    out = set()
    stack = [e]
    while stack:
        s = stack.pop()
        if isinstance(s, Pow):
            if not isinstance(s.exp, Rat) or s.exp.value.denominator != 1:
                for a in free_symbols(s.base):
                    out.add(a)
            stack.append(s.base)
            stack.append(s.exp)
        elif isinstance(s, Mul):
            for b, x in s.pairs:
                if not isinstance(x, Rat) or x.value.denominator != 1:
                    for a in free_symbols(b):
                        out.add(a)
                stack.append(b)
                stack.append(x)
        elif isinstance(s, Add):
            stack.extend(s.terms)
        elif isinstance(s, Ker):
            stack.extend(s.args)
    return out


class UndecidedEquality(Exception):
    pass


def equivalent(e1: Expr, e2: Expr, **kw) -> bool:
    """Boolean front door; raises UndecidedEquality on the rare fallthrough."""
    d = decide_equivalence(e1, e2, **kw)
    if d.verdict == UNDECIDED:
        raise UndecidedEquality(d.note)
    return d.verdict == EQUAL
