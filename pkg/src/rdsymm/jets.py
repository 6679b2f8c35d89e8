"""Jet coordinates and total derivatives.

A jet symbol ``u_txi...`` stands for the corresponding partial derivative of
u(t, x); order-zero jets are u and v themselves.  Spatial indices commute,
so their multi-index is kept sorted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .expr import (EMPTY_RULES, Expr, RuleSet, T, add, differentiate,
                   is_zero, jets_in, mul, sym)


class JetOrderError(Exception):
    pass


@dataclass(frozen=True)
class JetContext:
    m: int
    max_order: int = 4

    def xs(self):
        return [sym(f"x{i}") for i in range(1, self.m + 1)]


Direction = Union[str, int]  # "t" or a 1-based spatial index


def total_derivative(e: Expr, direction: Direction, ctx: JetContext,
                     rules: RuleSet = EMPTY_RULES) -> Expr:
    """D_direction e = de/d(direction) + sum_J u^a_{J,dir} * de/du^a_J."""
    if direction == "t":
        base = T
    else:
        i = int(direction)
        if not 1 <= i <= ctx.m:
            raise JetOrderError(f"direction x{i} outside dimension m={ctx.m}")
        base = sym(f"x{i}")
    parts = [differentiate(e, base, rules)]
    for j in jets_in(e):
        d = differentiate(e, j, rules)
        if is_zero(d):
            continue
        bumped = j.bump(direction)
        if bumped.order > ctx.max_order:
            raise JetOrderError(
                f"total derivative exceeds jet order cap {ctx.max_order}")
        parts.append(mul(bumped, d))
    return add(*parts)


def laplacian(e: Expr, ctx: JetContext, rules: RuleSet = EMPTY_RULES) -> Expr:
    return add(*[total_derivative(total_derivative(e, i, ctx, rules), i, ctx, rules)
                 for i in range(1, ctx.m + 1)])


def x_squared(ctx: JetContext) -> Expr:
    return add(*[mul(x, x) for x in ctx.xs()])
