"""A tiny expression tree for math answers.

Covers only what short final answers need: rationals, a few named constants,
single-letter variables, +, *, powers and radicals. Construction canonicalizes:
nested sums/products are flattened, arguments sorted by a deterministic key,
numeric subterms folded exactly (including perfect roots of non-negative
rationals). There is deliberately no general simplifier — equivalence of
distinct trees is decided numerically by the caller.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

# Folding guard: never materialize integers bigger than ~10^64 while folding
# powers; past that, keep the node symbolic and let numeric eval handle it.
_MAX_FOLD_EXPONENT = 64
_MAX_FOLD_BASE_DIGITS = 64

_CONSTANT_VALUES: dict[str, complex] = {"pi": math.pi, "e": math.e, "i": 1j}


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Const:
    name: str  # "pi" | "e" | "i"

    def __post_init__(self) -> None:
        if self.name not in _CONSTANT_VALUES:
            raise ValueError(f"unknown constant {self.name!r}")


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Mul:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: "Expr"


Expr = Union[Num, Const, Var, Add, Mul, Pow]

ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))


def num(value: int | Fraction) -> Num:
    return Num(Fraction(value))


def sort_key(e: Expr) -> tuple:
    """Deterministic total order over trees.

    Keys at the same rank always have the same shape, so tuple comparison
    never mixes types.
    """
    if isinstance(e, Num):
        return (0, str(e.value))
    if isinstance(e, Const):
        return (1, e.name)
    if isinstance(e, Var):
        return (2, e.name)
    if isinstance(e, Add):
        return (3, tuple(sort_key(a) for a in e.args))
    if isinstance(e, Mul):
        return (4, tuple(sort_key(a) for a in e.args))
    if isinstance(e, Pow):
        return (5, (sort_key(e.base), sort_key(e.exp)))
    raise TypeError(f"not an expression: {e!r}")


def add(*args: Expr) -> Expr:
    flat: list[Expr] = []
    for a in args:
        if isinstance(a, Add):
            flat.extend(a.args)
        else:
            flat.append(a)
    constant = Fraction(0)
    rest: list[Expr] = []
    for a in flat:
        if isinstance(a, Num):
            constant += a.value
        else:
            rest.append(a)
    rest.sort(key=sort_key)
    if constant != 0:
        rest.insert(0, Num(constant))
    if not rest:
        return ZERO
    if len(rest) == 1:
        return rest[0]
    return Add(tuple(rest))


def mul(*args: Expr) -> Expr:
    flat: list[Expr] = []
    for a in args:
        if isinstance(a, Mul):
            flat.extend(a.args)
        else:
            flat.append(a)
    coeff = Fraction(1)
    rest: list[Expr] = []
    for a in flat:
        if isinstance(a, Num):
            coeff *= a.value
        else:
            rest.append(a)
    if coeff == 0:
        return ZERO
    rest.sort(key=sort_key)
    if coeff != 1:
        rest.insert(0, Num(coeff))
    if not rest:
        return Num(coeff)
    if len(rest) == 1:
        return rest[0]
    return Mul(tuple(rest))


def _nth_root_exact(n: int, degree: int) -> int | None:
    """Integer d-th root of n >= 0, or None if n is not a perfect power."""
    if n < 0:
        return None
    if n in (0, 1):
        return n
    root = round(n ** (1.0 / degree))
    for candidate in (root - 1, root, root + 1):
        if candidate >= 0 and candidate**degree == n:
            return candidate
    return None


def _fold_rational_pow(base: Fraction, exp: Fraction) -> Fraction | None:
    """Exact value of base**exp when it is rational and small enough to fold."""
    p, q = exp.numerator, exp.denominator
    if abs(p) > _MAX_FOLD_EXPONENT:
        return None
    if len(str(base.numerator)) > _MAX_FOLD_BASE_DIGITS or len(str(base.denominator)) > _MAX_FOLD_BASE_DIGITS:
        return None
    if q > 1:
        if base < 0:
            return None  # principal root is complex; keep symbolic
        rn = _nth_root_exact(base.numerator, q)
        rd = _nth_root_exact(base.denominator, q)
        if rn is None or rd is None:
            return None
        base = Fraction(rn, rd)
    if p < 0 and base == 0:
        return None
    return base**p


def pow_(base: Expr, exp: Expr) -> Expr:
    if isinstance(exp, Num):
        if exp.value == 0:
            return ONE
        if exp.value == 1:
            return base
        if isinstance(base, Num):
            folded = _fold_rational_pow(base.value, exp.value)
            if folded is not None:
                return Num(folded)
    if isinstance(base, Num):
        if base.value == 1:
            return ONE
    return Pow(base, exp)


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, (Num, Const)):
        return frozenset()
    if isinstance(e, (Add, Mul)):
        out: frozenset[str] = frozenset()
        for a in e.args:
            out |= free_vars(a)
        return out
    if isinstance(e, Pow):
        return free_vars(e.base) | free_vars(e.exp)
    raise TypeError(f"not an expression: {e!r}")


def exact_value(e: Expr) -> Fraction | None:
    """Exact rational value of the tree, or None when it has none."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, (Const, Var)):
        return None
    if isinstance(e, Add):
        total = Fraction(0)
        for a in e.args:
            v = exact_value(a)
            if v is None:
                return None
            total += v
        return total
    if isinstance(e, Mul):
        prod = Fraction(1)
        for a in e.args:
            v = exact_value(a)
            if v is None:
                return None
            prod *= v
        return prod
    if isinstance(e, Pow):
        # fractional/new-rational cases were folded at construction when exact
        b = exact_value(e.base)
        x = exact_value(e.exp)
        if b is None or x is None:
            return None
        folded = _fold_rational_pow(b, x)
        return folded
    raise TypeError(f"not an expression: {e!r}")


def eval_numeric(e: Expr, env: dict[str, complex]) -> complex:
    """Evaluate at a point; raises (ZeroDivisionError, OverflowError, ValueError)
    on singularities, which callers treat as "pick another point"."""
    if isinstance(e, Num):
        return complex(e.value)
    if isinstance(e, Const):
        return complex(_CONSTANT_VALUES[e.name])
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Add):
        return sum(eval_numeric(a, env) for a in e.args)
    if isinstance(e, Mul):
        out: complex = 1
        for a in e.args:
            out *= eval_numeric(a, env)
        return out
    if isinstance(e, Pow):
        b = eval_numeric(e.base, env)
        x = eval_numeric(e.exp, env)
        if b == 0:
            if x.imag == 0 and x.real > 0:
                return 0j
            raise ZeroDivisionError("0 raised to a non-positive power")
        # complex principal branch, consistent for negative bases
        result = cmath.exp(x * cmath.log(b))
        if not (math.isfinite(result.real) and math.isfinite(result.imag)):
            raise OverflowError("power overflow")
        return result
    raise TypeError(f"not an expression: {e!r}")


# --- rendering ---------------------------------------------------------------
#
# Output is restricted to the same surface syntax the parser accepts, so that
# render → parse round-trips.

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_POW = 3
_PREC_ATOM = 4


def _precedence(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, Mul):
        return _PREC_MUL
    if isinstance(e, Num):
        if e.value < 0:
            return _PREC_ADD  # leading minus binds like addition
        if e.value.denominator != 1:
            return _PREC_MUL  # rendered a/b
        return _PREC_ATOM
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _render_num(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _wrap(e: Expr, minimum: int) -> str:
    s = render_expr(e)
    if _precedence(e) < minimum:
        return f"({s})"
    return s


def render_expr(e: Expr) -> str:
    if isinstance(e, Num):
        return _render_num(e.value)
    if isinstance(e, Const):
        return "\\pi" if e.name == "pi" else e.name
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Pow):
        if isinstance(e.exp, Num) and e.exp.value == Fraction(1, 2):
            return "\\sqrt{" + render_expr(e.base) + "}"
        if (
            isinstance(e.exp, Num)
            and e.exp.value.numerator == 1
            and e.exp.value.denominator > 2
        ):
            return "\\sqrt[" + str(e.exp.value.denominator) + "]{" + render_expr(e.base) + "}"
        base = _wrap(e.base, _PREC_ATOM)
        return base + "^{" + render_expr(e.exp) + "}"
    if isinstance(e, Mul):
        numerator: list[str] = []
        denominator: list[str] = []
        negate = False
        for a in e.args:
            if isinstance(a, Num):
                v = a.value
                if v < 0:
                    negate = not negate
                    v = -v
                if v.numerator != 1:
                    numerator.append(str(v.numerator))
                if v.denominator != 1:
                    denominator.append(str(v.denominator))
                continue
            if isinstance(a, Pow) and isinstance(a.exp, Num) and a.exp.value < 0:
                inverted = pow_(a.base, Num(-a.exp.value))
                denominator.append(_wrap(inverted, _PREC_POW))
                continue
            numerator.append(_wrap(a, _PREC_MUL))
        head = "*".join(numerator) if numerator else "1"
        for d in denominator:
            head += "/" + d
        return ("-" if negate else "") + head
    if isinstance(e, Add):
        parts = [render_expr(e.args[0])]
        for a in e.args[1:]:
            s = render_expr(a)
            if s.startswith("-"):
                parts.append(" - " + s[1:])
            else:
                parts.append(" + " + s)
        return "".join(parts)
    raise TypeError(f"not an expression: {e!r}")
