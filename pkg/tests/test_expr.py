"""Unit tests for the symbolic expression kernel."""
from __future__ import annotations

import math
from fractions import Fraction

import pytest

from stepvote import expr as ex


def frac(n: int, d: int = 1) -> ex.Num:
    return ex.Num(Fraction(n, d))


class TestConstructors:
    def test_add_folds_numbers(self) -> None:
        assert ex.add(frac(1), frac(2)) == frac(3)

    def test_add_is_order_insensitive(self) -> None:
        x, one = ex.Var("x"), frac(1)
        assert ex.add(x, one) == ex.add(one, x)

    def test_add_flattens_nested_sums(self) -> None:
        x, y, z = ex.Var("x"), ex.Var("y"), ex.Var("z")
        assert ex.add(ex.add(x, y), z) == ex.add(x, ex.add(y, z))

    def test_add_drops_zero_terms(self) -> None:
        x = ex.Var("x")
        assert ex.add(x, frac(0)) == x

    def test_mul_is_order_insensitive(self) -> None:
        x = ex.Var("x")
        assert ex.mul(x, frac(2)) == ex.mul(frac(2), x)

    def test_mul_by_zero_collapses(self) -> None:
        assert ex.mul(ex.Var("x"), frac(0)) == frac(0)

    def test_mul_drops_unit_factor(self) -> None:
        x = ex.Var("x")
        assert ex.mul(x, frac(1)) == x

    def test_empty_sum_and_product(self) -> None:
        assert ex.add() == frac(0)
        assert ex.mul() == frac(1)

    def test_pow_identities(self) -> None:
        x = ex.Var("x")
        assert ex.pow_(x, frac(1)) == x
        assert ex.pow_(x, frac(0)) == frac(1)
        assert ex.pow_(frac(1), x) == frac(1)

    def test_pow_folds_integer_powers(self) -> None:
        assert ex.pow_(frac(2), frac(10)) == frac(1024)
        assert ex.pow_(frac(2), frac(-2)) == frac(1, 4)

    def test_pow_folds_perfect_roots(self) -> None:
        assert ex.pow_(frac(4), ex.Num(Fraction(1, 2))) == frac(2)
        assert ex.pow_(frac(8), ex.Num(Fraction(1, 3))) == frac(2)
        assert ex.pow_(frac(9, 4), ex.Num(Fraction(1, 2))) == frac(3, 2)

    def test_pow_keeps_irrational_roots_symbolic(self) -> None:
        root2 = ex.pow_(frac(2), ex.Num(Fraction(1, 2)))
        assert isinstance(root2, ex.Pow)

    def test_pow_keeps_negative_fractional_base_symbolic(self) -> None:
        # (-8)^(1/3) is NOT folded to -2: numeric evaluation uses the complex
        # principal branch, and folding would disagree with it
        e = ex.pow_(frac(-8), ex.Num(Fraction(1, 3)))
        assert isinstance(e, ex.Pow)
        value = ex.eval_numeric(e, {})
        assert value.imag != 0

    def test_fold_guard_keeps_huge_powers_symbolic(self) -> None:
        e = ex.pow_(frac(10), frac(1000))
        assert isinstance(e, ex.Pow)

    def test_unknown_constant_rejected(self) -> None:
        with pytest.raises(ValueError):
            ex.Const("tau")


class TestEvaluation:
    def test_exact_value_of_folded_tree(self) -> None:
        e = ex.add(ex.mul(frac(2), frac(3)), frac(1, 2))
        assert ex.exact_value(e) == Fraction(13, 2)

    def test_exact_value_none_for_irrational(self) -> None:
        assert ex.exact_value(ex.pow_(frac(2), ex.Num(Fraction(1, 2)))) is None
        assert ex.exact_value(ex.Const("pi")) is None

    def test_numeric_constants(self) -> None:
        assert ex.eval_numeric(ex.Const("pi"), {}) == pytest.approx(math.pi)
        assert ex.eval_numeric(ex.Const("e"), {}) == pytest.approx(math.e)
        assert ex.eval_numeric(ex.Const("i"), {}) == 1j

    def test_numeric_env_lookup(self) -> None:
        e = ex.add(ex.Var("x"), frac(1))
        assert ex.eval_numeric(e, {"x": 2.0}) == pytest.approx(3.0)

    def test_numeric_sqrt_of_negative_is_complex(self) -> None:
        e = ex.pow_(frac(-4), ex.Num(Fraction(1, 2)))
        assert ex.eval_numeric(e, {}) == pytest.approx(2j)

    def test_numeric_zero_to_negative_power_raises(self) -> None:
        e = ex.Pow(frac(0), frac(-1))
        with pytest.raises(ZeroDivisionError):
            ex.eval_numeric(e, {})

    def test_numeric_overflow_raises(self) -> None:
        e = ex.Pow(frac(10), frac(10_000))
        with pytest.raises(OverflowError):
            ex.eval_numeric(e, {})

    def test_free_vars(self) -> None:
        e = ex.add(ex.mul(ex.Var("x"), ex.Var("y")), ex.Const("pi"))
        assert ex.free_vars(e) == frozenset({"x", "y"})
        assert ex.free_vars(frac(3)) == frozenset()


class TestRendering:
    @pytest.mark.parametrize(
        "tree, rendered",
        [
            (ex.pow_(frac(2), ex.Num(Fraction(1, 2))), r"\sqrt{2}"),
            (ex.pow_(frac(2), ex.Num(Fraction(1, 3))), r"\sqrt[3]{2}"),
            (ex.mul(frac(-1), ex.Var("x")), "-x"),
            (ex.Const("pi"), r"\pi"),
            (ex.Const("i"), "i"),
            (frac(-3, 4), "-3/4"),
        ],
    )
    def test_specific_renders(self, tree: ex.Expr, rendered: str) -> None:
        assert ex.render_expr(tree) == rendered

    @pytest.mark.parametrize(
        "tree",
        [
            ex.add(ex.Var("x"), frac(1)),
            ex.mul(frac(2), ex.pow_(frac(3), ex.Num(Fraction(1, 2)))),
            ex.mul(ex.Var("x"), ex.pow_(ex.Var("y"), frac(-1))),
            ex.pow_(ex.add(ex.Var("x"), frac(1)), frac(2)),
            ex.add(ex.mul(frac(1, 2), ex.Const("pi")), ex.Const("e")),
            ex.mul(frac(-2), ex.Var("x"), ex.Const("i")),
            ex.pow_(ex.Var("x"), ex.add(ex.Var("y"), frac(1))),
        ],
    )
    def test_render_parse_round_trip(self, tree: ex.Expr) -> None:
        from stepvote.answers import parse_answer

        form = parse_answer(ex.render_expr(tree))
        assert form.tree == tree
