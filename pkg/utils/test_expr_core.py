"""Tests for the exact expression class."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from expr_core import (
    SHIFT_MAX_DENOMINATOR,
    Expr,
    ExprOverflowError,
    ExprSyntaxError,
    ExpressionClassError,
    NonIntegerFrequencyError,
    UnsupportedFunctionError,
    differentiate,
    evaluate,
    is_zero,
    make_point,
    parse,
    substitute_affine,
)


def random_expr(rng, terms=3):
    atoms = [Expr.variable('x'), Expr.variable('y'), Expr.variable('w'),
             Expr.cos(1), Expr.sin(2), Expr.exp(-1), Expr.exp(2), Expr.constant(1)]
    out = Expr.zero()
    for _ in range(terms):
        term = Expr.constant(Fraction(rng.randint(-5, 5), rng.randint(1, 4)))
        for _ in range(rng.randint(0, 2)):
            term = term * rng.choice(atoms)
        out = out + term
    return out


class TestParsing:

    def test_polynomial_prints_canonically(self):
        assert str(parse('w^2 + 3*x*y')) == 'w^2 + 3*x*y'

    def test_rational_coefficients(self):
        e = parse('1/2*cos(2*w) - x')
        assert str(e) == '1/2*cos(2*w) - x'
        assert e.terms[next(iter(e.terms))] == Fraction(1, 2)

    def test_decimal_literals_are_exact(self):
        assert parse('0.25*x') == parse('1/4*x')

    def test_power_alias_and_unicode_minus(self):
        assert parse('x**2') == parse('x^2')
        assert parse('−w') == parse('-w')

    def test_zero_prints_as_zero(self):
        assert str(parse('x - x')) == '0'
        assert parse('x - x').is_zero()

    def test_negative_frequencies_normalize(self):
        assert parse('sin(-2*w)') == parse('-sin(2*w)')
        assert parse('cos(-w)') == parse('cos(w)')
        assert parse('cos(0*w)') == Expr.constant(1)

    def test_round_trip(self, rng):
        for _ in range(50):
            e = random_expr(rng)
            assert parse(str(e)) == e

    @pytest.mark.parametrize('text', ['x +', '(x', 'x/y', 'x^-1', 'x^1.5', '', 'z', '2 3'])
    def test_syntax_errors(self, text):
        with pytest.raises(ExprSyntaxError):
            parse(text)

    def test_syntax_error_reports_position(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse('x + * y')
        assert info.value.position == 4

    @pytest.mark.parametrize('text', ['tan(w)', 'log(w)', 'cos(x)', 'sin(w^2)', 'exp(w + 1)'])
    def test_unsupported_functions(self, text):
        with pytest.raises(UnsupportedFunctionError):
            parse(text)

    def test_non_integer_frequency(self):
        with pytest.raises(NonIntegerFrequencyError):
            parse('cos(w/2)')


class TestArithmetic:

    def test_pythagorean_identity_is_exact(self):
        e = parse('sin(w)^2 + cos(w)^2')
        assert e == Expr.constant(1)
        assert evaluate(e, (0.3, 0.1, 1.234)) == 1.0

    def test_hyperbolic_identity(self):
        assert parse('cosh(w)^2 - sinh(w)^2') == Expr.constant(1)

    def test_product_to_sum(self):
        assert parse('sin(w)*cos(w)') == parse('1/2*sin(2*w)')
        assert parse('cos(w)*cos(3*w)') == parse('1/2*cos(2*w) + 1/2*cos(4*w)')
        assert parse('sin(w)*sin(w)') == parse('1/2 - 1/2*cos(2*w)')

    def test_exponential_frequencies_add(self):
        assert parse('exp(w)*exp(-w)') == Expr.constant(1)
        assert parse('exp(2*w)*exp(w)') == parse('exp(3*w)')

    def test_ring_laws(self, rng):
        for _ in range(20):
            a, b, c = random_expr(rng), random_expr(rng), random_expr(rng)
            assert a * (b + c) == a * b + a * c
            assert (a * b) * c == a * (b * c)
            assert a - a == Expr.zero()

    @pytest.mark.slow
    def test_ring_laws_many(self, rng):
        for _ in range(10_000):
            a, b, c = random_expr(rng), random_expr(rng), random_expr(rng)
            assert a * (b + c) == a * b + a * c
            assert (a * b) * c == a * (b * c)
            assert a * b == b * a

    def test_evaluation_respects_products(self, rng):
        for _ in range(1000):
            a, b = random_expr(rng), random_expr(rng)
            p = (rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-2, 2))
            expected = evaluate(a, p) * evaluate(b, p)
            assert evaluate(a * b, p) == pytest.approx(expected, rel=1e-9, abs=1e-9)
            assert evaluate(a + b, p) == pytest.approx(evaluate(a, p) + evaluate(b, p), rel=1e-9, abs=1e-9)

    def test_constants_hash_like_numbers(self):
        assert Expr.constant(2) == 2
        assert hash(Expr.constant(2)) == hash(2)
        assert hash(Expr.constant(Fraction(1, 3))) == hash(Fraction(1, 3))
        assert hash(Expr.zero()) == hash(0)
        assert len({Expr.constant(2), 2, parse('4/2')}) == 1
        assert {parse('x'): 1}[parse('x')] == 1

    def test_floats_are_rejected(self):
        with pytest.raises(TypeError):
            Expr.constant(0.5)

    def test_is_zero(self):
        assert is_zero(parse('x*cos(w) - cos(w)*x'))
        assert not is_zero(parse('x'))


class TestDifferentiation:

    def test_trig(self):
        assert differentiate(parse('x*sin(2*w)'), 'w') == parse('2*x*cos(2*w)')
        assert differentiate(parse('cos(3*w)'), 'w') == parse('-3*sin(3*w)')

    def test_exp(self):
        assert differentiate(parse('exp(-w)'), 'w') == parse('-exp(-w)')

    def test_polynomial(self):
        assert differentiate(parse('x^3*y + w'), 'x') == parse('3*x^2*y')
        assert differentiate(parse('x^3*y + w'), 'y') == parse('x^3')

    def test_product_rule(self, rng):
        for _ in range(20):
            a, b = random_expr(rng), random_expr(rng)
            for var in ('x', 'y', 'w'):
                assert differentiate(a * b, var) == differentiate(a, var) * b + a * differentiate(b, var)

    def test_matches_finite_differences(self, rng):
        e = parse('x^2*cos(2*w) + y*exp(-w) + w^3*sin(w)')
        h = 1e-6
        for _ in range(5):
            p = [rng.uniform(-1, 1) for _ in range(3)]
            for i, var in enumerate('xyw'):
                up, down = list(p), list(p)
                up[i] += h
                down[i] -= h
                numeric = (evaluate(e, up) - evaluate(e, down)) / (2 * h)
                assert evaluate(differentiate(e, var), p) == pytest.approx(numeric, abs=1e-6)


class TestEvaluation:

    def test_overflow(self):
        with pytest.raises(ExprOverflowError):
            evaluate(parse('exp(2*w)'), (0.0, 0.0, 1000.0))

    def test_vectorized_matches_scalar(self, np_rng):
        e = parse('x*y*cos(w) - 1/3*w^2*exp(w) + sin(2*w)')
        pts = np_rng.uniform(-2, 2, size=(10, 3))
        values = e.evaluate_array(pts[:, 0], pts[:, 1], pts[:, 2])
        expected = [evaluate(e, p) for p in pts]
        np.testing.assert_allclose(values, expected, rtol=1e-14, atol=1e-14)

    def test_points_must_be_finite(self):
        with pytest.raises(ValueError):
            make_point(0.0, math.inf, 0.0)


class TestSubstitution:

    def test_polynomial_substitution(self):
        rows = [((1, -2, 0), 0), ((0, 1, 0), 0), ((0, 0, 1), 0)]
        assert substitute_affine(parse('x^2 + y'), rows) == parse('x^2 - 4*x*y + 4*y^2 + y')

    def test_reflection_of_w(self):
        rows = [((1, 0, 0), 0), ((0, 1, 0), 0), ((0, 0, -1), 0)]
        assert substitute_affine(parse('cos(w) + sin(2*w) + exp(w)'), rows) == \
            parse('cos(w) - sin(2*w) + exp(-w)')

    def test_shift_of_w(self):
        rows = [((1, 0, 0), 0), ((0, 1, 0), 0), ((0, 0, 1), Fraction(1, 2))]
        e = substitute_affine(parse('cos(w) + exp(-w)'), rows)
        assert evaluate(e, (0.0, 0.0, 0.3)) == pytest.approx(math.cos(0.8) + math.exp(-0.8), abs=1e-3)

    @pytest.mark.parametrize('t', [Fraction(1, 2), Fraction(3), Fraction(-2), Fraction(-10)])
    def test_shift_identities_stay_exact(self, t):
        rows = [((1, 0, 0), 0), ((0, 1, 0), 0), ((0, 0, 1), t)]
        c = substitute_affine(parse('cos(w)'), rows)
        s = substitute_affine(parse('sin(w)'), rows)
        assert c * c + s * s == Expr.constant(1)
        assert substitute_affine(parse('cos(2*w)'), rows) == c * c * 2 - 1
        assert substitute_affine(parse('exp(w)'), rows) * substitute_affine(parse('exp(-w)'), rows) == Expr.constant(1)

    def test_shift_constants_have_small_denominators(self):
        rows = [((1, 0, 0), 0), ((0, 1, 0), 0), ((0, 0, 1), Fraction(3, 2))]
        e = substitute_affine(parse('cos(w) + sin(w) + exp(w)'), rows)
        assert max(c.denominator for c in e.terms.values()) <= 2 * SHIFT_MAX_DENOMINATOR ** 2

    def test_mixed_w_row_leaves_the_class(self):
        rows = [((1, 0, 0), 0), ((0, 1, 0), 0), ((1, 0, 1), 0)]
        with pytest.raises(ExpressionClassError):
            substitute_affine(parse('cos(w)'), rows)
        assert substitute_affine(parse('w^2'), rows) == parse('x^2 + 2*x*w + w^2')

    def test_fractional_w_scale(self):
        rows = [((1, 0, 0), 0), ((0, 1, 0), 0), ((0, 0, Fraction(1, 2)), 0)]
        with pytest.raises(NonIntegerFrequencyError):
            substitute_affine(parse('sin(w)'), rows)
