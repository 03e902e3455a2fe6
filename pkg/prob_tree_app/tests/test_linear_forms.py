from fractions import Fraction

from django.test import SimpleTestCase as TestCase

from prob_tree_app.lib.linear_forms import (
    LinearConstraint,
    LinearProgram,
    LinExpr,
    MalformedLpError,
    MinExpr,
    collect_variables,
    render_lp,
)


def x(name: str, coefficient: Fraction | int = 1) -> LinExpr:
    return LinExpr.var(name, coefficient)


class LinExprTest(TestCase):
    """
    Checks linear expression arithmetic and rendering.
    """

    def test_arithmetic_drops_zero_terms(self) -> None:
        """
        Checks that x_B + x_C - x_C has the single term x_B.
        """
        expr = x('x_B') + x('x_C') - x('x_C')
        self.assertEqual(expr, x('x_B'))
        self.assertEqual(expr.variables, frozenset({'x_B'}))
        self.assertEqual(x('x_B').scale(0), LinExpr.zero())

    def test_evaluate(self) -> None:
        """
        Checks evaluation with missing variables read as 0.
        """
        expr = x('x_B', Fraction(1, 2)) + x('x_C', 3)
        self.assertEqual(expr.evaluate({'x_B': Fraction(1)}), Fraction(1, 2))
        self.assertEqual(expr.coefficient('x_C'), 3)

    def test_render(self) -> None:
        """
        Checks sign handling and fraction coefficients.
        """
        self.assertEqual((x('x_N') - x('x_M', Fraction(3, 10))).render(), '-3/10 x_M + x_N')
        self.assertEqual(LinExpr.zero().render(), '0')

    def test_dominates(self) -> None:
        """
        Checks coefficient-wise dominance for nonnegative variables.
        """
        self.assertTrue(x('x_B').dominates(x('x_B') + x('x_C')))
        self.assertFalse(x('x_B').dominates(x('x_B', Fraction(1, 2)) + x('x_C')))


class MinExprTest(TestCase):
    """
    Checks min-expressions.
    """

    def test_empty_min_is_rejected(self) -> None:
        """
        Checks that a min-expression needs an operand.
        """
        with self.assertRaises(MalformedLpError):
            MinExpr(frozenset())

    def test_union_and_evaluate(self) -> None:
        """
        Checks that operands merge as a set and the minimum is taken pointwise.
        """
        m = MinExpr.of(x('x_B')).union(MinExpr.of(x('x_C'), x('x_B')))
        self.assertEqual(len(m), 2)
        self.assertEqual(m.evaluate({'x_B': Fraction(2), 'x_C': Fraction(1)}), 1)
        self.assertEqual(m.render(), 'min(x_B, x_C)')


class LinearProgramTest(TestCase):
    """
    Checks linear program construction, counting and the LP dump.
    """

    def test_undeclared_variable(self) -> None:
        """
        Checks that constraints over undeclared variables are rejected.
        """
        with self.assertRaises(MalformedLpError) as ctx:
            LinearProgram(('x',), (LinearConstraint(x('y'), '<=', 1),), x('x'))
        self.assertEqual(ctx.exception.kind, 'undeclared_variable')

    def test_bad_relation_and_sense(self) -> None:
        """
        Checks unknown relations and senses.
        """
        with self.assertRaises(MalformedLpError):
            LinearConstraint(x('x'), '<', 1)
        with self.assertRaises(MalformedLpError):
            LinearProgram(('x',), (), x('x'), 'maximise')

    def test_equalities_count_twice(self) -> None:
        """
        Checks inequality_count and is_satisfied with nonnegativity.
        """
        lp = LinearProgram(
            ('x', 'y'),
            (LinearConstraint(x('x') + x('y'), '=', 1), LinearConstraint.compare(x('x'), '<=', x('y'))),
            x('x'),
        )
        self.assertEqual(lp.inequality_count, 3)
        self.assertTrue(lp.is_satisfied({'x': Fraction(1, 2), 'y': Fraction(1, 2)}))
        self.assertFalse(lp.is_satisfied({'x': Fraction(3, 4), 'y': Fraction(1, 4)}))
        self.assertFalse(lp.is_satisfied({'x': Fraction(-1), 'y': Fraction(2)}))

    def test_render_lp(self) -> None:
        """
        Checks the dump layout: objective, sorted constraints, free line and size comment.
        """
        lp = LinearProgram(
            ('x', 'z'),
            (LinearConstraint(x('x'), '<=', 1), LinearConstraint(x('z'), '>=', -1)),
            x('x') + x('z'),
            nonnegative=frozenset({'x'}),
        )
        lines = render_lp(lp).splitlines()
        self.assertEqual(lines[0], 'maximize x + z')
        self.assertEqual(lines[1], 'subject to')
        self.assertEqual(lines[2:4], ['  x <= 1', '  z >= -1'])
        self.assertEqual(lines[4], 'free z')
        self.assertEqual(lines[5], '# 2 variables, 2 inequalities')

    def test_collect_variables(self) -> None:
        """
        Checks that variables come back sorted and unique.
        """
        self.assertEqual(collect_variables([x('b') + x('a'), x('a')]), ('a', 'b'))
