from fractions import Fraction

from django.test import SimpleTestCase as TestCase

from prob_tree_app.lib.linear_forms import LinearConstraint, LinearProgram, LinExpr
from prob_tree_app.lib.simplex import solve_lp


def x(name: str, coefficient: Fraction | int = 1) -> LinExpr:
    return LinExpr.var(name, coefficient)


def bounded_lp(extra: tuple[LinearConstraint, ...] = ()) -> LinearProgram:
    """
    max x s.t. x <= x_M, 1 <= x_M <= 1, plus `extra`.
    """
    constraints = (
        LinearConstraint.compare(x('x'), '<=', x('x_M')),
        LinearConstraint(x('x_M'), '>=', 1),
        LinearConstraint(x('x_M'), '<=', 1),
    ) + extra
    variables = ('x', 'x_M') + tuple(sorted({name for c in extra for name in c.expr.variables} - {'x', 'x_M'}))
    return LinearProgram(variables, constraints, x('x'))


class ExactSimplexTest(TestCase):
    """
    Checks the exact two-phase simplex.
    """

    def test_simple_bound(self) -> None:
        """
        Checks that max x s.t. x <= x_M, x_M = 1 is 1.
        """
        outcome = solve_lp(bounded_lp())
        self.assertTrue(outcome.is_optimal)
        self.assertEqual(outcome.value, 1)
        self.assertFalse(outcome.approximate)

    def test_chained_bound(self) -> None:
        """
        Checks that adding 3/10 x_M <= x_N <= 2/5 x_M and x <= x_N gives exactly 2/5.
        """
        extra = (
            LinearConstraint.compare(x('x_N'), '>=', x('x_M', Fraction(3, 10))),
            LinearConstraint.compare(x('x_N'), '<=', x('x_M', Fraction(2, 5))),
            LinearConstraint.compare(x('x'), '<=', x('x_N')),
        )
        outcome = solve_lp(bounded_lp(extra))
        self.assertEqual(outcome.value, Fraction(2, 5))
        self.assertIsInstance(outcome.value, Fraction)
        assert outcome.point is not None
        self.assertEqual(outcome.point['x'], Fraction(2, 5))

    def test_infeasible(self) -> None:
        """
        Checks that x_M >= 1 and x_M <= 0 is infeasible.
        """
        lp = LinearProgram(
            ('x_M',),
            (LinearConstraint(x('x_M'), '>=', 1), LinearConstraint(x('x_M'), '<=', 0)),
            x('x_M'),
        )
        self.assertEqual(solve_lp(lp).status, 'infeasible')

    def test_unbounded(self) -> None:
        """
        Checks that max x with only x >= 1 is unbounded.
        """
        lp = LinearProgram(('x',), (LinearConstraint(x('x'), '>=', 1),), x('x'))
        self.assertEqual(solve_lp(lp).status, 'unbounded')

    def test_minimize_with_equality_and_free_variable(self) -> None:
        """
        Checks minimization over an equality with one free variable.
        """
        lp = LinearProgram(
            ('y', 'z'),
            (LinearConstraint(x('y') + x('z'), '=', 1), LinearConstraint(x('z'), '>=', -2)),
            x('y'),
            sense='minimize',
            nonnegative=frozenset({'y'}),
        )
        outcome = solve_lp(lp)
        self.assertEqual(outcome.value, 0)
        assert outcome.point is not None
        self.assertEqual(outcome.point['z'], 1)

    def test_degenerate_rows_terminate(self) -> None:
        """
        Checks that repeated redundant equalities still solve.
        """
        row = LinearConstraint(x('a') + x('b'), '=', 1)
        lp = LinearProgram(('a', 'b'), (row, row, LinearConstraint(x('a'), '<=', Fraction(1, 3))), x('a') - x('b'))
        self.assertEqual(solve_lp(lp).value, Fraction(-1, 3))


class FloatSimplexTest(TestCase):
    """
    Checks the HiGHS path.
    """

    def test_float_path_is_marked_approximate(self) -> None:
        """
        Checks that the float path agrees with the exact answer up to tolerance and is flagged.
        """
        extra = (
            LinearConstraint.compare(x('x_N'), '<=', x('x_M', Fraction(2, 5))),
            LinearConstraint.compare(x('x'), '<=', x('x_N')),
        )
        outcome = solve_lp(bounded_lp(extra), exact=False)
        self.assertTrue(outcome.approximate)
        assert outcome.value is not None
        self.assertAlmostEqual(float(outcome.value), 0.4, places=7)

    def test_float_infeasible(self) -> None:
        """
        Checks that HiGHS infeasibility maps to status infeasible.
        """
        lp = LinearProgram(
            ('x_M',),
            (LinearConstraint(x('x_M'), '>=', 1), LinearConstraint(x('x_M'), '<=', 0)),
            x('x_M'),
        )
        self.assertEqual(solve_lp(lp, exact=False).status, 'infeasible')
