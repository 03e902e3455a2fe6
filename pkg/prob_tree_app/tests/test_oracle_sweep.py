import os
import unittest

from django.test import SimpleTestCase as TestCase
from django.test.utils import override_settings

from prob_tree_app.lib.sweep_helpers import run_sweep
from prob_tree_app.lib.tree_analysis import PreconditionError


class OracleSweepTest(TestCase):
    """
    Checks the planner against the oracle on seeded random trees.
    """

    def test_small_sweep(self) -> None:
        """
        Checks that a short sweep over small trees finds no mismatch.
        """
        report = run_sweep(seed=0, trees=16, max_n=5)
        self.assertEqual(report.mismatches, [])
        self.assertEqual(report.trees, 16)
        self.assertGreaterEqual(report.queries, 16)

    @unittest.skipUnless(os.environ.get('PROBTREE_SLOW_TESTS') == '1', 'set PROBTREE_SLOW_TESTS=1 for the full sweep')
    def test_full_sweep(self) -> None:
        """
        Checks 200 trees of up to eight nodes.
        """
        report = run_sweep(seed=0, trees=200, max_n=8)
        self.assertTrue(report.ok, report.summary())

    def test_world_cap(self) -> None:
        """
        Checks that max_n above the sweep cap is refused.
        """
        with override_settings(PROBTREE_SWEEP_WORLD_CAP=4):
            with self.assertRaises(PreconditionError) as ctx:
                run_sweep(seed=0, trees=1, max_n=5)
        self.assertEqual(ctx.exception.kind, 'world_cap')
