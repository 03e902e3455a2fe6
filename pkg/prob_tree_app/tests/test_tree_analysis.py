from fractions import Fraction

from django.test import SimpleTestCase as TestCase

from prob_tree_app.lib.model_core import ConditionalConstraint, ConjunctiveEvent, KnowledgeBase
from prob_tree_app.lib.oracle import Graph, encode_3col
from prob_tree_app.lib.random_trees import chain_tree, tree_from_edges
from prob_tree_app.lib.tree_analysis import (
    PreconditionError,
    Query,
    QueryKind,
    QueryValidationError,
    TreeValidationError,
    implies_all,
    implies_exists,
    orient,
    reduce_to_complete,
    split_at_articulation,
    validate_query,
    validate_tree,
)
from prob_tree_app.tests.fixture_trees import kb_l

ONE = Fraction(1)


def edge_constraints(first: str, second: str, forward: str, backward: str) -> list[ConditionalConstraint]:
    a, b = ConjunctiveEvent.of(first), ConjunctiveEvent.of(second)
    return [ConditionalConstraint(b, a, forward, forward), ConditionalConstraint(a, b, backward, backward)]


def star(x_interval: tuple[Fraction, Fraction], y_interval: tuple[Fraction, Fraction]):
    intervals = {
        ('B', 'X'): x_interval,
        ('X', 'B'): (Fraction(1, 2), Fraction(1, 2)),
        ('B', 'Y'): y_interval,
        ('Y', 'B'): (Fraction(1, 2), Fraction(1, 2)),
    }
    return tree_from_edges([('B', 'X'), ('B', 'Y')], intervals)


class ValidateTreeTest(TestCase):
    """
    Checks validate_tree() accepts trees and rejects everything else without repair.
    """

    def test_minimal_chain_is_valid(self) -> None:
        """
        Checks that M-N-O with four positive constraints is a tree.
        """
        kb = KnowledgeBase.from_constraints(edge_constraints('M', 'N', '0.3', '0.8') + edge_constraints('N', 'O', '0.5', '1'))
        t = validate_tree(kb)
        self.assertEqual(t.size, 3)
        self.assertEqual(t.leaves(), frozenset({'M', 'O'}))
        self.assertEqual(t.interval('M', 'N'), (Fraction(3, 10), Fraction(3, 10)))
        self.assertTrue(t.is_exact)

    def test_equal_intervals_are_shared(self) -> None:
        """
        Checks that every edge of a chain with one repeated interval holds the same tuple.
        """
        t = chain_tree(4)
        self.assertIs(t.interval('A', 'B'), t.interval('C', 'B'))
        self.assertIs(t.interval('B', 'C'), t.interval('D', 'C'))
        self.assertEqual(t.interval('A', 'B'), (Fraction(3, 4), Fraction(3, 4)))

    def test_missing_reverse_constraint(self) -> None:
        """
        Checks that an edge without its reverse constraint raises kind missing_reverse.
        """
        constraints = edge_constraints('M', 'N', '0.3', '0.8')[:1]
        with self.assertRaises(TreeValidationError) as ctx:
            validate_tree(KnowledgeBase.from_constraints(constraints))
        self.assertEqual(ctx.exception.kind, 'missing_reverse')

    def test_zero_lower_bound(self) -> None:
        """
        Checks that a constraint with lower bound 0 raises kind zero_lower.
        """
        with self.assertRaises(TreeValidationError) as ctx:
            validate_tree(KnowledgeBase.from_constraints(edge_constraints('M', 'N', '0', '0.8')))
        self.assertEqual(ctx.exception.kind, 'zero_lower')

    def test_cycle_and_disconnection(self) -> None:
        """
        Checks that a triangle raises kind cycle and two separate edges raise kind not_connected.
        """
        triangle = edge_constraints('A', 'B', '0.5', '0.5') + edge_constraints('B', 'C', '0.5', '0.5')
        triangle += edge_constraints('A', 'C', '0.5', '0.5')
        with self.assertRaises(TreeValidationError) as ctx:
            validate_tree(KnowledgeBase.from_constraints(triangle))
        self.assertEqual(ctx.exception.kind, 'cycle')
        apart = edge_constraints('A', 'B', '0.5', '0.5') + edge_constraints('C', 'D', '0.5', '0.5')
        with self.assertRaises(TreeValidationError) as ctx:
            validate_tree(KnowledgeBase.from_constraints(apart))
        self.assertEqual(ctx.exception.kind, 'not_connected')

    def test_three_coloring_encoding_is_not_a_tree(self) -> None:
        """
        Checks that the 3-colorability knowledge base of a triangle fails tree validation.
        """
        kb = encode_3col(Graph.of('abc', [('a', 'b'), ('b', 'c'), ('a', 'c')]))
        with self.assertRaises(TreeValidationError):
            validate_tree(kb)

    def test_single_node_tree(self) -> None:
        """
        Checks that one isolated event is a valid tree.
        """
        t = validate_tree(KnowledgeBase(frozenset({'B'})))
        self.assertEqual(t.leaves(), frozenset())
        self.assertEqual(dict(orient(t, 'B').strata), {'B': 0})


class QueryClassificationTest(TestCase):
    """
    Checks validate_query() on the nine-node fixture.
    """

    def test_premise_restricted(self) -> None:
        """
        Checks that (STU|M) is premise-restricted and incomplete, and (QRSTU|M) complete.
        """
        t = kb_l()
        classification = validate_query(t, Query.of('STU', 'M'))
        self.assertEqual(classification.kind, QueryKind.PREMISE_RESTRICTED)
        self.assertFalse(classification.complete)
        self.assertTrue(validate_query(t, Query.of('QRSTU', 'M')).complete)

    def test_strongly_conclusion_restricted(self) -> None:
        """
        Checks that (O|QRSTU) is strongly conclusion-restricted.
        """
        classification = validate_query(kb_l(), Query.of('O', 'QRSTU'))
        self.assertEqual(classification.kind, QueryKind.STRONGLY_CONCLUSION_RESTRICTED)

    def test_general(self) -> None:
        """
        Checks that (STU|MQR) is a general complete query.
        """
        classification = validate_query(kb_l(), Query.of('STU', 'MQR'))
        self.assertEqual(classification.kind, QueryKind.GENERAL)
        self.assertTrue(classification.complete)

    def test_no_common_node(self) -> None:
        """
        Checks that (MS|QU) is rejected with kind no_common_node.
        """
        with self.assertRaises(QueryValidationError) as ctx:
            validate_query(kb_l(), Query.of('MS', 'QU'))
        self.assertEqual(ctx.exception.kind, 'no_common_node')

    def test_unknown_and_overlapping_events(self) -> None:
        """
        Checks unknown_event, overlap and top_not_allowed rejections.
        """
        t = kb_l()
        for q, kind in (
            (Query.of('Z', 'M'), 'unknown_event'),
            (Query.of('MN', 'M'), 'overlap'),
            (Query(ConjunctiveEvent.of('M'), ConjunctiveEvent.top()), 'top_not_allowed'),
        ):
            with self.subTest(kind=kind):
                with self.assertRaises(QueryValidationError) as ctx:
                    validate_query(t, q)
                self.assertEqual(ctx.exception.kind, kind)


class OrientTest(TestCase):
    """
    Checks orient() and its strata.
    """

    def test_chain_orientation(self) -> None:
        """
        Checks that a three-node chain rooted at its first node has strata 2, 1, 0.
        """
        t = chain_tree(3)
        ot = orient(t, 'A')
        self.assertEqual(dict(ot.strata), {'A': 2, 'B': 1, 'C': 0})
        self.assertEqual(ot.children['A'], ('B',))
        self.assertEqual(ot.order, ('C', 'B', 'A'))
        self.assertEqual(ot.edges(), [('A', 'B'), ('B', 'C')])

    def test_fixture_strata(self) -> None:
        """
        Checks the strata of the nine-node fixture rooted at M.
        """
        ot = orient(kb_l(), 'M')
        expected = {'S': 0, 'T': 0, 'U': 0, 'P': 1, 'Q': 1, 'R': 1, 'O': 2, 'N': 3, 'M': 4}
        self.assertEqual(dict(ot.strata), expected)
        self.assertEqual(ot.covered('O').atoms, frozenset('QRSTU'))
        self.assertEqual(ot.up('P').atoms, frozenset('STU'))
        self.assertEqual(len(ot.edges()), 8)

    def test_unknown_root(self) -> None:
        """
        Checks that orienting at an unknown event raises PreconditionError.
        """
        with self.assertRaises(PreconditionError):
            orient(kb_l(), 'Z')


class ImplicationTest(TestCase):
    """
    Checks the certain-implication relations.
    """

    def test_implies_exists(self) -> None:
        """
        Checks the empty path, a certain edge and an uncertain edge.
        """
        certain = tree_from_edges([('M', 'N')], {('M', 'N'): (ONE, ONE), ('N', 'M'): (Fraction(1, 2), Fraction(1, 2))})
        uncertain = tree_from_edges(
            [('M', 'N')], {('M', 'N'): (Fraction(9, 10), ONE), ('N', 'M'): (Fraction(1, 2), Fraction(1, 2))}
        )
        self.assertTrue(implies_exists(certain, ConjunctiveEvent.of('N'), 'N'))
        self.assertTrue(implies_exists(certain, ConjunctiveEvent.of('M'), 'N'))
        self.assertFalse(implies_exists(certain, ConjunctiveEvent.of('N'), 'M'))
        self.assertFalse(implies_exists(uncertain, ConjunctiveEvent.of('M'), 'N'))

    def test_implies_all(self) -> None:
        """
        Checks that B => XY needs every path to be certain.
        """
        self.assertTrue(implies_all(star((ONE, ONE), (ONE, ONE)), 'B', ConjunctiveEvent.of('B')))
        self.assertFalse(implies_all(star((ONE, ONE), (Fraction(9, 10), ONE)), 'B', ConjunctiveEvent.of('X', 'Y')))
        self.assertTrue(implies_all(star((ONE, ONE), (ONE, ONE)), 'B', ConjunctiveEvent.of('X', 'Y')))


class ReductionTest(TestCase):
    """
    Checks reduce_to_complete() and split_at_articulation().
    """

    def test_prune_and_synonym(self) -> None:
        """
        Checks that (O|QRSTU) drops leaf M and node N, and gives O a synonym leaf.
        """
        reduction = reduce_to_complete(kb_l(), Query.of('O', 'QRSTU'))
        self.assertTrue(reduction.changed)
        self.assertNotIn('M', reduction.tree.kb.events)
        self.assertNotIn('N', reduction.tree.kb.events)
        self.assertEqual(reduction.query.conclusion.atoms, frozenset({'O__syn'}))
        self.assertEqual(reduction.tree.interval('O', 'O__syn'), (ONE, ONE))
        self.assertEqual(reduction.tree.interval('O__syn', 'O'), (ONE, ONE))
        self.assertTrue(validate_query(reduction.tree, reduction.query).complete)

    def test_complete_query_is_unchanged(self) -> None:
        """
        Checks that a complete query passes through with no notes.
        """
        t = kb_l()
        q = Query.of('QRSTU', 'M')
        reduction = reduce_to_complete(t, q)
        self.assertFalse(reduction.changed)
        self.assertIs(reduction.tree, t)
        self.assertEqual(reduction.query, q)

    def test_chain_end_to_end_is_complete(self) -> None:
        """
        Checks that (C|A) on a three-node chain needs no reduction.
        """
        self.assertFalse(reduce_to_complete(chain_tree(3), Query.of('C', 'A')).changed)

    def test_split_at_o(self) -> None:
        """
        Checks that (STU|MQR) splits at O into {M,N,O,Q,R} and {O,P,S,T,U}.
        """
        split = split_at_articulation(kb_l(), Query.of('STU', 'MQR'))
        self.assertEqual(split.node, 'O')
        self.assertEqual(split.premise_side.kb.events, frozenset('MNOQR'))
        self.assertEqual(split.conclusion_side.kb.events, frozenset('OPSTU'))

    def test_split_refuses_premise_restricted(self) -> None:
        """
        Checks that a premise-restricted query raises PreconditionError.
        """
        with self.assertRaises(PreconditionError):
            split_at_articulation(kb_l(), Query.of('QRSTU', 'M'))
