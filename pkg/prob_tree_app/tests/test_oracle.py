import itertools
import random
from fractions import Fraction

from django.test import SimpleTestCase as TestCase
from django.test.utils import override_settings

from prob_tree_app.lib.kb_documents import fixture_path, load_document, parse_graph
from prob_tree_app.lib.model_core import (
    ConditionalConstraint,
    ConjunctiveEvent,
    Interpretation,
    KnowledgeBase,
    check_kb,
    prob_of,
)
from prob_tree_app.lib.oracle import (
    Graph,
    ModelConstructionError,
    WorldCapError,
    build_classical_lp,
    classical_inequality_count,
    construct_positive_model,
    encode_3col,
    oracle_answer,
    rescale_model,
    satisfiable,
)
from prob_tree_app.lib.query_planner import answer
from prob_tree_app.lib.random_trees import random_tree
from prob_tree_app.lib.tree_analysis import Query
from prob_tree_app.tests.fixture_trees import fixture_document


def three_colorable(g: Graph) -> bool:
    vertices = sorted(g.vertices)
    for coloring in itertools.product(range(3), repeat=len(vertices)):
        colors = dict(zip(vertices, coloring))
        if all(colors[a] != colors[b] for a, b in g.sorted_edges()):
            return True
    return False


class OracleAnswerTest(TestCase):
    """
    Checks tight answers from the classical LP over all worlds.
    """

    def test_tweety(self) -> None:
        """
        Checks (ostrich|*) on the bird knowledge base is exactly [18/25, 1].
        """
        kb = fixture_document('tweety.kb').knowledge_base()
        result = oracle_answer(kb, Query(ConjunctiveEvent.of('ostrich'), ConjunctiveEvent.top()))
        self.assertEqual((result.lower, result.upper), (Fraction(18, 25), Fraction(1)))
        self.assertEqual(result.source, 'oracle')

    def test_agrees_with_tree_engine(self) -> None:
        """
        Checks that the oracle reproduces the exact engine on the nine-node fixture.
        """
        document = fixture_document('kb_l.cct')
        q = Query.of('QRSTU', 'M')
        oracle = oracle_answer(document.knowledge_base(), q)
        planner = answer(document.tree(), q)
        self.assertEqual((oracle.lower, oracle.upper), (planner.lower, planner.upper))

    def test_classical_lp_size(self) -> None:
        """
        Checks 2 + 2 * 16 inequalities and 2^9 variables for the fixture.
        """
        kb = fixture_document('kb_l.cct').knowledge_base()
        lp = build_classical_lp(kb, Query.of('QRSTU', 'M'), 'max')
        self.assertEqual(classical_inequality_count(kb), 34)
        self.assertEqual(lp.inequality_count, 34)
        self.assertEqual(len(lp.variables), 512)

    def test_empty_consequence(self) -> None:
        """
        Checks that a premise forced to probability 0 yields the empty answer [1, 0].
        """
        kb = KnowledgeBase.from_constraints(
            [ConditionalConstraint(ConjunctiveEvent.of('B'), ConjunctiveEvent.top(), 0, 0)], extra_events=('C',)
        )
        result = oracle_answer(kb, Query.of('C', 'B'))
        self.assertTrue(result.empty_consequence)
        self.assertEqual((result.lower, result.upper), (1, 0))

    def test_float_path_is_marked(self) -> None:
        """
        Checks that wide world spaces fall back to floating point and say so.
        """
        kb = fixture_document('tweety.kb').knowledge_base()
        with override_settings(PROBTREE_EXACT_COLUMN_LIMIT=2):
            result = oracle_answer(kb, Query(ConjunctiveEvent.of('ostrich'), ConjunctiveEvent.top()))
        self.assertAlmostEqual(float(result.lower), 0.72, places=6)
        self.assertIn('approximate', result.trace[-1])

    def test_world_cap(self) -> None:
        """
        Checks that more events than the cap raises WorldCapError.
        """
        with override_settings(PROBTREE_WORLD_CAP=3):
            with self.assertRaises(WorldCapError) as ctx:
                oracle_answer(fixture_document('kb_l.cct').knowledge_base(), Query.of('QRSTU', 'M'))
        self.assertEqual(ctx.exception.kind, 'world_cap')


@override_settings(PROBTREE_EXACT_COLUMN_LIMIT=0)
class ThreeColoringTest(TestCase):
    """
    Checks the 3-colorability encoding against brute-force coloring.
    """

    def test_constraint_counts(self) -> None:
        """
        Checks 36 constraints for the triangle and 54 for K4.
        """
        triangle = parse_graph(load_document(fixture_path('triangle.graph')))
        k4 = parse_graph(load_document(fixture_path('k4.graph')))
        self.assertEqual(len(encode_3col(triangle).constraints), 36)
        self.assertEqual(len(encode_3col(k4).constraints), 54)
        self.assertEqual(len(encode_3col(k4).events), 13)

    def test_triangle_is_satisfiable(self) -> None:
        """
        Checks the triangle encoding has a model with every premise positive.
        """
        triangle = parse_graph(load_document(fixture_path('triangle.graph')))
        self.assertTrue(three_colorable(triangle))
        self.assertTrue(satisfiable(encode_3col(triangle)))

    def test_k4_is_unsatisfiable(self) -> None:
        """
        Checks the complete graph on four vertices has no such model.
        """
        k4 = parse_graph(load_document(fixture_path('k4.graph')))
        self.assertFalse(three_colorable(k4))
        self.assertFalse(satisfiable(encode_3col(k4)))

    def test_small_graphs_match_brute_force(self) -> None:
        """
        Checks a handful of small graphs against brute-force coloring.
        """
        graphs = [
            Graph.of('a', []),
            Graph.of('ab', [('a', 'b')]),
            Graph.of('abc', [('a', 'b'), ('b', 'c')]),
        ]
        for g in graphs:
            with self.subTest(edges=g.sorted_edges()):
                self.assertEqual(satisfiable(encode_3col(g)), three_colorable(g))


class PositiveModelTest(TestCase):
    """
    Checks construct_positive_model() and rescale_model().
    """

    def test_fixture_model(self) -> None:
        """
        Checks the fixture gets a model with Pr(all events) > 0.
        """
        t = fixture_document('kb_l.cct').tree()
        pr = construct_positive_model(t)
        self.assertEqual(check_kb(pr, t.kb), [])
        self.assertGreater(prob_of(pr, ConjunctiveEvent(frozenset(t.nodes))), 0)

    def test_random_trees(self) -> None:
        """
        Checks models on 50 seeded random trees, and that rescaling keeps them models.
        """
        rng = random.Random(7)
        for index in range(50):
            t = random_tree(rng, rng.randint(2, 12), exact=index % 2 == 0)
            with self.subTest(index=index):
                pr = construct_positive_model(t)
                self.assertEqual(check_kb(pr, t.kb), [])
                self.assertGreater(prob_of(pr, ConjunctiveEvent(frozenset(t.nodes))), 0)
                for _ in range(10):
                    s = Fraction(rng.randint(0, 20), 20)
                    self.assertEqual(check_kb(rescale_model(pr, s), t.kb), [])

    def test_rescale(self) -> None:
        """
        Checks that scaling by 1/2 moves the freed mass to the all-false world.
        """
        pr = Interpretation.from_assignments(
            [({'B': False, 'C': False}, Fraction(1, 2)), ({'B': True, 'C': True}, Fraction(1, 2))]
        )
        scaled = rescale_model(pr, Fraction(1, 2))
        self.assertEqual(dict(scaled.mass), {0: Fraction(3, 4), 3: Fraction(1, 4)})

    def test_rescale_rejects_bad_scale(self) -> None:
        """
        Checks that s outside [0, 1] raises kind bad_scale.
        """
        pr = Interpretation.point_mass(('B',), ('B',))
        with self.assertRaises(ModelConstructionError) as ctx:
            rescale_model(pr, Fraction(3, 2))
        self.assertEqual(ctx.exception.kind, 'bad_scale')
