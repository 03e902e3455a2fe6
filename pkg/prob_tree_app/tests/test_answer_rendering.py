import json
from fractions import Fraction

from bs4 import BeautifulSoup
from django.test import SimpleTestCase as TestCase
from django.test.utils import override_settings

from prob_tree_app.lib import answer_rendering
from prob_tree_app.lib.kb_documents import fixture_path, load_document, parse_kb
from prob_tree_app.lib.model_core import ConjunctiveEvent, TightAnswer
from prob_tree_app.lib.propagation import ROW_HEADER, answer_premise_restricted_exact
from prob_tree_app.lib.tree_analysis import Query

TWEETY_QUERY = Query(ConjunctiveEvent.of('ostrich'), ConjunctiveEvent.top())


def fixture_answer() -> TightAnswer:
    t = parse_kb(load_document(fixture_path('kb_l.cct'))).tree()
    return answer_premise_restricted_exact(t, Query.of('QRSTU', 'M'))


class AnswerLineTest(TestCase):
    """
    Checks render_answer_line().
    """

    def test_fraction_and_decimal(self) -> None:
        """
        Checks the exact and rounded forms side by side.
        """
        line = answer_rendering.render_answer_line(TWEETY_QUERY, TightAnswer(Fraction(18, 25), Fraction(1)))
        self.assertEqual(line, 'tight (ostrich|*) = [18/25, 1]  (~[0.7200, 1.0000])')

    def test_decimal_places_setting(self) -> None:
        """
        Checks that PROBTREE_DECIMAL_PLACES controls rounding.
        """
        with override_settings(PROBTREE_DECIMAL_PLACES=2):
            line = answer_rendering.render_answer_line(TWEETY_QUERY, TightAnswer(Fraction(18, 25), Fraction(1)))
        self.assertTrue(line.endswith('(~[0.72, 1.00])'))

    def test_empty_consequence(self) -> None:
        """
        Checks the [1, 0] form.
        """
        line = answer_rendering.render_answer_line(Query.of('C', 'B'), TightAnswer.empty())
        self.assertEqual(line, 'tight (C|B) = [1, 0] (inconsistent premise)')


class ExplainTest(TestCase):
    """
    Checks explanations in text, HTML and JSON.
    """

    def test_text_includes_table(self) -> None:
        """
        Checks that the text explanation names the engine and lists every strata row.
        """
        text = answer_rendering.explain(fixture_answer(), Query.of('QRSTU', 'M'))
        self.assertIn('source: exact propagation engine', text)
        self.assertIn('FUSION', text)
        self.assertEqual(len([line for line in text.splitlines() if line.endswith(('LEAF', 'CHAINING', 'FUSION'))]), 15)

    def test_html_table(self) -> None:
        """
        Checks that the HTML explanation has a header row plus fifteen body rows.
        """
        html = answer_rendering.explain_html(fixture_answer(), Query.of('QRSTU', 'M'))
        soup = BeautifulSoup(html, 'html.parser')
        table = soup.find('table')
        self.assertIsNotNone(table)
        headers = [th.get_text(strip=True) for th in table.find_all('th')]
        self.assertEqual(headers, list(ROW_HEADER))
        self.assertEqual(len(table.find('tbody').find_all('tr')), 15)
        self.assertIn('tight (QRSTU|M)', soup.find('h2').get_text())

    def test_json_schema(self) -> None:
        """
        Checks the JSON keys and values.
        """
        data = json.loads(answer_rendering.dump_answer_json(TightAnswer(Fraction(18, 25), Fraction(1), trace=('one',))))
        self.assertEqual(
            sorted(data), ['empty_consequence', 'lower', 'lower_decimal', 'trace', 'upper', 'upper_decimal']
        )
        self.assertEqual((data['lower'], data['upper_decimal'], data['trace']), ('18/25', '1.0000', ['one']))
        self.assertFalse(data['empty_consequence'])
