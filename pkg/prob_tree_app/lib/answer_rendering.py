"""
Renders tight answers: the one-line result, plain-text and markdown explanations, HTML via markdown, and JSON.

Called by:
    - prob_tree_app.lib.cli_helpers
"""

import json
import logging

import markdown
from django.conf import settings as project_settings

from prob_tree_app.lib.model_core import TightAnswer, format_decimal, format_fraction
from prob_tree_app.lib.propagation import ROW_HEADER
from prob_tree_app.lib.tree_analysis import Query

log = logging.getLogger(__name__)

SOURCE_LABELS: dict[str, str] = {
    'exact': 'exact propagation engine',
    'general': 'linear-programming engine',
    'conclusion': 'conclusion-restricted rules',
    'split': 'split at a common node',
    'oracle': 'oracle-derived (atomic-event LP)',
    'planner': 'query planner',
}


def _places() -> int:
    return project_settings.PROBTREE_DECIMAL_PLACES


def render_answer_line(q: Query, answer: TightAnswer) -> str:
    """
    `tight (F|E) = [p/q, p/q]  (~[d, d])`, or the empty-consequence form.
    """
    if answer.empty_consequence:
        return f'tight {q.render()} = [1, 0] (inconsistent premise)'
    places = _places()
    return (
        f'tight {q.render()} = [{format_fraction(answer.lower)}, {format_fraction(answer.upper)}]  '
        f'(~[{format_decimal(answer.lower, places)}, {format_decimal(answer.upper, places)}])'
    )


## plain text -------------------------------------------------------


def _text_table(rows: tuple[tuple[str, ...], ...]) -> list[str]:
    widths = [max(len(cell) for cell in column) for column in zip(ROW_HEADER, *rows)]
    lines = []
    for row in (ROW_HEADER, *rows):
        lines.append('  '.join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    return lines


def explain(answer: TightAnswer, q: Query | None = None) -> str:
    """
    Source label, trace lines, then the strata table when the engine produced one.
    """
    lines: list[str] = []
    if q is not None:
        lines.append(render_answer_line(q, answer))
    lines.append(f'source: {SOURCE_LABELS.get(answer.source, answer.source)}')
    lines.extend(f'- {line}' for line in answer.trace)
    if answer.table:
        lines.append('')
        lines.extend(_text_table(answer.table))
    return '\n'.join(lines) + '\n'


## markdown and html ------------------------------------------------


def explain_markdown(answer: TightAnswer, q: Query | None = None) -> str:
    parts: list[str] = []
    if q is not None:
        parts.append(f'## {render_answer_line(q, answer)}')
    parts.append(f'*{SOURCE_LABELS.get(answer.source, answer.source)}*')
    if answer.trace:
        parts.append('\n'.join(f'- {line}' for line in answer.trace))
    if answer.table:
        table = ['| ' + ' | '.join(ROW_HEADER) + ' |', '|' + '---|' * len(ROW_HEADER)]
        table.extend('| ' + ' | '.join(row) + ' |' for row in answer.table)
        parts.append('\n'.join(table))
    return '\n\n'.join(parts) + '\n'


def render_markdown_text(text: str) -> str:
    """
    Renders markdown text to HTML.
    """
    html: str = markdown.markdown(text, extensions=['extra'], output_format='html5')
    return html


def explain_html(answer: TightAnswer, q: Query | None = None) -> str:
    return render_markdown_text(explain_markdown(answer, q))


## json -------------------------------------------------------------


def answer_json(answer: TightAnswer) -> dict[str, object]:
    """
    Schema: lower, upper (p/q strings), lower_decimal, upper_decimal, empty_consequence, trace.
    """
    places = _places()
    return {
        'lower': format_fraction(answer.lower),
        'upper': format_fraction(answer.upper),
        'lower_decimal': format_decimal(answer.lower, places),
        'upper_decimal': format_decimal(answer.upper, places),
        'empty_consequence': answer.empty_consequence,
        'trace': list(answer.trace),
    }


def dump_answer_json(answer: TightAnswer) -> str:
    return json.dumps(answer_json(answer), indent=2, sort_keys=True)
