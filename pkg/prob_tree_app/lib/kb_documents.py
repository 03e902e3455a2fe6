"""
Text documents: knowledge-base files (`tree` or `kb` mode), queries and graph files.

Knowledge-base grammar, one item per line, `#` starts a comment:

    tree                                  (or `kb`; the first item)
    event A B C                           (optional, declares events explicitly)
    constraint (Q R | M) [0.5, 3/5]       (point form `[l]` abbreviates `[l, l]`; premise `*` only in kb mode)

Called by:
    - prob_tree_app.lib.cli_helpers
    - scripts/oracle_sweep.py
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from prob_tree_app.lib.model_core import (
    TOP_MARKER,
    ConditionalConstraint,
    ConjunctiveEvent,
    KnowledgeBase,
    ProbTreeError,
    as_probability,
    format_fraction,
)
from prob_tree_app.lib.oracle import Graph
from prob_tree_app.lib.tree_analysis import ConstraintTree, Query, QueryValidationError, validate_tree

try:
    import magic

    MAGIC_AVAILABLE = True
except (ImportError, OSError):
    MAGIC_AVAILABLE = False

log = logging.getLogger(__name__)

MODES: tuple[str, ...] = ('tree', 'kb')
TEXT_MIME_TYPES: tuple[str, ...] = ('application/x-empty', 'inode/x-empty')
FIXTURES_DIR: Path = Path(__file__).resolve().parent / 'fixtures'

CONSTRAINT_PATTERN: re.Pattern[str] = re.compile(
    r'constraint\s*\((?P<conclusion>[^|()]*)\|(?P<premise>[^|()]*)\)\s*\[(?P<bounds>[^\[\]]*)\]\s*\Z'
)
QUERY_PATTERN: re.Pattern[str] = re.compile(r'\s*\((?P<conclusion>[^|()]*)\|(?P<premise>[^|()]*)\)\s*\Z')


class KbSyntaxError(ProbTreeError):
    """
    Raised for malformed documents; `line` and `column` are 1-based.
    """

    def __init__(self, message: str, kind: str = 'syntax', line: int = 0, column: int = 0) -> None:
        location = f'line {line}, column {column}: ' if line else ''
        super().__init__(f'{location}{message}', kind=kind)
        self.line: int = line
        self.column: int = column


class DocumentTypeError(ProbTreeError):
    """
    Raised when an input file is not plain text.
    """

    pass


## knowledge-base documents -----------------------------------------


@dataclass(frozen=True)
class Declaration:
    line: int
    constraint: ConditionalConstraint


@dataclass(frozen=True)
class KbDocument:
    mode: str
    declarations: tuple[Declaration, ...]
    events: tuple[str, ...] = ()

    @property
    def constraints(self) -> tuple[ConditionalConstraint, ...]:
        return tuple(d.constraint for d in self.declarations)

    def knowledge_base(self) -> KnowledgeBase:
        return KnowledgeBase.from_constraints(self.constraints, extra_events=self.events)

    def tree(self) -> ConstraintTree:
        return validate_tree(self.knowledge_base())


def _strip_comment(raw: str) -> str:
    return raw.split('#', 1)[0].rstrip()


def _atoms(text: str, line: int, column: int, allow_top: bool) -> ConjunctiveEvent:
    names = text.split()
    if names == [TOP_MARKER]:
        if not allow_top:
            raise KbSyntaxError('the top event `*` is only allowed in kb mode', kind='top_in_tree', line=line, column=column)
        return ConjunctiveEvent.top()
    if not names:
        raise KbSyntaxError('empty atom list', kind='empty_event', line=line, column=column)
    if TOP_MARKER in names:
        raise KbSyntaxError('`*` cannot be combined with other atoms', kind='syntax', line=line, column=column)
    return ConjunctiveEvent.of(*names)


def _bounds(text: str, line: int, column: int) -> tuple[Fraction, Fraction]:
    parts = [part.strip() for part in text.split(',')]
    if len(parts) not in (1, 2) or not all(parts):
        raise KbSyntaxError(f'expected `[l, u]` or `[l]`, got ``[{text}]``', kind='syntax', line=line, column=column)
    values = [as_probability(part) for part in parts]
    return values[0], values[-1]


def _parse_constraint(body: str, line: int, offset: int, allow_top: bool) -> ConditionalConstraint:
    match = CONSTRAINT_PATTERN.match(body)
    if match is None:
        raise KbSyntaxError('expected `constraint (H | G) [l, u]`', kind='syntax', line=line, column=offset + 1)
    conclusion = _atoms(match.group('conclusion'), line, offset + match.start('conclusion') + 1, allow_top=False)
    premise = _atoms(match.group('premise'), line, offset + match.start('premise') + 1, allow_top=allow_top)
    lower, upper = _bounds(match.group('bounds'), line, offset + match.start('bounds') + 1)
    return ConditionalConstraint(conclusion, premise, lower, upper)


def parse_kb(text: str) -> KbDocument:
    """
    Parses a knowledge-base document; in tree mode the result must also be a valid constraint tree.
    """
    mode: str | None = None
    declarations: list[Declaration] = []
    events: list[str] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = _strip_comment(raw)
        body = content.strip()
        if not body:
            continue
        offset = len(content) - len(content.lstrip())
        if mode is None:
            if body not in MODES:
                raise KbSyntaxError(f'expected header `tree` or `kb`, got ``{body}``', kind='header', line=number, column=offset + 1)
            mode = body
            continue
        keyword = body.split(maxsplit=1)[0]
        try:
            if keyword == 'event':
                events.extend(body.split()[1:])
            elif keyword.startswith('constraint'):
                declarations.append(Declaration(number, _parse_constraint(body, number, offset, allow_top=mode == 'kb')))
            else:
                raise KbSyntaxError(f'unknown item ``{keyword}``', kind='syntax', line=number, column=offset + 1)
        except KbSyntaxError:
            raise
        except ProbTreeError as exc:
            raise KbSyntaxError(str(exc), kind=exc.kind, line=number, column=offset + 1) from exc
    if mode is None:
        raise KbSyntaxError('empty document, expected header `tree` or `kb`', kind='header')
    document = KbDocument(mode, tuple(declarations), tuple(events))
    document.knowledge_base()
    if mode == 'tree':
        document.tree()
    log.debug(f'parsed ``{mode}`` document with ``{len(declarations)}`` constraints')
    return document


def _render_event(e: ConjunctiveEvent) -> str:
    return TOP_MARKER if e.is_top else ' '.join(sorted(e.atoms))


def render_kb(document: KbDocument) -> str:
    """
    Writes a document that parses back to the same knowledge base; `event` lines only for otherwise unmentioned events.
    """
    lines: list[str] = [document.mode]
    mentioned: set[str] = set()
    for constraint in document.constraints:
        mentioned |= constraint.conclusion.atoms | constraint.premise.atoms
    isolated = sorted(set(document.events) - mentioned)
    if isolated:
        lines.append('event ' + ' '.join(isolated))
    for constraint in document.constraints:
        bounds = format_fraction(constraint.lower)
        if constraint.lower != constraint.upper:
            bounds = f'{bounds}, {format_fraction(constraint.upper)}'
        lines.append(f'constraint ({_render_event(constraint.conclusion)} | {_render_event(constraint.premise)}) [{bounds}]')
    return '\n'.join(lines) + '\n'


def document_from_kb(kb: KnowledgeBase, mode: str = 'kb') -> KbDocument:
    declarations = tuple(Declaration(index, c) for index, c in enumerate(kb.constraints, start=1))
    return KbDocument(mode, declarations, kb.ordered_events)


## queries ----------------------------------------------------------


def parse_query(text: str) -> Query:
    """
    Parses `(F | E)`; E may be `*` for the top event.
    """
    match = QUERY_PATTERN.match(text)
    if match is None:
        raise KbSyntaxError(f'expected `(F | E)`, got ``{text}``', kind='syntax', line=1, column=1)
    conclusion = _atoms(match.group('conclusion'), 1, match.start('conclusion') + 1, allow_top=False)
    premise = _atoms(match.group('premise'), 1, match.start('premise') + 1, allow_top=True)
    overlap = conclusion.atoms & premise.atoms
    if overlap:
        raise QueryValidationError(f'premise and conclusion share ``{sorted(overlap)}``', kind='overlap')
    return Query(conclusion, premise)


## graphs -----------------------------------------------------------


def parse_graph(text: str) -> Graph:
    """
    Parses `v <name>` and `e <name> <name>` lines.
    """
    vertices: list[str] = []
    edges: list[tuple[str, str]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        parts = _strip_comment(raw).split()
        if not parts:
            continue
        if parts[0] == 'v' and len(parts) == 2:
            vertices.append(parts[1])
        elif parts[0] == 'e' and len(parts) == 3:
            if parts[1] == parts[2]:
                raise KbSyntaxError(f'self-loop at ``{parts[1]}``', kind='bad_edge', line=number, column=1)
            edges.append((parts[1], parts[2]))
        else:
            raise KbSyntaxError(f'expected `v <name>` or `e <name> <name>`, got ``{raw.strip()}``', line=number, column=1)
    try:
        return Graph.of(vertices, edges)
    except ProbTreeError as exc:
        raise KbSyntaxError(str(exc), kind=exc.kind) from exc


def render_graph(g: Graph) -> str:
    lines = [f'v {vertex}' for vertex in sorted(g.vertices)]
    lines.extend(f'e {first} {second}' for first, second in g.sorted_edges())
    return '\n'.join(lines) + '\n'


## files ------------------------------------------------------------


def load_document(path: Path) -> str:
    """
    Reads a text document, refusing binary input.
    """
    data: bytes = Path(path).read_bytes()
    if MAGIC_AVAILABLE:
        file_type: str = magic.from_buffer(data[:2048], mime=True)
        if not (file_type.startswith('text/') or file_type in TEXT_MIME_TYPES):
            raise DocumentTypeError(f'``{path}`` is ``{file_type}``, not a text document', kind='not_text')
    try:
        return data.decode('utf-8')
    except UnicodeDecodeError as exc:
        raise DocumentTypeError(f'``{path}`` is not utf-8 text', kind='not_text') from exc


def fixture_path(name: str) -> Path:
    return FIXTURES_DIR / name
