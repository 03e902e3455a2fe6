"""
Command-line surface: `run(argv)` parses the arguments, runs one subcommand and returns its exit status and output.

Subcommands:
    validate <kb>
    query <kb> "<q>" [--trace] [--json] [--html] [--interval l,u]
    oracle <kb> "<q>" [--trace] [--json]
    sat <kb>
    model <kb>
    emit-lp <kb> "<q>"
    gen-3col <graph>
    bench --topology {chain,binary} --n N

Exit status: 0 on success, 1 on domain errors, 2 on usage errors.

Called by:
    - prob_tree_app.management.commands.probtree
"""

import argparse
import contextlib
import io
import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from prob_tree_app.lib.answer_rendering import dump_answer_json, explain, explain_html, render_answer_line
from prob_tree_app.lib.kb_documents import (
    KbDocument,
    document_from_kb,
    load_document,
    parse_graph,
    parse_kb,
    parse_query,
    render_kb,
)
from prob_tree_app.lib.linear_forms import render_lp
from prob_tree_app.lib.lp_engine import inequality_counts, upper_lp_for_query
from prob_tree_app.lib.model_core import ConjunctiveEvent, ProbTreeError, as_probability, format_decimal, format_fraction
from prob_tree_app.lib.oracle import construct_positive_model, encode_3col, oracle_answer, satisfiable
from prob_tree_app.lib.query_planner import answer_with_plan, entails_interval
from prob_tree_app.lib.random_trees import chain_tree, complete_binary_tree
from prob_tree_app.lib.tree_analysis import ConstraintTree, PreconditionError, Query, orient, reduce_to_complete

log = logging.getLogger(__name__)

EXIT_OK: int = 0
EXIT_DOMAIN_ERROR: int = 1
EXIT_USAGE_ERROR: int = 2


class CliUsageError(Exception):
    """
    Raised by the argument parser instead of exiting the process.
    """

    pass


class CliArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliUsageError(f'{self.prog}: error: {message}')


@dataclass(frozen=True)
class CliResult:
    status: int
    output: str


## helpers ----------------------------------------------------------


def _read_kb(path: str) -> KbDocument:
    return parse_kb(load_document(Path(path)))


def _read_tree(path: str) -> ConstraintTree:
    """
    Called by: query, model, emit-lp
    """
    document = _read_kb(path)
    if document.mode != 'tree':
        raise PreconditionError(f'``{path}`` is a kb document; this subcommand needs a tree', kind='not_a_tree')
    return document.tree()


def _parse_interval(text: str) -> tuple[Fraction, Fraction]:
    parts = [part.strip() for part in text.split(',')]
    if len(parts) != 2:
        raise CliUsageError(f'--interval expects `l,u`, got ``{text}``')
    try:
        lower, upper = as_probability(parts[0]), as_probability(parts[1])
    except ProbTreeError as exc:
        raise CliUsageError(f'--interval: {exc}') from exc
    if lower > upper:
        raise CliUsageError(f'--interval lower bound exceeds upper bound, ``{text}``')
    return lower, upper


## subcommands ------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> list[str]:
    document = _read_kb(args.kb)
    kb = document.knowledge_base()
    return [f'valid {document.mode}: {len(kb.events)} events, {len(kb.constraints)} constraints']


def cmd_query(args: argparse.Namespace) -> list[str]:
    t = _read_tree(args.kb)
    q = parse_query(args.query)
    interval = _parse_interval(args.interval) if args.interval else None
    result, plan = answer_with_plan(t, q)
    if args.json:
        lines = [dump_answer_json(result)]
    elif args.html:
        lines = [explain_html(result, q).rstrip('\n')]
    elif args.trace:
        lines = [explain(result, q).rstrip('\n'), '', 'plan:']
        lines.extend(f'  {step.render()}' for step in plan.steps)
    else:
        lines = [render_answer_line(q, result)]
    if interval is not None:
        lower, upper = interval
        verdict = 'yes' if entails_interval(result, lower, upper) else 'no'
        lines.append(f'logical consequence {q.render()}[{format_fraction(lower)}, {format_fraction(upper)}]: {verdict}')
    return lines


def cmd_oracle(args: argparse.Namespace) -> list[str]:
    kb = _read_kb(args.kb).knowledge_base()
    q = parse_query(args.query)
    result = oracle_answer(kb, q)
    if args.json:
        return [dump_answer_json(result)]
    if args.trace:
        return [explain(result, q).rstrip('\n')]
    return [render_answer_line(q, result)]


def cmd_sat(args: argparse.Namespace) -> list[str]:
    kb = _read_kb(args.kb).knowledge_base()
    return ['satisfiable' if satisfiable(kb) else 'unsatisfiable']


def cmd_model(args: argparse.Namespace) -> list[str]:
    t = _read_tree(args.kb)
    pr = construct_positive_model(t)
    lines = [f'model over {len(pr.events)} events, {len(pr.mass)} worlds with positive mass']
    for world, mass in pr.worlds():
        lines.append(f'{format_fraction(mass)}\t{world.render()}')
    return lines


def cmd_emit_lp(args: argparse.Namespace) -> list[str]:
    """
    Dumps the upper-bound LP of a premise-restricted query after reduction to a complete query.
    """
    t = _read_tree(args.kb)
    q = parse_query(args.query)
    if not q.premise.is_basic:
        raise PreconditionError(f'emit-lp needs a premise-restricted query, got ``{q.render()}``', kind='classification')
    reduction = reduce_to_complete(t, q)
    lines = [f'# {note}' for note in reduction.notes]
    lines.append(render_lp(upper_lp_for_query(reduction.tree, reduction.query)).rstrip('\n'))
    return lines


def cmd_gen_3col(args: argparse.Namespace) -> list[str]:
    graph = parse_graph(load_document(Path(args.graph)))
    return [render_kb(document_from_kb(encode_3col(graph), mode='kb')).rstrip('\n')]


def cmd_bench(args: argparse.Namespace) -> list[str]:
    """
    Times the planner on ∃(leaves|root) and prints the inequality counts of the matching upper-bound LP.
    """
    if args.n < 2:
        raise CliUsageError('--n must be at least 2')
    build = chain_tree if args.topology == 'chain' else complete_binary_tree
    t = build(args.n)
    root = min(t.nodes)
    q = Query(ConjunctiveEvent(t.leaves() - {root}), ConjunctiveEvent.of(root))
    started = time.perf_counter()
    result, _plan = answer_with_plan(t, q)
    elapsed = time.perf_counter() - started
    counts = inequality_counts(orient(t, root))
    lines = [
        f'topology {args.topology}, n = {args.n}, root {root}, {len(q.conclusion.atoms)} leaves',
        f'answer [{format_decimal(result.lower, 6)}, {format_decimal(result.upper, 6)}] by {result.source}',
        f'time {elapsed:.6f} s',
        '',
        f'{"convention":<20}inequalities',
    ]
    lines.extend(f'{name:<20}{value}' for name, value in counts.items())
    return lines


COMMANDS: dict[str, Callable[[argparse.Namespace], list[str]]] = {
    'validate': cmd_validate,
    'query': cmd_query,
    'oracle': cmd_oracle,
    'sat': cmd_sat,
    'model': cmd_model,
    'emit-lp': cmd_emit_lp,
    'gen-3col': cmd_gen_3col,
    'bench': cmd_bench,
}


## parser -----------------------------------------------------------


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog='probtree', description='Tight answers on conditional constraint trees.')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=CliArgumentParser)

    validate = subparsers.add_parser('validate', help='parse and validate a kb document')
    validate.add_argument('kb')

    query = subparsers.add_parser('query', help='tight answer from the tree engines')
    query.add_argument('kb')
    query.add_argument('query')
    query.add_argument('--trace', action='store_true', help='print the trace, table and plan')
    query.add_argument('--json', action='store_true', help='print the answer as json')
    query.add_argument('--html', action='store_true', help='print the explanation as html')
    query.add_argument('--interval', help='also check whether `l,u` is a logical consequence')

    oracle = subparsers.add_parser('oracle', help='tight answer from the classical LP over all worlds')
    oracle.add_argument('kb')
    oracle.add_argument('query')
    oracle.add_argument('--trace', action='store_true')
    oracle.add_argument('--json', action='store_true')

    sat = subparsers.add_parser('sat', help='satisfiability with positive-probability premises')
    sat.add_argument('kb')

    model = subparsers.add_parser('model', help='dump a positive model of a tree')
    model.add_argument('kb')

    emit_lp = subparsers.add_parser('emit-lp', help='dump the upper-bound LP of a premise-restricted query')
    emit_lp.add_argument('kb')
    emit_lp.add_argument('query')

    gen_3col = subparsers.add_parser('gen-3col', help='encode a graph 3-coloring problem as a kb document')
    gen_3col.add_argument('graph')

    bench = subparsers.add_parser('bench', help='time the planner on a generated topology')
    bench.add_argument('--topology', choices=('chain', 'binary'), required=True)
    bench.add_argument('--n', type=int, required=True)
    return parser


def run(argv: Sequence[str]) -> CliResult:
    """
    Runs one subcommand; never raises for usage or domain errors.
    """
    parser = build_parser()
    help_buffer = io.StringIO()
    try:
        with contextlib.redirect_stdout(help_buffer):
            args = parser.parse_args(list(argv))
    except CliUsageError as exc:
        return CliResult(EXIT_USAGE_ERROR, f'{parser.format_usage()}{exc}\n')
    except SystemExit as exc:
        ## `--help` exits through argparse
        return CliResult(EXIT_OK if not exc.code else EXIT_USAGE_ERROR, help_buffer.getvalue())
    log.debug(f'running ``{args.command}`` with ``{vars(args)}``')
    try:
        lines = COMMANDS[args.command](args)
    except CliUsageError as exc:
        return CliResult(EXIT_USAGE_ERROR, f'{parser.format_usage()}{exc}\n')
    except ProbTreeError as exc:
        log.info(f'``{args.command}`` failed, ``{exc.kind}``: ``{exc}``')
        return CliResult(EXIT_DOMAIN_ERROR, f'error ({exc.kind}): {exc}\n')
    except OSError as exc:
        return CliResult(EXIT_DOMAIN_ERROR, f'error (io): {exc}\n')
    return CliResult(EXIT_OK, '\n'.join(lines) + '\n')
