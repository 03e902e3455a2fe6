"""
Seeded random trees and queries for sweeps, plus the chain and complete-binary topologies used by `bench`.

Called by:
    - prob_tree_app.lib.cli_helpers (bench)
    - scripts/oracle_sweep.py
    - prob_tree_app.tests
"""

import logging
import random
from collections.abc import Iterable
from fractions import Fraction

from prob_tree_app.lib.model_core import ConditionalConstraint, ConjunctiveEvent, KnowledgeBase, ProbTreeError
from prob_tree_app.lib.tree_analysis import ConstraintTree, Query, QueryKind, validate_query, validate_tree

log = logging.getLogger(__name__)

VALUE_GRID: tuple[Fraction, ...] = tuple(
    Fraction(value) for value in ('1/10', '1/5', '1/4', '3/10', '2/5', '1/2', '3/5', '7/10', '3/4', '4/5', '9/10', '1')
)
LETTERS: str = 'ABCDEFGHIJKLMNOPQRSTUVWXYZ'
QUERY_ATTEMPTS: int = 200

## the same bound both ways keeps every propagated value a multiple of 1/4
BENCH_INTERVAL: tuple[Fraction, Fraction] = (Fraction(3, 4), Fraction(3, 4))


def node_names(n: int, prefix: str = 'N') -> list[str]:
    """
    Single letters up to 26 nodes, zero-padded `prefix<i>` names beyond.
    """
    if n <= len(LETTERS):
        return list(LETTERS[:n])
    width = len(str(n - 1))
    return [f'{prefix}{i:0{width}d}' for i in range(n)]


def tree_from_edges(
    edges: Iterable[tuple[str, str]],
    intervals: dict[tuple[str, str], tuple[Fraction, Fraction]],
    nodes: Iterable[str] = (),
) -> ConstraintTree:
    """
    `intervals[(G, H)]` is the interval of (H|G); both directions of every edge must be present.
    """
    constraints: list[ConditionalConstraint] = []
    for first, second in edges:
        for premise, conclusion in ((first, second), (second, first)):
            lower, upper = intervals[(premise, conclusion)]
            constraints.append(ConditionalConstraint(ConjunctiveEvent.of(conclusion), ConjunctiveEvent.of(premise), lower, upper))
    return validate_tree(KnowledgeBase.from_constraints(constraints, extra_events=nodes))


def _interval(rng: random.Random, exact: bool) -> tuple[Fraction, Fraction]:
    lower = rng.choice(VALUE_GRID)
    if exact:
        return lower, lower
    return lower, rng.choice([value for value in VALUE_GRID if value >= lower])


def random_tree(rng: random.Random, n: int, exact: bool = True) -> ConstraintTree:
    """
    Attaches node i to a uniformly chosen earlier node, with values drawn from VALUE_GRID.
    """
    names = node_names(n)
    edges: list[tuple[str, str]] = []
    intervals: dict[tuple[str, str], tuple[Fraction, Fraction]] = {}
    for i in range(1, n):
        parent, child = names[rng.randrange(i)], names[i]
        edges.append((parent, child))
        intervals[(parent, child)] = _interval(rng, exact)
        intervals[(child, parent)] = _interval(rng, exact)
    return tree_from_edges(edges, intervals, names)


def chain_tree(
    n: int,
    forward: tuple[Fraction, Fraction] = BENCH_INTERVAL,
    backward: tuple[Fraction, Fraction] = BENCH_INTERVAL,
) -> ConstraintTree:
    """
    names[0] - names[1] - ... - names[n-1]; `forward` is (next|previous), `backward` is (previous|next).
    """
    names = node_names(n, prefix='C')
    edges = list(zip(names, names[1:]))
    intervals: dict[tuple[str, str], tuple[Fraction, Fraction]] = {}
    for first, second in edges:
        intervals[(first, second)] = forward
        intervals[(second, first)] = backward
    return tree_from_edges(edges, intervals, names)


def complete_binary_tree(
    n: int,
    forward: tuple[Fraction, Fraction] = BENCH_INTERVAL,
    backward: tuple[Fraction, Fraction] = BENCH_INTERVAL,
) -> ConstraintTree:
    """
    Heap layout: node i (1-based) has children 2i and 2i + 1; the root is names[0].
    """
    names = node_names(n, prefix='B')
    edges = [(names[i // 2 - 1], names[i - 1]) for i in range(2, n + 1)]
    intervals: dict[tuple[str, str], tuple[Fraction, Fraction]] = {}
    for parent, child in edges:
        intervals[(parent, child)] = forward
        intervals[(child, parent)] = backward
    return tree_from_edges(edges, intervals, names)


def random_query(rng: random.Random, t: ConstraintTree, kind: QueryKind) -> Query | None:
    """
    Rejection-samples a valid query of the requested class; None when none turns up.
    """
    nodes = list(t.nodes)
    if len(nodes) < 2:
        return None
    for _attempt in range(QUERY_ATTEMPTS):
        if kind == QueryKind.PREMISE_RESTRICTED:
            premise_size, conclusion_size = 1, rng.randint(1, min(3, len(nodes) - 1))
        elif kind == QueryKind.STRONGLY_CONCLUSION_RESTRICTED:
            premise_size, conclusion_size = rng.randint(2, 3), 1
        else:
            premise_size, conclusion_size = rng.randint(2, 3), rng.randint(1, 2)
        if premise_size + conclusion_size > len(nodes):
            continue
        picked = rng.sample(nodes, premise_size + conclusion_size)
        q = Query.of(picked[premise_size:], picked[:premise_size])
        try:
            classification = validate_query(t, q)
        except ProbTreeError:
            continue
        if classification.kind == kind:
            return q
    log.debug(f'no ``{kind}`` query found over ``{len(nodes)}`` nodes')
    return None
