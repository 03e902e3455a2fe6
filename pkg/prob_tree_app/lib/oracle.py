"""
Ground truth over atomic events: the classical world-variable LP for tight answers and satisfiability,
the positive-model construction for trees, model rescaling, and the 3-colorability encoder.

Called by:
    - prob_tree_app.lib.cli_helpers (oracle, sat, model, gen-3col)
    - scripts/oracle_sweep.py
"""

import functools
import logging
import pprint
from collections.abc import Iterable
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import trio
from django.conf import settings as project_settings

from prob_tree_app.lib.linear_forms import LinearConstraint, LinearProgram, LinExpr, LpOutcome
from prob_tree_app.lib.model_core import (
    TOP,
    ConditionalConstraint,
    ConjunctiveEvent,
    Interpretation,
    KnowledgeBase,
    ProbTreeError,
    TightAnswer,
    check_kb,
    format_decimal,
    prob_of,
)
from prob_tree_app.lib.simplex import solve_lp
from prob_tree_app.lib.tree_analysis import ConstraintTree, PreconditionError, Query, QueryValidationError

log = logging.getLogger(__name__)

World = frozenset[str]


class WorldCapError(ProbTreeError):
    """
    Raised when a knowledge base has more events than the configured world cap.
    """

    pass


class ModelConstructionError(ProbTreeError):
    """
    Raised when a constructed interpretation fails its model check.
    """

    pass


## classical LP -----------------------------------------------------


def _world_name(bits: int, n: int) -> str:
    return 'w' + ''.join('1' if bits >> i & 1 else '0' for i in range(n))


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise WorldCapError(f'``{n}`` events exceed the world cap of ``{cap}``', kind='world_cap')


class WorldSpace:
    """
    All 2^n worlds over sorted `events`; `sum_over(e)` adds up the variables of the worlds where `e` holds.
    """

    def __init__(self, events: Iterable[str], cap: int) -> None:
        self.events: tuple[str, ...] = tuple(sorted(events))
        _check_cap(len(self.events), cap)
        self.size: int = 1 << len(self.events)
        self.names: tuple[str, ...] = tuple(_world_name(bits, len(self.events)) for bits in range(self.size))

    def mask(self, e: ConjunctiveEvent) -> int:
        mask = 0
        for name in e.atoms:
            mask |= 1 << self.events.index(name)
        return mask

    def sum_over(self, e: ConjunctiveEvent) -> LinExpr:
        mask = self.mask(e)
        return LinExpr.build({self.names[bits]: Fraction(1) for bits in range(self.size) if bits & mask == mask})

    def constraint_rows(self, c: ConditionalConstraint) -> list[LinearConstraint]:
        """
        u1 * Pr(G) <= Pr(GH) <= u2 * Pr(G) as two homogeneous inequalities.
        """
        premise = self.mask(c.premise)
        joint = premise | self.mask(c.conclusion)
        lower: dict[str, Fraction] = {}
        upper: dict[str, Fraction] = {}
        for bits in range(self.size):
            if bits & premise != premise:
                continue
            hit = Fraction(1) if bits & joint == joint else Fraction(0)
            lower[self.names[bits]] = hit - c.lower
            upper[self.names[bits]] = hit - c.upper
        return [LinearConstraint(LinExpr.build(lower), '>=', 0), LinearConstraint(LinExpr.build(upper), '<=', 0)]


def _homogeneous_lp(space: WorldSpace, kb: KnowledgeBase, normalized: ConjunctiveEvent, objective: LinExpr, sense: str) -> LinearProgram:
    rows: list[LinearConstraint] = [LinearConstraint(space.sum_over(normalized), '=', 1)]
    for constraint in kb.constraints:
        rows.extend(space.constraint_rows(constraint))
    return LinearProgram(space.names, tuple(rows), objective, sense)


def _query_space(kb: KnowledgeBase, q: Query) -> WorldSpace:
    if q.conclusion.is_top:
        raise QueryValidationError('the conclusion of a query cannot be the top event', kind='top_not_allowed')
    overlap = q.premise.atoms & q.conclusion.atoms
    if overlap:
        raise PreconditionError(f'premise and conclusion share ``{sorted(overlap)}``', kind='overlap')
    return WorldSpace(kb.events | q.premise.atoms | q.conclusion.atoms, project_settings.PROBTREE_WORLD_CAP)


def build_classical_lp(kb: KnowledgeBase, q: Query, direction: str) -> LinearProgram:
    """
    Optimizes sum of x_A over worlds A satisfying EF subject to sum over E-worlds = 1 and two inequalities per constraint.
    `direction` is 'min' or 'max'; query events missing from the kb join it unconstrained.
    """
    if direction not in ('min', 'max'):
        raise PreconditionError(f'unknown direction ``{direction}``', kind='bad_direction')
    space = _query_space(kb, q)
    joint = ConjunctiveEvent(q.premise.atoms | q.conclusion.atoms)
    sense = 'minimize' if direction == 'min' else 'maximize'
    return _homogeneous_lp(space, kb, q.premise, space.sum_over(joint), sense)


def classical_inequality_count(kb: KnowledgeBase) -> int:
    """
    The classical LP size: the normalization equality counts twice, each constraint adds two inequalities.
    """
    return 2 + 2 * len(kb.constraints)


## concurrent solving -----------------------------------------------


class ConcurrentSolver:
    """
    Solves several independent LPs in worker threads under one trio nursery.
    """

    def __init__(self, lps: dict[str, LinearProgram], exact: bool) -> None:
        self.lps = lps
        self.exact = exact
        self.outcomes: dict[str, LpOutcome] = {}

    async def manage_solves(self) -> None:
        """
        Called by: solve_all()
        """
        results_holder_dct: dict[str, LpOutcome] = {}  # receives outcomes as they're produced
        async with trio.open_nursery() as nursery:
            for label, lp in self.lps.items():
                nursery.start_soon(self.solve_one, label, lp, results_holder_dct)
        log.debug(f'final results_holder_dct, ```{pprint.pformat({k: v.status for k, v in results_holder_dct.items()})}```')
        self.outcomes = results_holder_dct

    async def solve_one(self, label: str, lp: LinearProgram, results_holder_dct: dict[str, LpOutcome]) -> None:
        job = functools.partial(solve_lp, lp, exact=self.exact, tolerance=project_settings.PROBTREE_FLOAT_TOLERANCE)
        results_holder_dct[label] = await trio.to_thread.run_sync(job)

    def solve_all(self) -> dict[str, LpOutcome]:
        trio.run(self.manage_solves)
        return self.outcomes


def _exact_for(space: WorldSpace) -> bool:
    exact = space.size <= project_settings.PROBTREE_EXACT_COLUMN_LIMIT
    if not exact:
        log.warning(f'``{space.size}`` world columns exceed the exact limit; solving in floating point')
    return exact


def _from_float(value: Fraction) -> Fraction:
    return min(Fraction(1), max(Fraction(0), value.limit_denominator(10**9)))


def oracle_answer(kb: KnowledgeBase, q: Query) -> TightAnswer:
    """
    Tight answer by solving the min and max classical LPs; infeasibility means no model gives E positive probability.
    """
    space = _query_space(kb, q)
    exact = _exact_for(space)
    lps = {direction: build_classical_lp(kb, q, direction) for direction in ('min', 'max')}
    outcomes = ConcurrentSolver(lps, exact).solve_all()
    size = f'oracle: classical LP over {space.size} worlds, {lps["min"].inequality_count} inequalities'
    if any(outcome.status == 'infeasible' for outcome in outcomes.values()):
        return TightAnswer.empty(trace=(size, 'oracle: no model gives the premise positive probability'), source='oracle')
    lower, upper = outcomes['min'].value, outcomes['max'].value
    assert lower is not None and upper is not None
    trace: tuple[str, ...] = (size,)
    if not exact:
        lower, upper = _from_float(lower), _from_float(upper)
        lower = min(lower, upper)
        trace += ('oracle: solved in floating point; bounds are approximate',)
    log.debug(f'oracle ``{q.render()}`` = ``[{format_decimal(lower)}, {format_decimal(upper)}]``')
    return TightAnswer(lower, upper, trace=trace, source='oracle')


def satisfiable(kb: KnowledgeBase) -> bool:
    """
    True iff some model gives every premise of `kb` positive probability.
    One LP per distinct premise suffices, since mixtures of models are models.
    """
    space = WorldSpace(kb.events, project_settings.PROBTREE_WORLD_CAP)
    premises = sorted({c.premise for c in kb.constraints} or {TOP}, key=lambda e: sorted(e.atoms))
    lps = {
        premise.render(): _homogeneous_lp(space, kb, premise, LinExpr.zero(), 'maximize') for premise in premises
    }
    outcomes = ConcurrentSolver(lps, _exact_for(space)).solve_all()
    failing = sorted(label for label, outcome in outcomes.items() if outcome.status == 'infeasible')
    if failing:
        log.debug(f'premises without positive-probability models, ``{failing}``')
    return not failing


## positive models for trees ----------------------------------------


def _edge_model(shared: str, new: str, u: Fraction, v: Fraction) -> dict[World, Fraction]:
    """
    Model of (new|shared)[u, u] and (shared|new)[v, v] over the two events.
    """
    total = u + v
    return {
        frozenset(): u * v / total,
        frozenset((shared,)): (v - u * v) / total,
        frozenset((new,)): (u - u * v) / total,
        frozenset((shared, new)): u * v / total,
    }


def _marginal(model: dict[World, Fraction], name: str) -> Fraction:
    return sum((mass for world, mass in model.items() if name in world), Fraction(0))


def _rescale(model: dict[World, Fraction], s: Fraction) -> dict[World, Fraction]:
    scaled = {world: s * mass for world, mass in model.items()}
    scaled[frozenset()] = scaled.get(frozenset(), Fraction(0)) + 1 - s
    return {world: mass for world, mass in scaled.items() if mass}


def _combine(first: dict[World, Fraction], second: dict[World, Fraction], shared: str) -> dict[World, Fraction]:
    """
    Pr(A1 b A2) = Pr1(A1 b) * Pr2(b A2) / Pr2(b) for both truth values b of the shared event.
    """
    shared_true = _marginal(second, shared)
    combined: dict[World, Fraction] = {}
    for left, left_mass in first.items():
        is_true = shared in left
        denominator = shared_true if is_true else 1 - shared_true
        if not denominator:
            continue
        for right, right_mass in second.items():
            if (shared in right) != is_true:
                continue
            mass = left_mass * right_mass / denominator
            if mass:
                world = left | right
                combined[world] = combined.get(world, Fraction(0)) + mass
    return combined


def _to_interpretation(events: Iterable[str], model: dict[World, Fraction]) -> Interpretation:
    names = tuple(sorted(events))
    return Interpretation.from_assignments(({name: name in world for name in names}, mass) for world, mass in model.items())


def construct_positive_model(t: ConstraintTree) -> Interpretation:
    """
    Builds a model of the tree (lower endpoints taken as exact values) with Pr(all events) > 0,
    adding one edge at a time in breadth-first order from the smallest event name.
    """
    _check_cap(t.size, project_settings.PROBTREE_MODEL_CAP)
    root = min(t.nodes)
    model: dict[World, Fraction] = {frozenset((root,)): Fraction(1)}
    for shared, new in nx.bfs_edges(t.graph, root, sort_neighbors=sorted):
        u, v = t.interval(shared, new)[0], t.interval(new, shared)[0]
        edge = _edge_model(shared, new, u, v)
        model_marginal, edge_marginal = _marginal(model, shared), _marginal(edge, shared)
        if model_marginal > edge_marginal:
            model = _rescale(model, edge_marginal / model_marginal)
        elif edge_marginal > model_marginal:
            edge = _rescale(edge, model_marginal / edge_marginal)
        model = _combine(model, edge, shared)
        log.debug(f'added ``{new}`` at ``{shared}``, support ``{len(model)}`` worlds')
    pr = _to_interpretation(t.nodes, model)
    violated = check_kb(pr, t.kb)
    if violated or not prob_of(pr, ConjunctiveEvent(frozenset(t.nodes))) > 0:
        raise ModelConstructionError(f'constructed interpretation fails, ``{[c.render() for c in violated]}``', kind='not_a_model')
    return pr


def rescale_model(pr: Interpretation, s: Fraction) -> Interpretation:
    """
    Scales every world by s and gives the all-false world the remaining 1 - s.
    """
    s = Fraction(s)
    if not 0 <= s <= 1:
        raise ModelConstructionError(f'scale factor outside [0, 1], ``{s}``', kind='bad_scale')
    scaled = {bits: s * mass for bits, mass in pr.mass.items()}
    scaled[0] = scaled.get(0, Fraction(0)) + 1 - s
    return Interpretation(pr.events, scaled)


## 3-colorability ---------------------------------------------------


@dataclass(frozen=True)
class Graph:
    vertices: frozenset[str]
    edges: frozenset[frozenset[str]]

    def __post_init__(self) -> None:
        for edge in self.edges:
            if len(edge) != 2:
                raise PreconditionError(f'self-loop or malformed edge ``{sorted(edge)}``', kind='bad_edge')
            if not edge <= self.vertices:
                raise PreconditionError(f'edge ``{sorted(edge)}`` uses undeclared vertices', kind='bad_edge')

    @classmethod
    def of(cls, vertices: Iterable[str], edges: Iterable[tuple[str, str]]) -> 'Graph':
        return cls(frozenset(vertices), frozenset(frozenset(edge) for edge in edges))

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(tuple(sorted(edge)) for edge in self.edges)


def color_event(vertex: str, color: int) -> str:
    return f'B_{vertex}_{color}'


def encode_3col(g: Graph) -> KnowledgeBase:
    """
    Knowledge base over B and B_v_i (i = 1..3) that has a model with Pr(B) > 0 iff `g` is 3-colorable.
    """
    base = ConjunctiveEvent.of('B')
    events: set[str] = {'B'}
    constraints: list[ConditionalConstraint] = []
    colors = (1, 2, 3)
    for vertex in sorted(g.vertices):
        for i in colors:
            event = ConjunctiveEvent.of(color_event(vertex, i))
            events.add(color_event(vertex, i))
            constraints.append(ConditionalConstraint(base, event, 1, 1))
            constraints.append(ConditionalConstraint(event, base, Fraction(1, 3), Fraction(1, 3)))
        for i in colors:
            for j in colors:
                if i < j:
                    constraints.append(
                        ConditionalConstraint(
                            ConjunctiveEvent.of(color_event(vertex, j)), ConjunctiveEvent.of(color_event(vertex, i)), 0, 0
                        )
                    )
    for first, second in g.sorted_edges():
        for i in colors:
            constraints.append(
                ConditionalConstraint(
                    ConjunctiveEvent.of(color_event(second, i)), ConjunctiveEvent.of(color_event(first, i)), 0, 0
                )
            )
    log.debug(f'encoded ``{len(g.vertices)}`` vertices into ``{len(constraints)}`` constraints')
    return KnowledgeBase(frozenset(events), tuple(constraints))
