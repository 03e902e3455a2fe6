"""
Answers any valid query on a conditional constraint tree: reduce to a complete query, then dispatch to the
exact propagation engine, the LP engine, the conclusion-restricted rules, or a split at a common node.

Called by:
    - prob_tree_app.lib.cli_helpers (query)
    - scripts/oracle_sweep.py
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

from prob_tree_app.lib.lp_engine import answer_premise_restricted_general
from prob_tree_app.lib.model_core import ConditionalConstraint, ConjunctiveEvent, KnowledgeBase, TightAnswer, format_decimal
from prob_tree_app.lib.propagation import (
    answer_premise_restricted_exact,
    answer_strongly_conclusion_restricted,
    lower_table,
    upper_table,
)
from prob_tree_app.lib.tree_analysis import (
    ConstraintTree,
    PreconditionError,
    Query,
    QueryKind,
    fresh_name,
    implies_all,
    orient,
    reduce_to_complete,
    split_at_articulation,
    validate_query,
    validate_tree,
)

log = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)
PREMISE_NODE_SUFFIX: str = '__premise'


@dataclass(frozen=True)
class PlanStep:
    """
    `kind` is one of reduce, premise_restricted, conclusion_restricted, split.
    """

    kind: str
    detail: str

    def render(self) -> str:
        return f'{self.kind}: {self.detail}'


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...]

    def kinds(self) -> tuple[str, ...]:
        return tuple(step.kind for step in self.steps)

    def render(self) -> str:
        return '\n'.join(step.render() for step in self.steps)


## closed form ------------------------------------------------------


def closed_form_split_exact(u1: Fraction, v1: Fraction, s1: Fraction, s2: Fraction, t2: Fraction) -> tuple[Fraction, Fraction]:
    """
    Tight answer of a split query on an exact tree from the premise-side lower bounds u1, v1
    and the conclusion-side values s1 (alpha1), s2 (alpha2), t2 (gamma2) at the split node.
    """
    if u1 == 0:
        raise PreconditionError('the split closed form needs u1 > 0', kind='zero_u1')
    denominator = t2 - s2 + u1
    assert denominator > 0
    lower = max(ZERO, v1 - v1 / u1 + v1 * s1 / u1)
    upper = min(ONE, 1 - v1 + v1 * s2 / u1, t2 / denominator)
    return lower, upper


## dispatch ---------------------------------------------------------


def _premise_restricted(t: ConstraintTree, q: Query, steps: list[PlanStep]) -> TightAnswer:
    if t.is_exact:
        steps.append(PlanStep('premise_restricted', f'exact engine for {q.render()}'))
        return answer_premise_restricted_exact(t, q)
    steps.append(PlanStep('premise_restricted', f'general engine for {q.render()}'))
    return answer_premise_restricted_general(t, q)


def _dispatch(
    t: ConstraintTree, q: Query, steps: list[PlanStep], allow_split: bool = True, closed_form: bool = True
) -> TightAnswer:
    classification = validate_query(t, q)
    ## restricted engines check their own leaf targets; a basic side may sit inside the tree
    if classification.kind == QueryKind.PREMISE_RESTRICTED:
        return _premise_restricted(t, q, steps)
    if classification.kind == QueryKind.STRONGLY_CONCLUSION_RESTRICTED:
        steps.append(PlanStep('conclusion_restricted', f'conclusion rules for {q.render()}'))
        return answer_strongly_conclusion_restricted(t, q)
    if not allow_split:
        raise PreconditionError(f'nested split for ``{q.render()}``', kind='nested_split')
    if not classification.complete:
        raise PreconditionError(f'``{q.render()}`` is not complete after reduction', kind='incomplete')
    return _split(t, q, steps, closed_form)


def _split(t: ConstraintTree, q: Query, steps: list[PlanStep], closed_form: bool) -> TightAnswer:
    """
    Cuts the tree at a common node G, answers (E|G) and (G|E) on the premise side and combines them
    with the conclusion side. Exact trees use the closed form unless `closed_form` is off.
    """
    split = split_at_articulation(t, q)
    node = split.node
    g_event = ConjunctiveEvent.of(node)
    sub_steps: list[PlanStep] = []
    forward = _dispatch(split.premise_side, Query(q.premise, g_event), sub_steps, allow_split=False)
    backward = _dispatch(split.premise_side, Query(g_event, q.premise), sub_steps, allow_split=False)
    u1, u2, v1, v2 = forward.lower, forward.upper, backward.lower, backward.upper
    steps.append(
        PlanStep(
            'split',
            f'G = {node}; ({q.premise.render()}|{node}) in [{u1}, {u2}], ({node}|{q.premise.render()}) in [{v1}, {v2}]',
        )
    )
    steps.extend(sub_steps)
    head = (
        f'split at G = {node}',
        f'u = ({q.premise.render()}|{node}) ~ [{format_decimal(u1)}, {format_decimal(u2)}]',
        f'v = ({node}|{q.premise.render()}) ~ [{format_decimal(v1)}, {format_decimal(v2)}]',
    )
    conclusion_side = split.conclusion_side
    residual = Query(q.conclusion, g_event)

    if u1 > 0:
        assert v1 > 0
        if t.is_exact and closed_form:
            ot = orient(conclusion_side, node)
            s1 = lower_table(ot).fused[node]
            triple = upper_table(ot)[0][node]
            lower, upper = closed_form_split_exact(u1, v1, s1, triple.alpha2, triple.gamma2)
            trace = head + (
                f'split, case (1) closed form: s1 = {format_decimal(s1)}, s2 = {format_decimal(triple.alpha2)}, '
                f't2 = {format_decimal(triple.gamma2)}',
            )
            return TightAnswer(lower, upper, trace=trace, source='split')
        synthetic = fresh_name(node, PREMISE_NODE_SUFFIX, conclusion_side.kb.events | q.premise.atoms)
        extended = _attach_premise_node(conclusion_side, node, synthetic, (u1, u2), (v1, v2))
        residual = Query(q.conclusion, ConjunctiveEvent.of(synthetic))
        steps.append(PlanStep('premise_restricted', f'general engine for {residual.render()} on the synthetic edge'))
        answer = answer_premise_restricted_general(extended, residual)
        trace = head + (f'split, case (1): synthetic premise {synthetic} attached to {node}',) + answer.trace
        return TightAnswer(answer.lower, answer.upper, trace=trace, table=answer.table, source='split')

    if v1 == 1 and implies_all(conclusion_side, node, q.conclusion):
        label = f'split, case (2): u1 = 0, v1 = 1 and {node} certainly implies {residual.conclusion.render()}'
        return TightAnswer(ONE, ONE, trace=head + (label,), source='split')
    return TightAnswer(ZERO, ONE, trace=head + ('split, case (3): no bound beyond [0, 1]',), source='split')


def _attach_premise_node(
    t: ConstraintTree, node: str, synthetic: str, forward: tuple[Fraction, Fraction], backward: tuple[Fraction, Fraction]
) -> ConstraintTree:
    """
    Adds (synthetic|node)[forward] and (node|synthetic)[backward] to `t`.
    """
    syn, at = ConjunctiveEvent.of(synthetic), ConjunctiveEvent.of(node)
    constraints = t.kb.constraints + (
        ConditionalConstraint(syn, at, *forward),
        ConditionalConstraint(at, syn, *backward),
    )
    return validate_tree(KnowledgeBase(t.kb.events | {synthetic}, constraints))


## public -----------------------------------------------------------


def answer_with_plan(t: ConstraintTree, q: Query, closed_form: bool = True) -> tuple[TightAnswer, Plan]:
    """
    Runs the full pipeline and returns the answer with the steps taken.
    With `closed_form` off, exact split queries go through the synthetic edge and the LP engine.
    Called by: answer(), cli_helpers `query --trace`
    """
    validate_query(t, q)
    steps: list[PlanStep] = []
    reduction = reduce_to_complete(t, q)
    if reduction.changed:
        steps.append(PlanStep('reduce', '; '.join(reduction.notes)))
    answer = _dispatch(reduction.tree, reduction.query, steps, closed_form=closed_form)
    prefix: tuple[str, ...] = ()
    if reduction.changed:
        prefix = (f'reduced {q.render()} to {reduction.query.render()}',) + tuple(reduction.notes)
    plan = Plan(tuple(steps))
    bounds = f'[{format_decimal(answer.lower)}, {format_decimal(answer.upper)}]'
    log.info(f'answered ``{q.render()}`` with plan ``{plan.kinds()}``, ``{bounds}``')
    return answer.with_trace(*prefix), plan


def answer(t: ConstraintTree, q: Query) -> TightAnswer:
    return answer_with_plan(t, q)[0]


def entails_interval(result: TightAnswer, x1: Fraction, x2: Fraction) -> bool:
    """
    True iff the tight answer lies inside [x1, x2], or no model gives the premise positive probability.
    """
    return result.empty_consequence or (x1 <= result.lower and result.upper <= x2)


def is_logical_consequence(t: ConstraintTree, q: Query, x1: Fraction, x2: Fraction) -> bool:
    """
    True iff (F|E)[x1, x2] follows from the tree.
    """
    return entails_interval(answer(t, q), x1, x2)
