"""
Local bound propagation over oriented trees with the LEAF, CHAINING and FUSION rules.

- lower bounds (alpha1) from lower interval endpoints; valid for exact and interval trees
- upper triples (alpha2, beta2, gamma2) for exact trees
- conclusion-side lower bounds (delta1)

Called by:
    - prob_tree_app.lib.lp_engine (lower bound of the general engine)
    - prob_tree_app.lib.query_planner
"""

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Generic, TypeVar

from prob_tree_app.lib.model_core import ConjunctiveEvent, ProbTreeError, TightAnswer, format_decimal
from prob_tree_app.lib.tree_analysis import (
    ConstraintTree,
    OrientedTree,
    PreconditionError,
    Query,
    implies_exists,
    is_strongly_conclusion_restricted,
    orient,
    require_leaf_targets,
)

log = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)

EdgeMap = Mapping[tuple[str, str], Fraction]
V = TypeVar('V', Fraction, 'UpperTriple')


class PropagationInvariantError(ProbTreeError):
    """
    Raised when a computed upper triple breaks alpha2 <= gamma2, beta2 <= gamma2 or gamma2 <= alpha2 + beta2.
    """

    pass


## value types ------------------------------------------------------


@dataclass(frozen=True)
class UpperTriple:
    alpha2: Fraction
    beta2: Fraction
    gamma2: Fraction

    def check(self, where: str) -> 'UpperTriple':
        if not (self.alpha2 <= self.gamma2 and self.beta2 <= self.gamma2 and self.gamma2 <= self.alpha2 + self.beta2):
            raise PropagationInvariantError(f'upper triple out of shape at ``{where}``, ``{self}``', kind='triple_shape')
        return self


LEAF_TRIPLE = UpperTriple(ONE, ZERO, ONE)


@dataclass(frozen=True)
class PropagationRow:
    """
    One rule application: the value of `node` over the leaves `covered`.
    """

    stratum: int
    node: str
    covered: ConjunctiveEvent
    alpha1: Fraction
    upper: UpperTriple | None
    rule: str

    def cells(self, places: int = 4) -> tuple[str, ...]:
        upper_cells: tuple[str, ...] = ('', '', '')
        if self.upper is not None:
            upper_cells = tuple(format_decimal(v, places) for v in (self.upper.alpha2, self.upper.beta2, self.upper.gamma2))
        return (
            str(self.stratum),
            self.node,
            self.covered.render(),
            format_decimal(self.alpha1, places),
            *upper_cells,
            f'({self.rule})',
        )


ROW_HEADER: tuple[str, ...] = ('strata', 'B', 'D', 'alpha1', 'alpha2', 'beta2', 'gamma2', 'rule')


## lower bounds -----------------------------------------------------


def chain_lower(forward_lower: Fraction, backward_lower: Fraction, child_alpha1: Fraction) -> Fraction:
    return max(ZERO, forward_lower * (1 + (child_alpha1 - 1) / backward_lower))


def fuse_lower(values: list[Fraction]) -> Fraction:
    return max(ZERO, 1 - len(values) + sum(values, ZERO))


class RepeatedStep(Generic[V]):
    """
    Applies a CHAINING rule, reusing the previous result while the interval bounds and the child value repeat.
    A result equal to its child value is replaced by the child object, so a chain that reaches a fixed point
    is matched by identity from then on.
    """

    def __init__(
        self, rule: Callable[[Fraction, Fraction, V], V], check: Callable[[V, str], V] | None = None
    ) -> None:
        self.rule = rule
        self.check = check
        self.last: tuple[Fraction, Fraction, V] | None = None
        self.value: V | None = None

    def __call__(self, forward: Fraction, backward: Fraction, child: V, where: tuple[str, str] = ('', '')) -> V:
        key = (forward, backward, child)
        if key != self.last:
            value = self.rule(forward, backward, child)
            if self.check is not None:
                value = self.check(value, f'{where[0]} over {where[1]}')
            self.last, self.value = key, child if value == child else value
        return self.value  # type: ignore[return-value]


@dataclass(frozen=True)
class LowerTable:
    """
    `fused[B]` is alpha1 of B over all of its children; `chained[(B, C)]` is alpha1 of B over child C alone.
    """

    fused: Mapping[str, Fraction]
    chained: Mapping[tuple[str, str], Fraction]


def lower_table(ot: OrientedTree, lower_forward: EdgeMap | None = None, lower_backward: EdgeMap | None = None) -> LowerTable:
    """
    Computes alpha1 for every node, children first.
    Edge maps are keyed by (parent, child); by default they hold the lower endpoints of (child|parent) and (parent|child).
    """
    fused: dict[str, Fraction] = {}
    chained: dict[tuple[str, str], Fraction] = {}
    step = RepeatedStep(chain_lower)
    for node in ot.order:
        kids = ot.children[node]
        if not kids:
            fused[node] = ONE
            continue
        for kid in kids:
            edge = (node, kid)
            forward = lower_forward[edge] if lower_forward is not None else ot.forward(node, kid)[0]
            backward = lower_backward[edge] if lower_backward is not None else ot.backward(node, kid)[0]
            chained[edge] = step(forward, backward, fused[kid])
        fused[node] = chained[(node, kids[0])] if len(kids) == 1 else fuse_lower([chained[(node, kid)] for kid in kids])
    return LowerTable(fused, chained)


def h1_alpha(
    ot: OrientedTree, node: str, lower_forward: EdgeMap | None = None, lower_backward: EdgeMap | None = None
) -> Fraction:
    """
    Greatest lower bound factor of Pr(B L(B-up)) / Pr(B) at `node`.
    """
    return lower_table(ot, lower_forward, lower_backward).fused[node]


def delta_table(ot: OrientedTree, lower: LowerTable) -> dict[str, Fraction | None]:
    """
    Computes delta1 for every node with alpha1 > 0; None elsewhere.
    """
    fused: dict[str, Fraction | None] = {}
    chained: dict[tuple[str, str], Fraction | None] = {}
    for node in ot.order:
        kids = ot.children[node]
        if not kids:
            fused[node] = ONE
            continue
        for kid in kids:
            edge = (node, kid)
            if lower.chained[edge] > 0:
                backward = ot.backward(node, kid)[0]
                chained[edge] = fused[kid] * (1 + (backward - 1) / lower.fused[kid])
            else:
                chained[edge] = None
        if lower.fused[node] == 0:
            fused[node] = None
        elif len(kids) == 1:
            fused[node] = chained[(node, kids[0])]
        else:
            alphas = [lower.chained[(node, kid)] for kid in kids]
            denominator = 1 - len(kids) + sum(alphas, ZERO)
            worst = min(alpha * (1 / chained[(node, kid)] - 1) for alpha, kid in zip(alphas, kids))
            fused[node] = 1 / (1 + worst / denominator)
    return fused


def h1_delta(ot: OrientedTree, node: str) -> Fraction:
    """
    Greatest lower bound factor of Pr(B L(B-up)) / Pr(L(B-up)) at `node`; needs alpha1 > 0.
    """
    lower = lower_table(ot)
    if lower.fused[node] == 0:
        raise PreconditionError(f'delta1 is undefined at ``{node}`` because alpha1 is 0', kind='zero_alpha')
    value = delta_table(ot, lower)[node]
    assert value is not None and value > 0
    return value


## upper triples (exact trees) --------------------------------------


def chain_upper(forward: Fraction, backward: Fraction, child: UpperTriple) -> UpperTriple:
    u, v = forward, backward
    gamma2 = u * child.gamma2 / v
    alpha2 = min(ONE, gamma2, 1 - u * (1 - child.alpha2 / v), u * (1 + child.beta2 / v))
    beta2 = min(u * ((child.beta2 + 1) / v - 1), gamma2)
    return UpperTriple(alpha2, beta2, gamma2)


def fuse_upper(triples: list[UpperTriple]) -> UpperTriple:
    alpha2 = min(t.alpha2 for t in triples)
    beta2 = min(t.beta2 for t in triples)
    gamma2 = min(min(t.gamma2 for t in triples), alpha2 + beta2)
    return UpperTriple(alpha2, beta2, gamma2)


def require_exact(ot: OrientedTree) -> None:
    if not ot.tree.is_exact:
        raise PreconditionError('upper-triple propagation needs an exact tree', kind='not_exact')


def upper_table(ot: OrientedTree) -> tuple[dict[str, UpperTriple], dict[tuple[str, str], UpperTriple]]:
    """
    Computes the (alpha2, beta2, gamma2) triples of every node and every parent-child chaining.
    """
    require_exact(ot)
    fused: dict[str, UpperTriple] = {}
    chained: dict[tuple[str, str], UpperTriple] = {}
    step = RepeatedStep(chain_upper, UpperTriple.check)
    for node in ot.order:
        kids = ot.children[node]
        if not kids:
            fused[node] = LEAF_TRIPLE
            continue
        for kid in kids:
            edge = (node, kid)
            chained[edge] = step(ot.forward(node, kid)[0], ot.backward(node, kid)[0], fused[kid], where=edge)
        if len(kids) == 1:
            fused[node] = chained[(node, kids[0])]
        else:
            fused[node] = fuse_upper([chained[(node, kid)] for kid in kids]).check(node)
    return fused, chained


def h2_triple(ot: OrientedTree, node: str) -> UpperTriple:
    return upper_table(ot)[0][node]


## trace rows -------------------------------------------------------


def propagation_rows(
    ot: OrientedTree,
    lower: LowerTable,
    upper: tuple[dict[str, UpperTriple], dict[tuple[str, str], UpperTriple]] | None = None,
) -> list[PropagationRow]:
    """
    Lists every rule application in processing order, in the layout of a strata table.
    """
    fused_upper, chained_upper = upper if upper is not None else ({}, {})
    rows: list[PropagationRow] = []
    for node in ot.order:
        stratum = ot.strata[node]
        kids = ot.children[node]
        if not kids:
            rows.append(PropagationRow(stratum, node, ot.covered(node), ONE, fused_upper.get(node), 'LEAF'))
            continue
        for kid in kids:
            edge = (node, kid)
            rows.append(
                PropagationRow(stratum, node, ot.covered(kid), lower.chained[edge], chained_upper.get(edge), 'CHAINING')
            )
        if len(kids) > 1:
            rows.append(PropagationRow(stratum, node, ot.covered(node), lower.fused[node], fused_upper.get(node), 'FUSION'))
    return rows


def propagate_exact(ot: OrientedTree) -> list[PropagationRow]:
    return propagation_rows(ot, lower_table(ot), upper_table(ot))


## answers ----------------------------------------------------------


def answer_premise_restricted_exact(t: ConstraintTree, q: Query, with_table: bool = True) -> TightAnswer:
    """
    Tight answer [alpha1(E), alpha2(E)] of a complete premise-restricted query on an exact tree.
    Called by: query_planner.answer_with_plan()
    """
    if not q.premise.is_basic:
        raise PreconditionError(f'``{q.render()}`` is not premise-restricted', kind='classification')
    root = q.premise.single()
    require_leaf_targets(t, root, q.conclusion.atoms)
    ot = orient(t, root)
    lower = lower_table(ot)
    upper = upper_table(ot)
    alpha1, alpha2 = lower.fused[root], upper[0][root].alpha2
    log.debug(f'exact propagation at ``{root}``, ``[{format_decimal(alpha1)}, {format_decimal(alpha2)}]``')
    table = tuple(row.cells() for row in propagation_rows(ot, lower, upper)) if with_table else ()
    return TightAnswer(
        alpha1,
        alpha2,
        trace=(f'premise-restricted, exact propagation over {len(ot.order)} nodes rooted at {root}',),
        table=table,
        source='exact',
    )


def answer_strongly_conclusion_restricted(t: ConstraintTree, q: Query) -> TightAnswer:
    """
    Tight answer of a strongly conclusion-restricted query ∃(F|E): orient at F and branch on alpha1 of ∃(E|F).
    Called by: query_planner.answer_with_plan()
    """
    if not is_strongly_conclusion_restricted(t, q):
        raise PreconditionError(f'``{q.render()}`` is not strongly conclusion-restricted', kind='classification')
    root = q.conclusion.single()
    require_leaf_targets(t, root, q.premise.atoms)
    ot = orient(t, root)
    lower = lower_table(ot)
    alpha1 = lower.fused[root]
    table = tuple(row.cells() for row in propagation_rows(ot, lower))
    if alpha1 > 0:
        delta1 = delta_table(ot, lower)[root]
        assert delta1 is not None
        trace = (
            f'strongly conclusion-restricted, case (1): alpha1 of ({q.premise.render()}|{root}) is '
            f'{format_decimal(alpha1)} > 0, lower bound is delta1 = {format_decimal(delta1)}',
        )
        return TightAnswer(delta1, ONE, trace=trace, table=table, source='conclusion')
    if implies_exists(t, q.premise, root):
        trace = (f'strongly conclusion-restricted, case (2): alpha1 is 0 and {q.premise.render()} certainly implies {root}',)
        return TightAnswer(ONE, ONE, trace=trace, table=table, source='conclusion')
    trace = ('strongly conclusion-restricted, case (3): alpha1 is 0 and no certain path',)
    return TightAnswer(ZERO, ONE, trace=trace, table=table, source='conclusion')
