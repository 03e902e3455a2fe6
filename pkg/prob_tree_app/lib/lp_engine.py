"""
Least upper bounds on general (interval) trees: min-expression triples built bottom-up, the J constraints
tying child variables to their parents, and the linear program whose optimum is the tight upper bound.

Variables: `x` is the objective, `x_<node>` stands for Pr(node L(node-up)) scaled so the root is 1.

Called by:
    - prob_tree_app.lib.query_planner
    - prob_tree_app.lib.cli_helpers (emit-lp, bench)
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction

from prob_tree_app.lib.linear_forms import LinearConstraint, LinearProgram, LinExpr, MinExpr
from prob_tree_app.lib.model_core import TightAnswer, format_decimal
from prob_tree_app.lib.propagation import lower_table, propagation_rows
from prob_tree_app.lib.simplex import SimplexError, solve_lp
from prob_tree_app.lib.tree_analysis import ConstraintTree, OrientedTree, PreconditionError, Query, orient, require_leaf_targets

log = logging.getLogger(__name__)

OBJECTIVE_VARIABLE: str = 'x'


def node_variable(node: str) -> str:
    return f'x_{node}'


def _x(node: str) -> LinExpr:
    return LinExpr.var(node_variable(node))


@dataclass(frozen=True)
class MinTriple:
    alpha: MinExpr
    beta: MinExpr
    gamma: MinExpr


## J constraints ----------------------------------------------------


def build_j_constraints(ot: OrientedTree) -> list[LinearConstraint]:
    """
    Pins the root variable to 1 and bounds every child variable by its forward interval times the parent variable.
    """
    root = _x(ot.root)
    constraints: list[LinearConstraint] = [LinearConstraint(root, '>=', Fraction(1)), LinearConstraint(root, '<=', Fraction(1))]
    for parent, child in ot.edges():
        lower, upper = ot.forward(parent, child)
        constraints.append(LinearConstraint.compare(_x(child), '>=', _x(parent).scale(lower)))
        constraints.append(LinearConstraint.compare(_x(child), '<=', _x(parent).scale(upper)))
    return constraints


## min-expression triples -------------------------------------------


def _leaf_triple(node: str) -> MinTriple:
    x_node = _x(node)
    return MinTriple(MinExpr.of(x_node), MinExpr.of(LinExpr.zero()), MinExpr.of(x_node))


def _chain_triple(ot: OrientedTree, parent: str, child: str, below: MinTriple, collapse_leaf_chaining: bool) -> MinTriple:
    v = ot.backward(parent, child)[0]
    x_parent, x_child = _x(parent), _x(child)
    if collapse_leaf_chaining and ot.is_leaf(child):
        alpha = MinExpr.of(x_child)
    else:
        alpha = MinExpr.of(x_parent).union(
            below.beta.map(lambda e: x_child + e.scale(1 / v)),
            below.alpha.map(lambda e: x_parent - x_child + e.scale(1 / v)),
        )
    base = x_child.scale((1 - v) / v)
    beta = below.beta.map(lambda e: base + e.scale(1 / v))
    gamma = below.gamma.map(lambda e: e.scale(1 / v))
    return MinTriple(alpha, beta, gamma)


def _fuse_triples(parts: list[MinTriple]) -> MinTriple:
    alpha = parts[0].alpha.union(*(p.alpha for p in parts[1:]))
    beta = parts[0].beta.union(*(p.beta for p in parts[1:]))
    crossed: set[LinExpr] = set()
    for i, left in enumerate(parts):
        for j, right in enumerate(parts):
            if i == j:
                continue
            crossed.update(a + b for a in left.alpha.operands for b in right.beta.operands)
    gamma = parts[0].gamma.union(*(p.gamma for p in parts[1:]), MinExpr(frozenset(crossed)))
    return MinTriple(alpha, beta, gamma)


def minexpr_table(
    ot: OrientedTree, collapse_leaf_chaining: bool = True
) -> tuple[dict[str, MinTriple], dict[tuple[str, str], MinTriple]]:
    """
    Computes the triples of every node (fused over all children) and of every parent-child chaining.
    """
    fused: dict[str, MinTriple] = {}
    chained: dict[tuple[str, str], MinTriple] = {}
    for node in ot.order:
        kids = ot.children[node]
        if not kids:
            fused[node] = _leaf_triple(node)
            continue
        for kid in kids:
            chained[(node, kid)] = _chain_triple(ot, node, kid, fused[kid], collapse_leaf_chaining)
        fused[node] = chained[(node, kids[0])] if len(kids) == 1 else _fuse_triples([chained[(node, kid)] for kid in kids])
    return fused, chained


def build_minexpr_triples(ot: OrientedTree, node: str, collapse_leaf_chaining: bool = True) -> MinTriple:
    return minexpr_table(ot, collapse_leaf_chaining)[0][node]


def subsume(m: MinExpr) -> MinExpr:
    """
    Drops every operand dominated coefficient-wise by another; the minimum over nonnegative points is unchanged.
    """
    operands = m.sorted_operands()
    kept: list[LinExpr] = []
    for candidate in operands:
        if any(other is not candidate and other.dominates(candidate) for other in operands):
            continue
        kept.append(candidate)
    return MinExpr(frozenset(kept))


## assembly ---------------------------------------------------------


def _bound_operands(ot: OrientedTree, subsumed: bool, collapse_leaf_chaining: bool) -> tuple[MinExpr, MinExpr]:
    triple = build_minexpr_triples(ot, ot.root, collapse_leaf_chaining)
    if subsumed:
        return subsume(triple.alpha), subsume(triple.gamma)
    return triple.alpha, triple.gamma


def assemble_upper_lp(ot: OrientedTree, subsumed: bool = True, collapse_leaf_chaining: bool = True) -> LinearProgram:
    """
    Maximize x subject to x <= each operand of the root's alpha and gamma sets, plus the J constraints.
    """
    alpha, gamma = _bound_operands(ot, subsumed, collapse_leaf_chaining)
    x = LinExpr.var(OBJECTIVE_VARIABLE)
    bounds = [LinearConstraint.compare(x, '<=', e) for m in (alpha, gamma) for e in m.sorted_operands()]
    variables = (OBJECTIVE_VARIABLE,) + tuple(node_variable(node) for node in ot.tree.nodes)
    lp = LinearProgram(variables, tuple(bounds + build_j_constraints(ot)), x, 'maximize')
    log.debug(f'assembled LP at ``{ot.root}``, ``{len(alpha)}`` alpha and ``{len(gamma)}`` gamma operands')
    return lp


def count_inequalities(
    ot: OrientedTree, subsumed: bool = False, collapse_leaf_chaining: bool = True, include_nonnegativity: bool = False
) -> int:
    """
    J constraints (root pin counted twice) plus one x-bound per alpha and gamma operand;
    `include_nonnegativity` adds x >= 0 and x_G >= 0 for every node.
    """
    alpha, gamma = _bound_operands(ot, subsumed, collapse_leaf_chaining)
    total = 2 * ot.tree.size + len(alpha) + len(gamma)
    if include_nonnegativity:
        total += ot.tree.size + 1
    return total


def inequality_counts(ot: OrientedTree) -> Mapping[str, int]:
    """
    All counting conventions side by side.
    Called by: cli_helpers bench
    """
    return {
        'raw': count_inequalities(ot),
        'subsumed': count_inequalities(ot, subsumed=True),
        'expanded': count_inequalities(ot, collapse_leaf_chaining=False, include_nonnegativity=True),
        'expanded_subsumed': count_inequalities(
            ot, subsumed=True, collapse_leaf_chaining=False, include_nonnegativity=True
        ),
    }


## answers ----------------------------------------------------------


def upper_lp_for_query(t: ConstraintTree, q: Query, subsumed: bool = True) -> LinearProgram:
    """
    Called by: answer_premise_restricted_general(), cli_helpers emit-lp
    """
    if not q.premise.is_basic:
        raise PreconditionError(f'``{q.render()}`` is not premise-restricted', kind='classification')
    root = q.premise.single()
    require_leaf_targets(t, root, q.conclusion.atoms)
    return assemble_upper_lp(orient(t, root), subsumed=subsumed)


def answer_premise_restricted_general(t: ConstraintTree, q: Query) -> TightAnswer:
    """
    Tight answer of a complete premise-restricted query on any tree: propagated lower bound, LP upper bound.
    Called by: query_planner.answer_with_plan()
    """
    lp = upper_lp_for_query(t, q)
    root = q.premise.single()
    ot = orient(t, root)
    lower = lower_table(ot)
    outcome = solve_lp(lp)
    if not outcome.is_optimal:
        raise SimplexError(f'upper-bound LP is ``{outcome.status}``', kind='not_optimal')
    assert outcome.value is not None
    log.debug(f'general engine at ``{root}``, ``[{format_decimal(lower.fused[root])}, {format_decimal(outcome.value)}]``')
    trace = (
        f'premise-restricted, lower bound by propagation over {len(ot.order)} nodes rooted at {root}',
        f'LP: {len(lp.variables)} variables, {lp.inequality_count} inequalities',
    )
    table = tuple(row.cells() for row in propagation_rows(ot, lower))
    return TightAnswer(lower.fused[root], outcome.value, trace=trace, table=table, source='general')
