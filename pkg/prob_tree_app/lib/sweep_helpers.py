"""
Planner-versus-oracle sweep over seeded random trees: every tree gets one random query per query class,
answered by the query planner and by the classical LP over all worlds, and the two answers must agree exactly.

Called by:
    - scripts/oracle_sweep.py
    - prob_tree_app.tests.test_oracle_sweep
"""

import logging
import random
from dataclasses import dataclass, field

from django.conf import settings as project_settings

from prob_tree_app.lib.model_core import TightAnswer
from prob_tree_app.lib.oracle import oracle_answer
from prob_tree_app.lib.query_planner import answer_with_plan
from prob_tree_app.lib.random_trees import random_query, random_tree
from prob_tree_app.lib.tree_analysis import ConstraintTree, PreconditionError, Query, QueryKind

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Mismatch:
    tree_index: int
    query: str
    planner: str
    oracle: str


@dataclass
class SweepReport:
    trees: int = 0
    queries: int = 0
    by_kind: dict[str, int] = field(default_factory=dict)
    mismatches: list[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def summary(self) -> str:
        kinds = ', '.join(f'{kind} {count}' for kind, count in sorted(self.by_kind.items()))
        return f'{self.trees} trees, {self.queries} queries ({kinds}), {len(self.mismatches)} mismatches'


def _render(answer: TightAnswer) -> str:
    if answer.empty_consequence:
        return '[1, 0] (empty)'
    return f'[{answer.lower}, {answer.upper}]'


def same_answer(first: TightAnswer, second: TightAnswer) -> bool:
    if first.empty_consequence or second.empty_consequence:
        return first.empty_consequence == second.empty_consequence
    return (first.lower, first.upper) == (second.lower, second.upper)


def compare_query(t: ConstraintTree, q: Query) -> tuple[TightAnswer, TightAnswer]:
    """
    Returns (planner answer, oracle answer).
    """
    planner, _plan = answer_with_plan(t, q)
    return planner, oracle_answer(t.kb, q)


def run_sweep(seed: int, trees: int, max_n: int) -> SweepReport:
    """
    Even-numbered trees are exact, odd-numbered ones interval-valued; sizes are drawn from 2..max_n.
    """
    cap = project_settings.PROBTREE_SWEEP_WORLD_CAP
    if max_n > cap:
        raise PreconditionError(f'``max_n`` of ``{max_n}`` exceeds the sweep world cap of ``{cap}``', kind='world_cap')
    rng = random.Random(seed)
    report = SweepReport()
    for index in range(trees):
        t = random_tree(rng, rng.randint(2, max_n), exact=index % 2 == 0)
        report.trees += 1
        for kind in QueryKind:
            q = random_query(rng, t, kind)
            if q is None:
                continue
            planner, oracle = compare_query(t, q)
            report.queries += 1
            report.by_kind[kind.value] = report.by_kind.get(kind.value, 0) + 1
            if not same_answer(planner, oracle):
                mismatch = Mismatch(index, q.render(), _render(planner), _render(oracle))
                log.warning(f'mismatch on tree ``{index}``, ``{mismatch}``')
                report.mismatches.append(mismatch)
        log.debug(f'tree ``{index}`` of size ``{t.size}`` done')
    log.info(f'sweep finished, ``{report.summary()}``')
    return report
