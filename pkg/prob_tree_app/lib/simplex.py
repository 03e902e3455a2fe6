"""
Solves LinearPrograms: an exact two-phase simplex over Fractions (Bland's rule), or scipy's HiGHS for
programs too wide for exact arithmetic.

Called by:
    - prob_tree_app.lib.lp_engine
    - prob_tree_app.lib.oracle
"""

import logging
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from prob_tree_app.lib.linear_forms import LinearProgram, LpOutcome
from prob_tree_app.lib.model_core import ProbTreeError, format_decimal

log = logging.getLogger(__name__)

ZERO = Fraction(0)


class SimplexError(ProbTreeError):
    """
    Raised when a solver returns a status or a point that cannot be trusted.
    """

    pass


## standard form ----------------------------------------------------


class _StandardForm:
    """
    Rows `A x = b` with b >= 0 over nonnegative columns, plus bookkeeping to map columns back to variables.
    """

    def __init__(self, lp: LinearProgram) -> None:
        self.columns: list[tuple[str, int]] = []  # (variable, sign)
        index: dict[tuple[str, int], int] = {}
        for name in lp.variables:
            for sign in (1,) if name in lp.nonnegative else (1, -1):
                index[(name, sign)] = len(self.columns)
                self.columns.append((name, sign))
        self.structural = len(self.columns)
        self.rows: list[dict[int, Fraction]] = []
        self.rhs: list[Fraction] = []
        self.relations: list[str] = []
        for constraint in lp.constraints:
            row: dict[int, Fraction] = {}
            for name, value in constraint.expr.terms:
                row[index[(name, 1)]] = value
                if (name, -1) in index:
                    row[index[(name, -1)]] = -value
            relation, rhs = constraint.relation, constraint.rhs
            if rhs < 0 or (rhs == 0 and relation == '>='):
                row = {column: -value for column, value in row.items()}
                rhs = -rhs
                relation = {'<=': '>=', '>=': '<=', '=': '='}[relation]
            self.rows.append(row)
            self.rhs.append(rhs)
            self.relations.append(relation)
        sign = 1 if lp.sense == 'maximize' else -1
        self.cost: list[Fraction] = [ZERO] * self.structural
        for name, value in lp.objective.terms:
            self.cost[index[(name, 1)]] += sign * value
            if (name, -1) in index:
                self.cost[index[(name, -1)]] -= sign * value

    def point(self, values: list[Fraction]) -> dict[str, Fraction]:
        result: dict[str, Fraction] = {}
        for column, (name, sign) in enumerate(self.columns):
            result[name] = result.get(name, ZERO) + sign * values[column]
        return result


## exact tableau ----------------------------------------------------


class SimplexTableau:
    """
    Dense tableau with one basic column per row; `reduced` holds the reduced costs of the current objective.
    """

    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]) -> None:
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.reduced: list[Fraction] = []
        self.value: Fraction = ZERO
        self.pivots: int = 0

    @property
    def width(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def price(self, cost: list[Fraction]) -> None:
        """
        Sets reduced costs and objective value for `cost` under the current basis.
        """
        reduced = list(cost)
        value = ZERO
        for row, rhs, basic in zip(self.rows, self.rhs, self.basis):
            weight = cost[basic]
            if not weight:
                continue
            value += weight * rhs
            for column, entry in enumerate(row):
                if entry:
                    reduced[column] -= weight * entry
        self.reduced = reduced
        self.value = value

    def pivot(self, r: int, c: int) -> None:
        pivot_row = self.rows[r]
        p = pivot_row[c]
        if p != 1:
            pivot_row = [entry / p if entry else entry for entry in pivot_row]
            self.rows[r] = pivot_row
            self.rhs[r] /= p
        nonzero = [j for j, entry in enumerate(pivot_row) if entry]
        for i, row in enumerate(self.rows):
            factor = row[c]
            if i == r or not factor:
                continue
            for j in nonzero:
                row[j] -= factor * pivot_row[j]
            self.rhs[i] -= factor * self.rhs[r]
        factor = self.reduced[c]
        if factor:
            for j in nonzero:
                self.reduced[j] -= factor * pivot_row[j]
            self.value += factor * self.rhs[r]
        self.basis[r] = c
        self.pivots += 1

    def optimize(self, allowed: list[bool]) -> str:
        """
        Maximizes with Bland's rule over the `allowed` columns; returns 'optimal' or 'unbounded'.
        """
        while True:
            entering = next((j for j, d in enumerate(self.reduced) if d > 0 and allowed[j]), None)
            if entering is None:
                return 'optimal'
            leaving: int | None = None
            best: Fraction | None = None
            for i, row in enumerate(self.rows):
                entry = row[entering]
                if entry <= 0:
                    continue
                ratio = self.rhs[i] / entry
                if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leaving]):
                    leaving, best = i, ratio
            if leaving is None:
                return 'unbounded'
            self.pivot(leaving, entering)

    def drop_row(self, r: int) -> None:
        del self.rows[r]
        del self.rhs[r]
        del self.basis[r]

    def solution(self) -> list[Fraction]:
        values = [ZERO] * self.width
        for rhs, basic in zip(self.rhs, self.basis):
            values[basic] = rhs
        return values


def _solve_exact(lp: LinearProgram) -> LpOutcome:
    form = _StandardForm(lp)
    m = len(form.rows)
    extra: list[tuple[int, Fraction]] = []  # (row, coefficient) per added column
    basis: list[int | None] = [None] * m
    artificial: list[int] = []
    next_column = form.structural
    for i, relation in enumerate(form.relations):
        if relation in ('<=', '>='):
            extra.append((i, Fraction(1) if relation == '<=' else Fraction(-1)))
            if relation == '<=':
                basis[i] = next_column
            next_column += 1
    for i in range(m):
        if basis[i] is None:
            extra.append((i, Fraction(1)))
            basis[i] = next_column
            artificial.append(next_column)
            next_column += 1
    width = next_column
    rows: list[list[Fraction]] = []
    for i, sparse in enumerate(form.rows):
        dense = [ZERO] * width
        for column, value in sparse.items():
            dense[column] = value
        rows.append(dense)
    for offset, (i, value) in enumerate(extra):
        rows[i][form.structural + offset] = value
    tableau = SimplexTableau(rows, list(form.rhs), [b for b in basis if b is not None])
    is_artificial = [False] * width
    for column in artificial:
        is_artificial[column] = True

    ## phase 1
    if artificial:
        tableau.price([Fraction(-1) if flag else ZERO for flag in is_artificial])
        tableau.optimize([True] * width)
        if tableau.value < 0:
            log.debug(f'infeasible after ``{tableau.pivots}`` pivots')
            return LpOutcome(status='infeasible')
        for r in range(len(tableau.basis) - 1, -1, -1):
            if not is_artificial[tableau.basis[r]]:
                continue
            replacement = next((j for j, entry in enumerate(tableau.rows[r]) if entry and not is_artificial[j]), None)
            if replacement is None:
                tableau.drop_row(r)
            else:
                tableau.pivot(r, replacement)

    ## phase 2
    tableau.price(form.cost + [ZERO] * (width - form.structural))
    status = tableau.optimize([not flag for flag in is_artificial])
    if status == 'unbounded':
        return LpOutcome(status='unbounded')
    point = form.point(tableau.solution())
    if not lp.is_satisfied(point):
        raise SimplexError('exact simplex produced an infeasible point', kind='bad_point')
    value = lp.objective.evaluate(point)
    log.debug(f'optimal ``{format_decimal(value)}`` after ``{tableau.pivots}`` pivots')
    return LpOutcome(status='optimal', value=value, point=point)


## float path -------------------------------------------------------


def _solve_float(lp: LinearProgram, tolerance: float) -> LpOutcome:
    position = {name: i for i, name in enumerate(lp.variables)}
    n = len(lp.variables)
    upper_rows, upper_rhs, equal_rows, equal_rhs = [], [], [], []
    for constraint in lp.constraints:
        row = np.zeros(n)
        for name, value in constraint.expr.terms:
            row[position[name]] = float(value)
        if constraint.relation == '<=':
            upper_rows.append(row)
            upper_rhs.append(float(constraint.rhs))
        elif constraint.relation == '>=':
            upper_rows.append(-row)
            upper_rhs.append(-float(constraint.rhs))
        else:
            equal_rows.append(row)
            equal_rhs.append(float(constraint.rhs))
    sign = -1.0 if lp.sense == 'maximize' else 1.0
    cost = np.zeros(n)
    for name, value in lp.objective.terms:
        cost[position[name]] = sign * float(value)
    bounds = [(0, None) if name in lp.nonnegative else (None, None) for name in lp.variables]
    result = linprog(
        cost,
        A_ub=np.array(upper_rows) if upper_rows else None,
        b_ub=np.array(upper_rhs) if upper_rows else None,
        A_eq=np.array(equal_rows) if equal_rows else None,
        b_eq=np.array(equal_rhs) if equal_rows else None,
        bounds=bounds,
        method='highs',
        options={'primal_feasibility_tolerance': tolerance},
    )
    if result.status == 2:
        return LpOutcome(status='infeasible', approximate=True)
    if result.status == 3:
        return LpOutcome(status='unbounded', approximate=True)
    if result.status != 0:
        raise SimplexError(f'HiGHS failed, ``{result.message}``', kind='solver_failed')
    point = {name: Fraction(float(result.x[i])) for name, i in position.items()}
    return LpOutcome(status='optimal', value=Fraction(sign * float(result.fun)), point=point, approximate=True)


def solve_lp(lp: LinearProgram, exact: bool = True, tolerance: float = 1e-9) -> LpOutcome:
    """
    Optimizes `lp`; the float path marks its outcome `approximate`.
    """
    log.debug(f'solving ``{len(lp.variables)}`` variables, ``{lp.inequality_count}`` inequalities, exact ``{exact}``')
    if not exact:
        return _solve_float(lp, tolerance)
    return _solve_exact(lp)
