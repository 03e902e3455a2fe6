"""
Linear expressions, min-expressions and linear programs over exact rationals, plus the textual LP dump.

Called by:
    - prob_tree_app.lib.lp_engine
    - prob_tree_app.lib.simplex
    - prob_tree_app.lib.oracle
"""

import logging
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction

from prob_tree_app.lib.model_core import ProbTreeError, format_fraction

log = logging.getLogger(__name__)

RELATIONS: tuple[str, ...] = ('<=', '>=', '=')
SENSES: tuple[str, ...] = ('maximize', 'minimize')


class MalformedLpError(ProbTreeError):
    """
    Raised when a linear program references undeclared variables or uses unknown relations.
    """

    pass


## linear expressions -----------------------------------------------


@dataclass(frozen=True)
class LinExpr:
    """
    A sparse linear form sum(c_v * v) without constant term; `terms` is sorted by variable name.
    """

    terms: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def build(cls, coefficients: Mapping[str, Fraction]) -> 'LinExpr':
        return cls(tuple(sorted((name, Fraction(value)) for name, value in coefficients.items() if value)))

    @classmethod
    def var(cls, name: str, coefficient: Fraction | int = 1) -> 'LinExpr':
        return cls.build({name: Fraction(coefficient)})

    @classmethod
    def zero(cls) -> 'LinExpr':
        return cls()

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.terms)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(name for name, _ in self.terms)

    def coefficient(self, name: str) -> Fraction:
        return self.as_dict().get(name, Fraction(0))

    def __add__(self, other: 'LinExpr') -> 'LinExpr':
        merged = self.as_dict()
        for name, value in other.terms:
            merged[name] = merged.get(name, Fraction(0)) + value
        return LinExpr.build(merged)

    def __sub__(self, other: 'LinExpr') -> 'LinExpr':
        return self + other.scale(-1)

    def scale(self, factor: Fraction | int) -> 'LinExpr':
        if factor == 0:
            return LinExpr()
        return LinExpr(tuple((name, value * factor) for name, value in self.terms))

    def dominates(self, other: 'LinExpr') -> bool:
        """
        True iff every coefficient of self is <= the matching coefficient of `other`,
        so self <= other wherever all variables are nonnegative.
        """
        mine, theirs = self.as_dict(), other.as_dict()
        zero = Fraction(0)
        return all(mine.get(name, zero) <= theirs.get(name, zero) for name in mine.keys() | theirs.keys())

    def evaluate(self, point: Mapping[str, Fraction]) -> Fraction:
        return sum((value * point.get(name, Fraction(0)) for name, value in self.terms), Fraction(0))

    def render(self) -> str:
        if not self.terms:
            return '0'
        pieces: list[str] = []
        for index, (name, value) in enumerate(self.terms):
            sign = '-' if value < 0 else '+'
            magnitude = abs(value)
            body = name if magnitude == 1 else f'{format_fraction(magnitude)} {name}'
            if index == 0:
                pieces.append(body if sign == '+' else f'-{body}')
            else:
                pieces.append(f'{sign} {body}')
        return ' '.join(pieces)


@dataclass(frozen=True)
class MinExpr:
    """
    The pointwise minimum of a nonempty set of linear expressions.
    """

    operands: frozenset[LinExpr]

    def __post_init__(self) -> None:
        if not self.operands:
            raise MalformedLpError('a min-expression needs at least one operand', kind='empty_min')

    @classmethod
    def of(cls, *exprs: LinExpr) -> 'MinExpr':
        return cls(frozenset(exprs))

    def __len__(self) -> int:
        return len(self.operands)

    def union(self, *others: 'MinExpr') -> 'MinExpr':
        return MinExpr(self.operands.union(*(other.operands for other in others)))

    def map(self, transform: Callable[[LinExpr], LinExpr]) -> 'MinExpr':
        return MinExpr(frozenset(transform(expr) for expr in self.operands))

    def sorted_operands(self) -> list[LinExpr]:
        return sorted(self.operands, key=lambda expr: expr.terms)

    def evaluate(self, point: Mapping[str, Fraction]) -> Fraction:
        return min(expr.evaluate(point) for expr in self.operands)

    def render(self) -> str:
        return 'min(' + ', '.join(expr.render() for expr in self.sorted_operands()) + ')'


## linear programs --------------------------------------------------


@dataclass(frozen=True)
class LinearConstraint:
    """
    `expr relation rhs` with relation one of <=, >=, =.
    """

    expr: LinExpr
    relation: str
    rhs: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.relation not in RELATIONS:
            raise MalformedLpError(f'unknown relation ``{self.relation}``', kind='bad_relation')
        object.__setattr__(self, 'rhs', Fraction(self.rhs))

    @classmethod
    def compare(cls, left: LinExpr, relation: str, right: LinExpr) -> 'LinearConstraint':
        """
        Builds `left relation right` as `left - right relation 0`.
        """
        return cls(left - right, relation, Fraction(0))

    def is_satisfied(self, point: Mapping[str, Fraction]) -> bool:
        value = self.expr.evaluate(point)
        if self.relation == '<=':
            return value <= self.rhs
        if self.relation == '>=':
            return value >= self.rhs
        return value == self.rhs

    def sort_key(self) -> tuple[object, ...]:
        return (self.expr.terms, self.relation, self.rhs)

    def render(self) -> str:
        return f'{self.expr.render()} {self.relation} {format_fraction(self.rhs)}'


@dataclass(frozen=True)
class LinearProgram:
    variables: tuple[str, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: LinExpr
    sense: str = 'maximize'
    nonnegative: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if self.sense not in SENSES:
            raise MalformedLpError(f'unknown objective sense ``{self.sense}``', kind='bad_sense')
        if len(set(self.variables)) != len(self.variables):
            raise MalformedLpError('variables must be declared once', kind='duplicate_variable')
        if self.nonnegative is None:
            object.__setattr__(self, 'nonnegative', frozenset(self.variables))
        declared = frozenset(self.variables)
        used = self.objective.variables.union(*(c.expr.variables for c in self.constraints))
        if not used <= declared or not self.nonnegative <= declared:
            raise MalformedLpError(f'undeclared variables ``{sorted(used - declared)}``', kind='undeclared_variable')

    @property
    def inequality_count(self) -> int:
        """
        Number of inequalities, an equality counting as two.
        """
        return sum(2 if c.relation == '=' else 1 for c in self.constraints)

    def is_satisfied(self, point: Mapping[str, Fraction]) -> bool:
        if any(point.get(name, Fraction(0)) < 0 for name in self.nonnegative):
            return False
        return all(c.is_satisfied(point) for c in self.constraints)


@dataclass(frozen=True)
class LpOutcome:
    status: str
    value: Fraction | None = None
    point: Mapping[str, Fraction] | None = None
    approximate: bool = False

    @property
    def is_optimal(self) -> bool:
        return self.status == 'optimal'


def render_lp(lp: LinearProgram) -> str:
    """
    Dumps `lp` with the objective first and constraints in a stable order.
    """
    lines: list[str] = [f'{lp.sense} {lp.objective.render()}', 'subject to']
    lines.extend(f'  {c.render()}' for c in sorted(lp.constraints, key=LinearConstraint.sort_key))
    free = [name for name in lp.variables if name not in lp.nonnegative]
    if free:
        lines.append('free ' + ' '.join(free))
    lines.append(f'# {len(lp.variables)} variables, {lp.inequality_count} inequalities')
    return '\n'.join(lines) + '\n'


def collect_variables(exprs: Iterable[LinExpr]) -> tuple[str, ...]:
    found: set[str] = set()
    for expr in exprs:
        found |= expr.variables
    return tuple(sorted(found))
