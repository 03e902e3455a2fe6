"""
Events, conditional constraints, knowledge bases, interpretations and their satisfaction semantics.

Worlds are bit patterns over the lexicographic order of event names: bit ``i`` is the truth value
of ``events[i]``. Interpretations are sparse mappings from those bit patterns to exact rationals.

Called by:
    - prob_tree_app.lib.tree_analysis
    - prob_tree_app.lib.propagation
    - prob_tree_app.lib.lp_engine
    - prob_tree_app.lib.query_planner
    - prob_tree_app.lib.oracle
    - prob_tree_app.lib.kb_documents
"""

import logging
import math
import re
import sys
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from types import MappingProxyType

log = logging.getLogger(__name__)

EVENT_NAME_PATTERN: re.Pattern[str] = re.compile(r'[A-Za-z_][A-Za-z0-9_]*\Z')
TOP_MARKER: str = '*'
LOG10_2: float = math.log10(2)


## errors -----------------------------------------------------------


class ProbTreeError(Exception):
    """
    Base class for every domain error raised by this app.
    `kind` is a short machine-readable tag; the message is for humans.
    """

    def __init__(self, message: str, kind: str = 'error') -> None:
        super().__init__(message)
        self.kind: str = kind


class DomainMismatchError(ProbTreeError):
    """
    Raised when an event is not covered by the world or interpretation it is evaluated against.
    """

    pass


class KnowledgeBaseError(ProbTreeError):
    """
    Raised when events, constraints or knowledge bases are malformed.
    """

    pass


## probabilities ----------------------------------------------------


def as_probability(value: Fraction | int | str) -> Fraction:
    """
    Converts `value` to an exact rational and checks 0 <= value <= 1.
    Decimal strings are read exactly, so '0.85' becomes 17/20.
    """
    try:
        probability = Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise KnowledgeBaseError(f'not a rational number, ``{value}``', kind='bad_number') from exc
    if probability < 0 or probability > 1:
        raise KnowledgeBaseError(f'probability outside [0, 1], ``{value}``', kind='bad_probability')
    return probability


def format_fraction(value: Fraction) -> str:
    """
    Renders a rational as `p/q`, or as a bare integer when the denominator is 1.
    Terms too long for int-to-str conversion are rendered as `~` plus 12 decimals.
    """
    if exceeds_str_digits(value.numerator) or exceeds_str_digits(value.denominator):
        return f'~{format_decimal(value, 12)}'
    if value.denominator == 1:
        return str(value.numerator)
    return f'{value.numerator}/{value.denominator}'


def exceeds_str_digits(number: int) -> bool:
    limit = sys.get_int_max_str_digits()
    return limit > 0 and abs(number).bit_length() * LOG10_2 >= limit - 1


def format_decimal(value: Fraction, places: int = 4) -> str:
    """
    Renders a rational with round-half-up to `places` decimals.
    """
    quantum = Decimal(1).scaleb(-places)
    exact = Decimal(value.numerator) / Decimal(value.denominator)
    return format(exact.quantize(quantum, rounding=ROUND_HALF_UP), 'f')


## events and constraints -------------------------------------------


def render_atoms(atoms: Iterable[str]) -> str:
    """
    Renders atoms sorted by name; single-letter names are run together the way `QRSTU` is written.
    """
    names: list[str] = sorted(atoms)
    if all(len(name) == 1 for name in names):
        return ''.join(names)
    return ' '.join(names)


@dataclass(frozen=True)
class ConjunctiveEvent:
    """
    A conjunction of basic events; the empty atom set is the distinguished top event.
    """

    atoms: frozenset[str]

    def __post_init__(self) -> None:
        for name in self.atoms:
            if not EVENT_NAME_PATTERN.match(name):
                raise KnowledgeBaseError(f'invalid event name, ``{name}``', kind='bad_name')

    @classmethod
    def of(cls, *names: str) -> 'ConjunctiveEvent':
        if not names:
            raise KnowledgeBaseError('a conjunctive event needs at least one atom', kind='empty_event')
        return cls(frozenset(names))

    @classmethod
    def top(cls) -> 'ConjunctiveEvent':
        return cls(frozenset())

    @property
    def is_top(self) -> bool:
        return not self.atoms

    @property
    def is_basic(self) -> bool:
        return len(self.atoms) == 1

    def single(self) -> str:
        """
        Returns the only atom of a basic event.
        """
        if not self.is_basic:
            raise KnowledgeBaseError(f'not a basic event, ``{self.render()}``', kind='non_basic')
        return next(iter(self.atoms))

    def render(self) -> str:
        if self.is_top:
            return TOP_MARKER
        return render_atoms(self.atoms)


TOP: ConjunctiveEvent = ConjunctiveEvent.top()


@dataclass(frozen=True)
class ConditionalConstraint:
    """
    The constraint (H|G)[u1, u2]: u1 * Pr(G) <= Pr(GH) <= u2 * Pr(G).
    """

    conclusion: ConjunctiveEvent
    premise: ConjunctiveEvent
    lower: Fraction
    upper: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, 'lower', as_probability(self.lower))
        object.__setattr__(self, 'upper', as_probability(self.upper))
        if self.conclusion.is_top:
            raise KnowledgeBaseError('the conclusion of a constraint cannot be the top event', kind='top_conclusion')
        if self.lower > self.upper:
            raise KnowledgeBaseError(
                f'lower bound exceeds upper bound in ``{self.render()}``', kind='inverted_interval'
            )

    @property
    def pair(self) -> tuple[ConjunctiveEvent, ConjunctiveEvent]:
        return (self.conclusion, self.premise)

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    def render(self) -> str:
        if self.lower == self.upper:
            bounds = format_fraction(self.lower)
        else:
            bounds = f'{format_fraction(self.lower)}, {format_fraction(self.upper)}'
        return f'({self.conclusion.render()}|{self.premise.render()})[{bounds}]'


@dataclass(frozen=True)
class KnowledgeBase:
    """
    A finite event set and a set of conditional constraints over it.
    """

    events: frozenset[str]
    constraints: tuple[ConditionalConstraint, ...] = ()

    def __post_init__(self) -> None:
        for name in self.events:
            if not EVENT_NAME_PATTERN.match(name):
                raise KnowledgeBaseError(f'invalid event name, ``{name}``', kind='bad_name')
        seen_pairs: set[tuple[ConjunctiveEvent, ConjunctiveEvent]] = set()
        for constraint in self.constraints:
            missing = (constraint.conclusion.atoms | constraint.premise.atoms) - self.events
            if missing:
                raise KnowledgeBaseError(
                    f'constraint ``{constraint.render()}`` mentions undeclared events ``{sorted(missing)}``',
                    kind='unknown_event',
                )
            if constraint.pair in seen_pairs:
                raise KnowledgeBaseError(
                    f'two constraints share the pair of ``{constraint.render()}``', kind='duplicate_pair'
                )
            seen_pairs.add(constraint.pair)

    @classmethod
    def from_constraints(
        cls, constraints: Iterable[ConditionalConstraint], extra_events: Iterable[str] = ()
    ) -> 'KnowledgeBase':
        """
        Builds a knowledge base whose events are exactly those mentioned (plus `extra_events`).
        """
        constraint_tuple = tuple(constraints)
        events: set[str] = set(extra_events)
        for constraint in constraint_tuple:
            events |= constraint.conclusion.atoms | constraint.premise.atoms
        return cls(frozenset(events), constraint_tuple)

    @property
    def ordered_events(self) -> tuple[str, ...]:
        return tuple(sorted(self.events))

    def find(self, conclusion: ConjunctiveEvent, premise: ConjunctiveEvent) -> ConditionalConstraint | None:
        for constraint in self.constraints:
            if constraint.pair == (conclusion, premise):
                return constraint
        return None


## worlds and interpretations ---------------------------------------


@dataclass(frozen=True)
class World:
    """
    A total truth assignment, stored as a bit pattern over `events` (sorted names).
    """

    events: tuple[str, ...]
    bits: int

    @classmethod
    def from_assignment(cls, assignment: Mapping[str, bool]) -> 'World':
        events = tuple(sorted(assignment))
        bits = 0
        for index, name in enumerate(events):
            if assignment[name]:
                bits |= 1 << index
        return cls(events, bits)

    def is_true(self, name: str) -> bool:
        try:
            index = self.events.index(name)
        except ValueError as exc:
            raise DomainMismatchError(f'event ``{name}`` is not covered by the world', kind='domain_mismatch') from exc
        return bool(self.bits >> index & 1)

    def render(self) -> str:
        return ' '.join(name if self.bits >> index & 1 else f'!{name}' for index, name in enumerate(self.events))


def event_mask(events: tuple[str, ...], e: ConjunctiveEvent) -> int:
    """
    Returns the bit mask of the atoms of `e` over `events`; the top event has mask 0.
    """
    mask = 0
    for name in e.atoms:
        try:
            mask |= 1 << events.index(name)
        except ValueError as exc:
            raise DomainMismatchError(f'event ``{name}`` is not in the domain', kind='domain_mismatch') from exc
    return mask


@dataclass(frozen=True)
class Interpretation:
    """
    A probability distribution over worlds; `mass` maps bit patterns to strictly positive rationals.
    """

    events: tuple[str, ...]
    mass: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if tuple(sorted(self.events)) != self.events:
            raise DomainMismatchError('interpretation events must be sorted by name', kind='unsorted_events')
        cleaned: dict[int, Fraction] = {}
        limit = 1 << len(self.events)
        for bits, value in self.mass.items():
            value = Fraction(value)
            if not 0 <= bits < limit:
                raise DomainMismatchError(f'world ``{bits}`` outside the domain', kind='domain_mismatch')
            if value < 0:
                raise KnowledgeBaseError(f'negative mass on world ``{bits}``', kind='bad_probability')
            if value > 0:
                cleaned[bits] = value
        if sum(cleaned.values(), Fraction(0)) != 1:
            raise KnowledgeBaseError('interpretation masses must sum to 1', kind='bad_probability')
        object.__setattr__(self, 'mass', MappingProxyType(cleaned))

    @classmethod
    def point_mass(cls, events: Iterable[str], true_events: Iterable[str]) -> 'Interpretation':
        ordered = tuple(sorted(events))
        bits = event_mask(ordered, ConjunctiveEvent(frozenset(true_events)))
        return cls(ordered, {bits: Fraction(1)})

    @classmethod
    def from_assignments(cls, masses: Iterable[tuple[Mapping[str, bool], Fraction]]) -> 'Interpretation':
        events: tuple[str, ...] | None = None
        collected: dict[int, Fraction] = {}
        for assignment, value in masses:
            world = World.from_assignment(assignment)
            if events is not None and world.events != events:
                raise DomainMismatchError('assignments cover different events', kind='domain_mismatch')
            events = world.events
            collected[world.bits] = collected.get(world.bits, Fraction(0)) + Fraction(value)
        return cls(events or (), collected)

    def worlds(self) -> Iterator[tuple[World, Fraction]]:
        for bits in sorted(self.mass):
            yield World(self.events, bits), self.mass[bits]


## semantics --------------------------------------------------------


def world_satisfies(w: World, e: ConjunctiveEvent) -> bool:
    """
    True iff every atom of `e` is true in `w`; the top event is always satisfied.
    """
    mask = event_mask(w.events, e)
    return w.bits & mask == mask


def prob_of(pr: Interpretation, e: ConjunctiveEvent) -> Fraction:
    """
    Sums the masses of the worlds satisfying `e`.
    """
    mask = event_mask(pr.events, e)
    total = Fraction(0)
    for bits, value in pr.mass.items():
        if bits & mask == mask:
            total += value
    return total


def check_constraint(pr: Interpretation, c: ConditionalConstraint) -> bool:
    """
    Checks u1 * Pr(G) <= Pr(GH) <= u2 * Pr(G) exactly.
    """
    premise_probability = prob_of(pr, c.premise)
    joint = ConjunctiveEvent(c.premise.atoms | c.conclusion.atoms)
    joint_probability = prob_of(pr, joint)
    return c.lower * premise_probability <= joint_probability <= c.upper * premise_probability


def check_kb(pr: Interpretation, kb: KnowledgeBase) -> list[ConditionalConstraint]:
    """
    Returns the constraints of `kb` violated by `pr`; empty iff `pr` is a model of `kb`.
    """
    missing = kb.events - set(pr.events)
    if missing:
        raise DomainMismatchError(f'interpretation does not cover ``{sorted(missing)}``', kind='domain_mismatch')
    violated: list[ConditionalConstraint] = [c for c in kb.constraints if not check_constraint(pr, c)]
    if violated:
        log.debug(f'violated constraints, ``{[c.render() for c in violated]}``')
    return violated


## answers ----------------------------------------------------------


@dataclass(frozen=True)
class TightAnswer:
    """
    The greatest entailed lower and least entailed upper bound of a query.
    An empty consequence is reported as [1, 0].

    `table` holds formatted propagation rows (stratum, B, D, alpha1, alpha2, beta2, gamma2, rule);
    `source` names the engine that produced the answer.
    """

    lower: Fraction
    upper: Fraction
    empty_consequence: bool = False
    trace: tuple[str, ...] = ()
    table: tuple[tuple[str, ...], ...] = ()
    source: str = 'planner'

    def __post_init__(self) -> None:
        object.__setattr__(self, 'lower', Fraction(self.lower))
        object.__setattr__(self, 'upper', Fraction(self.upper))
        if self.empty_consequence:
            if (self.lower, self.upper) != (1, 0):
                raise KnowledgeBaseError('an empty consequence is reported as [1, 0]', kind='bad_answer')
        elif not 0 <= self.lower <= self.upper <= 1:
            raise KnowledgeBaseError(
                f'answer bounds out of order, ``[{self.lower}, {self.upper}]``', kind='bad_answer'
            )

    @classmethod
    def empty(cls, trace: Iterable[str] = (), source: str = 'planner') -> 'TightAnswer':
        return cls(Fraction(1), Fraction(0), True, tuple(trace), (), source)

    def with_trace(self, *lines: str) -> 'TightAnswer':
        """
        Returns a copy with `lines` prepended to the trace.
        """
        return TightAnswer(
            self.lower, self.upper, self.empty_consequence, tuple(lines) + self.trace, self.table, self.source
        )
