"""
Conditional constraint trees: validation, query classification, orientation, certain-implication
reachability, reduction to complete queries and split-node discovery.

Called by:
    - prob_tree_app.lib.propagation
    - prob_tree_app.lib.lp_engine
    - prob_tree_app.lib.query_planner
    - prob_tree_app.lib.oracle (construct_positive_model)
    - prob_tree_app.lib.kb_documents (tree-mode documents)
"""

import heapq
import logging
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType

import networkx as nx

from prob_tree_app.lib.model_core import (
    ConditionalConstraint,
    ConjunctiveEvent,
    KnowledgeBase,
    ProbTreeError,
    render_atoms,
)

log = logging.getLogger(__name__)

SYNONYM_SUFFIX: str = '__syn'
CERTAIN: tuple[Fraction, Fraction] = (Fraction(1), Fraction(1))


class TreeValidationError(ProbTreeError):
    """
    Raised when a knowledge base is not a conditional constraint tree.
    """

    pass


class QueryValidationError(ProbTreeError):
    """
    Raised when a query is not valid for a tree.
    """

    pass


class PreconditionError(ProbTreeError):
    """
    Raised when an engine is called on a tree or query outside its contract.
    """

    pass


## trees ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConstraintTree:
    """
    A validated knowledge base whose constraint graph is an undirected tree.
    `intervals[(G, H)]` is the interval of the constraint (H|G).
    """

    kb: KnowledgeBase
    graph: nx.Graph
    intervals: Mapping[tuple[str, str], tuple[Fraction, Fraction]]

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.kb.ordered_events

    @property
    def size(self) -> int:
        return len(self.kb.events)

    @cached_property
    def is_exact(self) -> bool:
        return all(lower == upper for lower, upper in self.intervals.values())

    def interval(self, premise: str, conclusion: str) -> tuple[Fraction, Fraction]:
        """
        Returns [u1, u2] of the constraint (conclusion|premise).
        """
        try:
            return self.intervals[(premise, conclusion)]
        except KeyError as exc:
            raise PreconditionError(f'no edge between ``{premise}`` and ``{conclusion}``', kind='unknown_edge') from exc

    def neighbors(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(self.graph.neighbors(node)))

    @cached_property
    def leaf_set(self) -> frozenset[str]:
        return frozenset(node for node, degree in self.graph.degree if degree == 1)

    def leaves(self) -> frozenset[str]:
        return self.leaf_set

    def path(self, source: str, target: str) -> list[str]:
        return nx.shortest_path(self.graph, source, target)

    def subtree(self, nodes: Iterable[str]) -> 'ConstraintTree':
        """
        Restricts the tree to `nodes`, which must induce a connected subgraph.
        """
        keep = frozenset(nodes)
        constraints = [
            c for c in self.kb.constraints if c.premise.single() in keep and c.conclusion.single() in keep
        ]
        return validate_tree(KnowledgeBase(keep, tuple(constraints)))


def validate_tree(kb: KnowledgeBase) -> ConstraintTree:
    """
    Checks that `kb` is a conditional constraint tree and returns it wrapped; never repairs.
    """
    for constraint in kb.constraints:
        if not (constraint.premise.is_basic and constraint.conclusion.is_basic):
            raise TreeValidationError(
                f'tree constraints relate two basic events, got ``{constraint.render()}``', kind='non_basic'
            )
        if constraint.premise == constraint.conclusion:
            raise TreeValidationError(f'constraint ``{constraint.render()}`` relates an event to itself', kind='non_basic')
    if not kb.events:
        raise TreeValidationError('a tree needs at least one event', kind='not_connected')

    graph = nx.Graph()
    graph.add_nodes_from(kb.events)
    intervals: dict[tuple[str, str], tuple[Fraction, Fraction]] = {}
    ## equal intervals share one tuple
    shared: dict[tuple[Fraction, Fraction], tuple[Fraction, Fraction]] = {}
    for constraint in kb.constraints:
        premise, conclusion = constraint.premise.single(), constraint.conclusion.single()
        if (premise, conclusion) in intervals:
            raise TreeValidationError(f'duplicate constraint ``{constraint.render()}``', kind='duplicate_edge')
        bounds = (constraint.lower, constraint.upper)
        intervals[(premise, conclusion)] = shared.setdefault(bounds, bounds)
        graph.add_edge(premise, conclusion)

    if not nx.is_connected(graph):
        parts = [render_atoms(part) for part in nx.connected_components(graph)]
        raise TreeValidationError(f'constraint graph is not connected, components ``{sorted(parts)}``', kind='not_connected')
    if graph.number_of_edges() != graph.number_of_nodes() - 1:
        cycle = nx.find_cycle(graph)
        raise TreeValidationError(f'constraint graph has a cycle through ``{cycle}``', kind='cycle')
    for first, second in sorted(tuple(sorted(edge)) for edge in graph.edges):
        for premise, conclusion in ((first, second), (second, first)):
            if (premise, conclusion) not in intervals:
                raise TreeValidationError(f'missing constraint ``({conclusion}|{premise})``', kind='missing_reverse')
    for (premise, conclusion), (lower, _upper) in sorted(intervals.items()):
        if lower == 0:
            raise TreeValidationError(f'constraint ``({conclusion}|{premise})`` has lower bound 0', kind='zero_lower')

    log.debug(f'validated tree over ``{graph.number_of_nodes()}`` events')
    return ConstraintTree(kb, nx.freeze(graph), MappingProxyType(intervals))


## queries ----------------------------------------------------------


@dataclass(frozen=True)
class Query:
    """
    The query for the tight bounds of Pr(F|E).
    """

    conclusion: ConjunctiveEvent
    premise: ConjunctiveEvent

    @classmethod
    def of(cls, conclusion: Iterable[str], premise: Iterable[str]) -> 'Query':
        return cls(ConjunctiveEvent.of(*conclusion), ConjunctiveEvent.of(*premise))

    def render(self) -> str:
        return f'({self.conclusion.render()}|{self.premise.render()})'


class QueryKind(StrEnum):
    PREMISE_RESTRICTED = 'premise_restricted'
    STRONGLY_CONCLUSION_RESTRICTED = 'strongly_conclusion_restricted'
    GENERAL = 'general'


@dataclass(frozen=True)
class QueryClassification:
    kind: QueryKind
    complete: bool


def check_query_events(t: ConstraintTree, q: Query) -> None:
    """
    Rejects top events, unknown events and overlapping premise/conclusion.
    """
    if q.premise.is_top or q.conclusion.is_top:
        raise QueryValidationError('tree queries cannot use the top event', kind='top_not_allowed')
    unknown = (q.premise.atoms | q.conclusion.atoms) - t.kb.events
    if unknown:
        raise QueryValidationError(f'query mentions unknown events ``{sorted(unknown)}``', kind='unknown_event')
    overlap = q.premise.atoms & q.conclusion.atoms
    if overlap:
        raise QueryValidationError(f'premise and conclusion share ``{sorted(overlap)}``', kind='overlap')


def common_nodes(t: ConstraintTree, q: Query) -> frozenset[str]:
    """
    Returns the nodes lying on every path from a premise atom to a conclusion atom.
    """
    common: set[str] | None = None
    for source in sorted(q.premise.atoms):
        for target in sorted(q.conclusion.atoms):
            on_path = set(t.path(source, target))
            common = on_path if common is None else common & on_path
            if not common:
                return frozenset()
    return frozenset(common or ())


def is_strongly_conclusion_restricted(t: ConstraintTree, q: Query) -> bool:
    return q.conclusion.is_basic and common_nodes(t, q) == q.conclusion.atoms


def validate_query(t: ConstraintTree, q: Query) -> QueryClassification:
    """
    Validates `q` against `t` and classifies it.
    Called by: query_planner.answer(), split_at_articulation(), cli `query`
    """
    check_query_events(t, q)
    common = common_nodes(t, q)
    if not common:
        raise QueryValidationError(f'paths of ``{q.render()}`` share no basic event', kind='no_common_node')
    if q.premise.is_basic:
        kind = QueryKind.PREMISE_RESTRICTED
    elif q.conclusion.is_basic and common == q.conclusion.atoms:
        kind = QueryKind.STRONGLY_CONCLUSION_RESTRICTED
    else:
        kind = QueryKind.GENERAL
    complete: bool = (q.premise.atoms | q.conclusion.atoms) == t.leaves()
    log.debug(f'query ``{q.render()}`` classified as ``{kind}``, complete ``{complete}``')
    return QueryClassification(kind, complete)


def require_leaf_targets(t: ConstraintTree, root: str, targets: frozenset[str]) -> None:
    """
    Engines orient at `root` and need `targets` to be exactly the leaves below it.
    """
    expected = t.leaves() - {root}
    if targets != expected:
        raise PreconditionError(
            f'query must cover exactly the leaves ``{render_atoms(expected)}`` from ``{root}``', kind='incomplete'
        )


## orientation ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OrientedTree:
    """
    A tree rooted at a query premise, edges pointing away from the root.
    Stratum = max depth - depth; `order` processes children before parents.
    """

    tree: ConstraintTree
    root: str
    parent: Mapping[str, str | None]
    children: Mapping[str, tuple[str, ...]]
    depth: Mapping[str, int]
    strata: Mapping[str, int]
    order: tuple[str, ...]
    leaf_closure: Mapping[str, frozenset[str]]

    def is_leaf(self, node: str) -> bool:
        return not self.children[node]

    def up(self, node: str) -> ConjunctiveEvent:
        """
        Returns B-up: the conjunction of the children, or the node itself for a leaf.
        """
        kids = self.children[node]
        return ConjunctiveEvent(frozenset(kids)) if kids else ConjunctiveEvent.of(node)

    def covered(self, node: str) -> ConjunctiveEvent:
        """
        Returns L(node), the conjunction of the leaves at or below `node`.
        """
        return ConjunctiveEvent(self.leaf_closure[node])

    def forward(self, parent: str, child: str) -> tuple[Fraction, Fraction]:
        return self.tree.interval(parent, child)

    def backward(self, parent: str, child: str) -> tuple[Fraction, Fraction]:
        return self.tree.interval(child, parent)

    def edges(self) -> list[tuple[str, str]]:
        return [(self.parent[node], node) for node in sorted(self.parent) if self.parent[node] is not None]

    def scope(self, node: str) -> frozenset[str]:
        """
        Returns `node` and all of its descendants.
        """
        found: set[str] = set()
        pending: list[str] = [node]
        while pending:
            current = pending.pop()
            found.add(current)
            pending.extend(self.children[current])
        return frozenset(found)


def orient(t: ConstraintTree, root: str) -> OrientedTree:
    """
    Roots `t` at `root`.
    """
    if root not in t.kb.events:
        raise PreconditionError(f'unknown root ``{root}``', kind='unknown_event')
    parent: dict[str, str | None] = {root: None}
    depth: dict[str, int] = {root: 0}
    children: dict[str, tuple[str, ...]] = {}
    queue: deque[str] = deque([root])
    while queue:
        node = queue.popleft()
        kids = tuple(sorted(n for n in t.graph.neighbors(node) if n != parent[node]))
        children[node] = kids
        for kid in kids:
            parent[kid] = node
            depth[kid] = depth[node] + 1
            queue.append(kid)
    max_depth = max(depth.values())
    strata = {node: max_depth - d for node, d in depth.items()}
    order = tuple(sorted(strata, key=lambda node: (strata[node], node)))
    leaf_closure: dict[str, frozenset[str]] = {}
    for node in order:
        kids = children[node]
        if not kids:
            leaf_closure[node] = frozenset((node,))
        elif len(kids) == 1:
            leaf_closure[node] = leaf_closure[kids[0]]
        else:
            leaf_closure[node] = frozenset().union(*(leaf_closure[kid] for kid in kids))
    return OrientedTree(
        tree=t,
        root=root,
        parent=MappingProxyType(parent),
        children=MappingProxyType(children),
        depth=MappingProxyType(depth),
        strata=MappingProxyType(strata),
        order=order,
        leaf_closure=MappingProxyType(leaf_closure),
    )


## certain implication ----------------------------------------------


def _certain_path(t: ConstraintTree, source: str, target: str) -> bool:
    path = t.path(source, target)
    return all(t.interval(path[i], path[i + 1]) == CERTAIN for i in range(len(path) - 1))


def implies_exists(t: ConstraintTree, c: ConjunctiveEvent, b: str) -> bool:
    """
    The relation C => B: some atom of C reaches B along forward [1, 1] constraints.
    """
    if b not in t.kb.events or not c.atoms <= t.kb.events:
        raise QueryValidationError('implication over unknown events', kind='unknown_event')
    return any(_certain_path(t, atom, b) for atom in sorted(c.atoms))


def implies_all(t: ConstraintTree, b: str, c: ConjunctiveEvent) -> bool:
    """
    The relation B => C: B reaches every atom of C along forward [1, 1] constraints.
    """
    if b not in t.kb.events or not c.atoms <= t.kb.events:
        raise QueryValidationError('implication over unknown events', kind='unknown_event')
    return all(_certain_path(t, b, atom) for atom in sorted(c.atoms))


## reduction to complete queries ------------------------------------


@dataclass(frozen=True)
class Reduction:
    tree: ConstraintTree
    query: Query
    notes: tuple[str, ...]

    @property
    def changed(self) -> bool:
        return bool(self.notes)


def fresh_name(base: str, suffix: str, taken: Iterable[str]) -> str:
    """
    Returns `base + suffix`, numbered when that name is already taken.
    """
    taken_set = set(taken)
    candidate = f'{base}{suffix}'
    counter = 2
    while candidate in taken_set:
        candidate = f'{base}{suffix}{counter}'
        counter += 1
    return candidate


def reduce_to_complete(t: ConstraintTree, q: Query) -> Reduction:
    """
    Prunes leaves outside EF (name order, repeatedly) and gives every internal node of EF a synonym leaf.
    Called by: query_planner.answer_with_plan()
    """
    validate_query(t, q)
    keep: frozenset[str] = q.premise.atoms | q.conclusion.atoms
    graph = nx.Graph(t.graph)
    notes: list[str] = []

    ## prune removable leaves ---------------------------------------
    removable: list[str] = [n for n in graph if graph.degree(n) == 1 and n not in keep]
    heapq.heapify(removable)
    while removable:
        node = heapq.heappop(removable)
        neighbor = next(iter(graph.neighbors(node)))
        graph.remove_node(node)
        notes.append(f'pruned leaf {node}')
        if neighbor not in keep and graph.degree(neighbor) == 1:
            heapq.heappush(removable, neighbor)

    constraints: list[ConditionalConstraint] = [
        c for c in t.kb.constraints if c.premise.single() in graph and c.conclusion.single() in graph
    ]

    ## synonyms for internal query nodes ----------------------------
    renames: dict[str, str] = {}
    taken: set[str] = set(t.kb.events)
    for node in sorted(keep):
        if graph.degree(node) > 1:
            synonym = fresh_name(node, SYNONYM_SUFFIX, taken)
            taken.add(synonym)
            renames[node] = synonym
            constraints.append(ConditionalConstraint(ConjunctiveEvent.of(synonym), ConjunctiveEvent.of(node), 1, 1))
            constraints.append(ConditionalConstraint(ConjunctiveEvent.of(node), ConjunctiveEvent.of(synonym), 1, 1))
            notes.append(f'synonym {synonym} for internal node {node}')

    if not notes:
        return Reduction(t, q, ())
    events = frozenset(graph.nodes) | frozenset(renames.values())
    reduced_tree = validate_tree(KnowledgeBase(events, tuple(constraints)))
    reduced_query = Query(
        ConjunctiveEvent(frozenset(renames.get(a, a) for a in q.conclusion.atoms)),
        ConjunctiveEvent(frozenset(renames.get(a, a) for a in q.premise.atoms)),
    )
    log.debug(f'reduced ``{q.render()}`` to ``{reduced_query.render()}``; notes, ``{notes}``')
    return Reduction(reduced_tree, reduced_query, tuple(notes))


## splitting --------------------------------------------------------


@dataclass(frozen=True)
class Split:
    node: str
    premise_side: ConstraintTree
    conclusion_side: ConstraintTree


def split_at_articulation(t: ConstraintTree, q: Query) -> Split:
    """
    Finds a node G on every premise-to-conclusion path whose removal scatters the premise atoms over
    at least two branches, then cuts the tree at G. The qualifying G closest to the conclusion wins.
    Called by: query_planner.answer_with_plan()
    """
    classification = validate_query(t, q)
    if classification.kind != QueryKind.GENERAL or not classification.complete:
        raise PreconditionError(f'query ``{q.render()}`` does not need splitting', kind='no_split_needed')
    premise, conclusion = q.premise.atoms, q.conclusion.atoms
    candidates: list[tuple[int, str, list[set[str]]]] = []
    for node in sorted(common_nodes(t, q) - premise - conclusion):
        branches: list[set[str]] = [set(part) for part in nx.connected_components(nx.restricted_view(t.graph, [node], []))]
        premise_branches = [part for part in branches if part & premise]
        if len(premise_branches) < 2 or any(part & premise and part & conclusion for part in branches):
            continue
        distances = nx.single_source_shortest_path_length(t.graph, node)
        closeness = min(distances[target] for target in conclusion)
        candidates.append((closeness, node, branches))
    if not candidates:
        raise PreconditionError(f'no split node for ``{q.render()}``', kind='no_split_node')
    _closeness, node, branches = min(candidates, key=lambda item: (item[0], item[1]))
    premise_nodes: set[str] = {node}
    conclusion_nodes: set[str] = {node}
    for part in branches:
        (premise_nodes if part & premise else conclusion_nodes).update(part)
    log.debug(f'split ``{q.render()}`` at ``{node}``')
    return Split(node, t.subtree(premise_nodes), t.subtree(conclusion_nodes))
