"""Visiting order graphs: construction, structural validation, order inference.

A visiting order graph is an inclusion forest over visit nodes (each node
has exactly one parent, possibly the ROOT pseudo-node) plus transition
edges that are only allowed between siblings.  Within one sibling group
the transition edges form disjoint simple chains; in strict mode every
group must form a single complete chain.

Graphs are immutable after construction and all operations here are pure
reads, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .model import ROOT, VisitNode


class ViolationCode(Enum):
    CYCLE_INCLUSION = "CycleInclusion"
    TRANSITION_NOT_SIBLINGS = "TransitionNotSiblings"
    MULTI_SUCCESSOR = "MultiSuccessor"
    MULTI_PREDECESSOR = "MultiPredecessor"
    MULTI_PARENT = "MultiParent"
    TRANSITION_CYCLE = "TransitionCycle"
    UNKNOWN_TIME_NODE = "UnknownTimeNode"
    OVERLAP_BOTH_LINKED = "OverlapBothLinked"
    EMPTY_VISIT_PARTITION = "EmptyVisitPartition"
    DANGLING_REFERENCE = "DanglingReference"
    INCOMPLETE_CHAIN = "IncompleteChain"


@dataclass(frozen=True)
class Violation:
    """One structural breach; reported sorted by (code, subject)."""

    code: ViolationCode
    subject: str
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.code.value}: {self.subject}"
        return f"{text} ({self.detail})" if self.detail else text


def _violation_key(v: Violation) -> tuple[str, str, str]:
    return (v.code.value, v.subject, v.detail)


class ViolationError(ValueError):
    """Raised by operations that cannot report violations as data."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class OrderRelation(Enum):
    BEFORE = "Before"
    AFTER = "After"
    CONTAINS = "Contains"
    CONTAINED_BY = "ContainedBy"
    SAME = "Same"
    INCOMPARABLE = "Incomparable"

    def inverse(self) -> "OrderRelation":
        return _INVERSE[self]


_INVERSE = {
    OrderRelation.BEFORE: OrderRelation.AFTER,
    OrderRelation.AFTER: OrderRelation.BEFORE,
    OrderRelation.CONTAINS: OrderRelation.CONTAINED_BY,
    OrderRelation.CONTAINED_BY: OrderRelation.CONTAINS,
    OrderRelation.SAME: OrderRelation.SAME,
    OrderRelation.INCOMPARABLE: OrderRelation.INCOMPARABLE,
}


@dataclass(frozen=True)
class VisitingOrderGraph:
    """Immutable inclusion forest plus sibling-restricted transition chains.

    ``nodes`` maps node reference -> VisitNode.  ``parent`` is total over
    the node set (ROOT for top-level nodes); ``successor`` is partial
    (absence means end of chain).  ``overlap`` holds canonically ordered
    reference pairs; ``excluded`` holds entity ids whose visit timing is
    unknown and which therefore must not appear as nodes.
    """

    nodes: dict[str, VisitNode]
    parent: dict[str, str]
    successor: dict[str, str]
    overlap: frozenset[tuple[str, str]] = frozenset()
    excluded: frozenset[str] = frozenset()

    def node_refs(self) -> list[str]:
        """All node references in canonical (entity_id, visit_index) order."""
        return [n.ref for n in sorted(self.nodes.values())]

    def children_of(self, parent_ref: str) -> list[str]:
        """Direct inclusion children of a node or of ROOT, in canonical order."""
        return [r for r in self.node_refs() if self.parent.get(r) == parent_ref]

    def sibling_groups(self) -> dict[str, list[str]]:
        """Nodes grouped by shared parent, keyed by the parent reference."""
        groups: dict[str, list[str]] = {}
        for ref in self.node_refs():
            groups.setdefault(self.parent[ref], []).append(ref)
        return groups

    def inclusion_pairs(self) -> list[tuple[str, str]]:
        """(parent, child) pairs excluding ROOT attachments, sorted."""
        return sorted((p, c) for c, p in self.parent.items() if p != ROOT)

    def transition_pairs(self) -> list[tuple[str, str]]:
        return sorted(self.successor.items())

    def overlap_standbys(self) -> frozenset[str]:
        """Unlinked overlap members, represented by their linked partner.

        These stand outside the chain machinery: they join no transition
        chain and order inference reports them Incomparable.
        """
        return frozenset(
            ref for pair in self.overlap for ref in pair if not _is_linked(self, ref)
        )


def _ancestor_chain(graph: VisitingOrderGraph, ref: str) -> list[str]:
    """[ref, parent(ref), ..., ROOT]; raises on cycles (invalid graphs)."""
    chain = [ref]
    seen = {ref}
    current = ref
    while current != ROOT:
        current = graph.parent[current]
        if current in seen:
            raise ValueError(f"inclusion cycle at {current!r}; graph is invalid")
        seen.add(current)
        chain.append(current)
    return chain


def _chain_reaches(graph: VisitingOrderGraph, start: str, target: str) -> bool:
    """Whether following transition edges from start ever reaches target."""
    current = start
    for _ in range(len(graph.nodes) + 1):
        nxt = graph.successor.get(current)
        if nxt is None:
            return False
        if nxt == target:
            return True
        current = nxt
    raise ValueError("transition cycle encountered; graph is invalid")


def depth(graph: VisitingOrderGraph, ref: str) -> int:
    """Number of inclusion steps from the node to ROOT (ROOT children: 1)."""
    if ref not in graph.nodes:
        raise KeyError(f"unknown node {ref!r}")
    return len(_ancestor_chain(graph, ref)) - 1


def order_relation(graph: VisitingOrderGraph, a: str, b: str) -> OrderRelation:
    """Infer the visiting-order relation between two nodes by traversal.

    Identical nodes are Same; inclusion ancestors give Contains /
    ContainedBy.  Otherwise the two distinct children of the lowest
    common ancestor on the paths to a and b are compared: a transition
    chain from one to the other decides Before / After, and Incomparable
    is returned when no chain connects them.
    """
    for ref in (a, b):
        if ref not in graph.nodes:
            raise KeyError(f"unknown node {ref!r}")
    if a == b:
        return OrderRelation.SAME
    chain_a = _ancestor_chain(graph, a)
    chain_b = _ancestor_chain(graph, b)
    if a in chain_b:
        return OrderRelation.CONTAINS
    if b in chain_a:
        return OrderRelation.CONTAINED_BY
    ancestors_a = set(chain_a)
    # First ancestor of b that also lies above a is the lowest common one.
    lca_index_b = next(i for i, ref in enumerate(chain_b) if ref in ancestors_a)
    lca = chain_b[lca_index_b]
    branch_b = chain_b[lca_index_b - 1]
    branch_a = chain_a[chain_a.index(lca) - 1]
    if _chain_reaches(graph, branch_a, branch_b):
        return OrderRelation.BEFORE
    if _chain_reaches(graph, branch_b, branch_a):
        return OrderRelation.AFTER
    return OrderRelation.INCOMPARABLE


def split_multi_visit(entity, partitions: Iterable[Iterable[str]]) -> list[VisitNode]:
    """Split a revisited entity into one node per visit episode.

    Partitions must be non-empty, pairwise disjoint, and drawn from the
    entity's mentions; visit indices follow partition order.
    """
    partition_list = [list(p) for p in partitions]
    violations: list[Violation] = []
    if not partition_list:
        violations.append(
            Violation(ViolationCode.EMPTY_VISIT_PARTITION, entity.id, "no partitions")
        )
    known = set(entity.mention_ids)
    seen: set[str] = set()
    for k, part in enumerate(partition_list):
        if not part:
            violations.append(
                Violation(
                    ViolationCode.EMPTY_VISIT_PARTITION, entity.id, f"partition {k} is empty"
                )
            )
            continue
        for mention_id in part:
            if mention_id not in known:
                violations.append(
                    Violation(
                        ViolationCode.DANGLING_REFERENCE,
                        entity.id,
                        f"partition {k} names foreign mention {mention_id!r}",
                    )
                )
            if mention_id in seen:
                violations.append(
                    Violation(
                        ViolationCode.EMPTY_VISIT_PARTITION,
                        entity.id,
                        f"mention {mention_id!r} appears in more than one partition",
                    )
                )
            seen.add(mention_id)
    if violations:
        raise ViolationError(sorted(violations, key=_violation_key))
    return [VisitNode(entity.id, k) for k in range(len(partition_list))]


def _find_cycles(edges: dict[str, str]) -> list[list[str]]:
    """Simple cycles in a functional graph, each reported once, sorted."""
    cycles = []
    assigned: set[str] = set()
    for start in sorted(edges):
        if start in assigned:
            continue
        path: list[str] = []
        index: dict[str, int] = {}
        current: str | None = start
        while current is not None and current not in assigned:
            if current in index:
                cycle = path[index[current]:]
                cycles.append(cycle)
                assigned.update(path)
                break
            index[current] = len(path)
            path.append(current)
            current = edges.get(current)
        assigned.update(path)
    canonical = []
    for cycle in cycles:
        pivot = cycle.index(min(cycle))
        canonical.append(cycle[pivot:] + cycle[:pivot])
    return sorted(canonical)


def _is_linked(graph: VisitingOrderGraph, ref: str) -> bool:
    """Whether a node carries any edge beyond the default ROOT attachment."""
    if graph.parent.get(ref, ROOT) != ROOT:
        return True
    if ref in graph.successor or ref in graph.successor.values():
        return True
    return ref in set(graph.parent.values())


def validate(graph: VisitingOrderGraph, strict: bool = False) -> list[Violation]:
    """Check every structural constraint; empty result means a valid graph.

    Violations are data, not failures.  ``strict`` additionally requires
    each sibling group to be arranged in one complete transition chain
    (unlinked members of overlap pairs are exempt: they are stand-ins
    represented by their partner).
    """
    violations: list[Violation] = []
    refs = set(graph.nodes)

    for ref in sorted(refs):
        if ref not in graph.parent:
            violations.append(
                Violation(ViolationCode.DANGLING_REFERENCE, ref, "missing parent entry")
            )
    for child, parent in sorted(graph.parent.items()):
        if child not in refs:
            violations.append(
                Violation(ViolationCode.DANGLING_REFERENCE, child, "parent entry for unknown node")
            )
        if parent != ROOT and parent not in refs:
            violations.append(
                Violation(
                    ViolationCode.DANGLING_REFERENCE, child, f"unknown parent {parent!r}"
                )
            )
    for src, dst in sorted(graph.successor.items()):
        for ref in (src, dst):
            if ref not in refs:
                violations.append(
                    Violation(
                        ViolationCode.DANGLING_REFERENCE, ref, "transition names unknown node"
                    )
                )
    for pair in sorted(graph.overlap):
        for ref in pair:
            if ref not in refs:
                violations.append(
                    Violation(ViolationCode.DANGLING_REFERENCE, ref, "overlap names unknown node")
                )
    if violations:
        # Reference errors make the remaining checks ill-defined.
        return sorted(violations, key=_violation_key)

    for node in sorted(graph.nodes.values()):
        if node.entity_id in graph.excluded:
            violations.append(
                Violation(
                    ViolationCode.UNKNOWN_TIME_NODE,
                    node.ref,
                    "entity has unknown visit timing and cannot be a node",
                )
            )

    parent_edges = {c: p for c, p in graph.parent.items() if p != ROOT}
    for cycle in _find_cycles(parent_edges):
        violations.append(
            Violation(ViolationCode.CYCLE_INCLUSION, cycle[0], "inclusion cycle " + " -> ".join(cycle))
        )

    for src, dst in sorted(graph.successor.items()):
        if graph.parent[src] != graph.parent[dst]:
            violations.append(
                Violation(
                    ViolationCode.TRANSITION_NOT_SIBLINGS,
                    src,
                    f"transition to {dst!r} crosses sibling groups",
                )
            )

    predecessors: dict[str, list[str]] = {}
    for src, dst in graph.successor.items():
        predecessors.setdefault(dst, []).append(src)
    for dst, srcs in sorted(predecessors.items()):
        if len(srcs) > 1:
            violations.append(
                Violation(
                    ViolationCode.MULTI_PREDECESSOR,
                    dst,
                    "transition targets from " + ", ".join(sorted(srcs)),
                )
            )

    for cycle in _find_cycles(dict(graph.successor)):
        violations.append(
            Violation(ViolationCode.TRANSITION_CYCLE, cycle[0], "transition cycle " + " -> ".join(cycle))
        )

    for a, b in sorted(graph.overlap):
        if _is_linked(graph, a) and _is_linked(graph, b):
            violations.append(
                Violation(
                    ViolationCode.OVERLAP_BOTH_LINKED,
                    a,
                    f"both {a!r} and {b!r} carry relations; only the representative may",
                )
            )

    if strict and not violations:
        standbys = graph.overlap_standbys()
        for parent_ref, group in sorted(graph.sibling_groups().items()):
            chained = [r for r in group if r not in standbys]
            edges = sum(1 for src in chained if src in graph.successor)
            if edges != len(chained) - 1:
                violations.append(
                    Violation(
                        ViolationCode.INCOMPLETE_CHAIN,
                        parent_ref,
                        f"group of {len(chained)} has {edges} transition edges, "
                        f"not a single complete chain",
                    )
                )

    return sorted(violations, key=_violation_key)


def build_graph(
    nodes: Iterable[VisitNode],
    inclusion: Iterable[tuple[str, str]] = (),
    transition: Iterable[tuple[str, str]] = (),
    overlap: Iterable[tuple[str, str]] = (),
    excluded: Iterable[str] = (),
    strict: bool = False,
) -> VisitingOrderGraph | list[Violation]:
    """Assemble and check a visiting order graph from edge lists.

    ``inclusion`` holds (parent, child) references where the parent may
    be ROOT; nodes without an inclusion entry default to ROOT.
    ``transition`` holds (from, to) references.  Returns the valid graph,
    or the complete list of violations; never a partial graph.
    """
    node_index: dict[str, VisitNode] = {}
    for node in nodes:
        if node.entity_id in ("ROOT", "EOS"):
            raise ValueError(f"entity id {node.entity_id!r} is reserved")
        if node.ref in node_index:
            raise ValueError(f"duplicate node declaration {node.ref!r}")
        node_index[node.ref] = node

    violations: list[Violation] = []
    refs = set(node_index)

    def check_ref(ref: str, role: str, allow_root: bool = False) -> bool:
        if allow_root and ref == ROOT:
            return True
        if ref not in refs:
            violations.append(
                Violation(ViolationCode.DANGLING_REFERENCE, ref, f"unknown node in {role}")
            )
            return False
        return True

    parent_map: dict[str, str] = {}
    for parent, child in inclusion:
        ok = check_ref(parent, "inclusion", allow_root=True)
        ok = check_ref(child, "inclusion") and ok
        if not ok:
            continue
        if child in parent_map and parent_map[child] != parent:
            violations.append(
                Violation(
                    ViolationCode.MULTI_PARENT,
                    child,
                    f"parents {parent_map[child]!r} and {parent!r}",
                )
            )
            continue
        parent_map[child] = parent

    successor_map: dict[str, str] = {}
    predecessor_map: dict[str, str] = {}
    for src, dst in transition:
        ok = check_ref(src, "transition")
        ok = check_ref(dst, "transition") and ok
        if not ok:
            continue
        if src in successor_map and successor_map[src] != dst:
            violations.append(
                Violation(
                    ViolationCode.MULTI_SUCCESSOR,
                    src,
                    f"successors {successor_map[src]!r} and {dst!r}",
                )
            )
            continue
        if dst in predecessor_map and predecessor_map[dst] != src:
            violations.append(
                Violation(
                    ViolationCode.MULTI_PREDECESSOR,
                    dst,
                    f"predecessors {predecessor_map[dst]!r} and {src!r}",
                )
            )
            continue
        successor_map[src] = dst
        predecessor_map[dst] = src

    overlap_pairs = set()
    for a, b in overlap:
        ok = check_ref(a, "overlap")
        ok = check_ref(b, "overlap") and ok
        if not ok:
            continue
        if a == b:
            raise ValueError(f"overlap pair of {a!r} with itself")
        overlap_pairs.add((min(a, b), max(a, b)))

    for ref in refs:
        parent_map.setdefault(ref, ROOT)

    graph = VisitingOrderGraph(
        nodes=node_index,
        parent=parent_map,
        successor=successor_map,
        overlap=frozenset(overlap_pairs),
        excluded=frozenset(excluded),
    )
    violations.extend(validate(graph, strict=strict))
    if violations:
        return sorted(set(violations), key=_violation_key)
    return graph
