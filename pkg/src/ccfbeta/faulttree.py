"""Fault tree evaluation over independent and common cause basic events.

A component fails when any event covering it occurs: its own independent
event, or the common cause event of any CCCG it belongs to. CCCG events
fail every member at once and no sub-combinations exist, so a component in
groups {A, B, C} and {A, B} sees exactly three covering events.

Two evaluators are provided. :func:`eval_exact` enumerates all 2^n event
outcomes; :func:`eval_rare_event` sums cut-set products over minimal cut
sets and is an upper bound on the exact value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import TYPE_CHECKING, Iterable, Iterator, Sequence

import numpy as np

from ._backend import get_backend
from .domain import Domain

if TYPE_CHECKING:
    from .bfm import FailureBreakdown
    from .model import SystemModel

MAX_EXACT_EVENTS = 25
DEFAULT_MAX_CUT_SETS = 1_000_000
CONSISTENCY_RTOL = 1e-12


class FaultTreeError(ValueError):
    pass


class TooLarge(FaultTreeError):
    pass


class CutSetOverflow(FaultTreeError):
    pass


class RareEventWarning(UserWarning):
    """The rare-event sum exceeded 1, so the approximation is meaningless."""


class EventKind(str, Enum):
    INDEPENDENT = "independent"
    COMMON_CAUSE = "common_cause"


@dataclass(frozen=True)
class BasicEvent:
    id: str
    kind: EventKind
    source: str
    domain: Domain
    probability: float
    covered: frozenset[str]


def independent_event_id(component_id: str, domain: Domain) -> str:
    return f"I.{component_id}.{domain.short}"


def ccf_event_id(cccg_id: str, domain: Domain) -> str:
    return f"CCF.{cccg_id}.{domain.short}"


@dataclass(frozen=True)
class ComponentRef:
    """Tree leaf: failure of a component, in one domain or in any domain."""

    component_id: str
    domain: Domain | None = None

    def __str__(self) -> str:
        if self.domain is None:
            return self.component_id
        return f"{self.component_id}:{self.domain.value}"


@dataclass(frozen=True)
class GateNode:
    kind: str
    children: tuple["GateNode | ComponentRef", ...]
    vote: int | None = None
    # display label only; two gates with the same logic compare equal
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in ("and", "or", "kofn"):
            raise FaultTreeError(f"unknown gate kind {self.kind!r}")
        if self.kind == "kofn" and self.vote is None:
            raise FaultTreeError("k-of-n gate needs a vote count")

    @property
    def k(self) -> int:
        if self.kind == "and":
            return len(self.children)
        if self.kind == "or":
            return 1
        return self.vote


def and_gate(*children, name: str = "") -> GateNode:
    return GateNode("and", tuple(children), name=name)


def or_gate(*children, name: str = "") -> GateNode:
    return GateNode("or", tuple(children), name=name)


def kofn_gate(k: int, *children, name: str = "") -> GateNode:
    return GateNode("kofn", tuple(children), vote=k, name=name)


Node = GateNode | ComponentRef


def iter_references(node: Node) -> Iterator[ComponentRef]:
    if isinstance(node, ComponentRef):
        yield node
        return
    for child in node.children:
        yield from iter_references(child)


def expand_events(model: "SystemModel",
                  breakdowns: Sequence["FailureBreakdown"]) -> list[BasicEvent]:
    """Independent event per breakdown plus one shared event per (CCCG, domain)."""
    events = []
    ccf: dict[tuple[str, Domain], float] = {}
    for b in breakdowns:
        events.append(BasicEvent(
            id=independent_event_id(b.component_id, b.domain),
            kind=EventKind.INDEPENDENT,
            source=b.component_id,
            domain=b.domain,
            probability=b.q_independent,
            covered=frozenset({b.component_id}),
        ))
        for cccg_id, p in b.contributions:
            key = (cccg_id, b.domain)
            seen = ccf.setdefault(key, p)
            if not math.isclose(seen, p, rel_tol=CONSISTENCY_RTOL, abs_tol=0.0):
                raise FaultTreeError(
                    f"members of CCCG {cccg_id!r} disagree on the {b.domain.value} CCF "
                    f"probability ({seen!r} vs {p!r} from {b.component_id!r})"
                )

    covered_by_domain = {(b.component_id, b.domain) for b in breakdowns}
    for (cccg_id, domain), p in ccf.items():
        group = model.cccg(cccg_id)
        missing = [m for m in group.sorted_members if (m, domain) not in covered_by_domain]
        if missing:
            raise FaultTreeError(
                f"CCCG {cccg_id!r} members lack {domain.value} breakdowns: {', '.join(missing)}"
            )
        events.append(BasicEvent(
            id=ccf_event_id(cccg_id, domain),
            kind=EventKind.COMMON_CAUSE,
            source=cccg_id,
            domain=domain,
            probability=p,
            covered=group.members,
        ))
    events.sort(key=lambda e: (e.kind != EventKind.INDEPENDENT, e.id))
    return events


def covering_events(events: Iterable[BasicEvent], ref: ComponentRef) -> list[BasicEvent]:
    return [e for e in events
            if ref.component_id in e.covered and (ref.domain is None or e.domain is ref.domain)]


@dataclass(frozen=True)
class Program:
    """Flattened threshold-gate form of a tree, consumed by the kernels."""

    events: tuple[BasicEvent, ...]
    node_k: np.ndarray
    child_ptr: np.ndarray
    child_idx: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([e.probability for e in self.events], dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return len(self.node_k)


class _ProgramBuilder:
    def __init__(self, events: Sequence[BasicEvent]):
        self.all_events = list(events)
        self.used: dict[str, int] = {}
        self.used_events: list[BasicEvent] = []
        self.nodes: list[tuple[int, list[tuple[str, int]]]] = []
        self.leaf_memo: dict[ComponentRef, int] = {}

    def _event(self, event: BasicEvent) -> int:
        if event.id not in self.used:
            self.used[event.id] = len(self.used_events)
            self.used_events.append(event)
        return self.used[event.id]

    def _add(self, k: int, children: list[tuple[str, int]]) -> int:
        self.nodes.append((k, children))
        return len(self.nodes) - 1

    def leaf(self, ref: ComponentRef) -> int:
        if ref not in self.leaf_memo:
            cover = covering_events(self.all_events, ref)
            if not cover:
                raise FaultTreeError(f"no basic events cover tree leaf {ref}")
            self.leaf_memo[ref] = self._add(1, [("e", self._event(e)) for e in cover])
        return self.leaf_memo[ref]

    def node(self, node: Node) -> int:
        if isinstance(node, ComponentRef):
            return self.leaf(node)
        if not node.children:
            raise FaultTreeError(f"gate {node.name or node.kind!r} has no children")
        if not (1 <= node.k <= len(node.children)):
            raise FaultTreeError(f"gate {node.name or node.kind!r}: k={node.k} with "
                                 f"{len(node.children)} children")
        children = [("n", self.node(c)) for c in node.children]
        return self._add(node.k, children)

    def build(self, tree: Node) -> Program:
        top = self.node(tree)
        if top != len(self.nodes) - 1:
            # memoised leaf as the root; re-emit it so the root is last
            self._add(1, [("n", top)])
        n_events = len(self.used_events)
        node_k = np.array([k for k, _ in self.nodes], dtype=np.int32)
        ptr = [0]
        idx: list[int] = []
        for _, children in self.nodes:
            for tag, i in children:
                idx.append(i if tag == "e" else i + n_events)
            ptr.append(len(idx))
        return Program(tuple(self.used_events), node_k,
                       np.array(ptr, dtype=np.int32), np.array(idx, dtype=np.int32))


def compile_tree(tree: Node, events: Sequence[BasicEvent]) -> Program:
    """Flatten ``tree`` keeping only the events that reach it."""
    return _ProgramBuilder(events).build(tree)


def structure_fails(tree: Node, events: Sequence[BasicEvent], fired: Iterable[str]) -> bool:
    """Evaluate the tree for a given set of occurred event ids."""
    fired = set(fired)

    def walk(node: Node) -> bool:
        if isinstance(node, ComponentRef):
            return any(e.id in fired for e in covering_events(events, node))
        return sum(walk(c) for c in node.children) >= node.k

    return walk(tree)


def eval_exact(tree: Node, events: Sequence[BasicEvent], backend: str | None = None,
               max_events: int = MAX_EXACT_EVENTS) -> float:
    program = compile_tree(tree, events)
    n = len(program.events)
    if n > max_events:
        raise TooLarge(
            f"{n} basic events reach the tree; exact enumeration is limited to "
            f"{max_events} (use Monte Carlo instead)"
        )
    kernels = get_backend(backend)
    return float(kernels.exact_probability(program.probabilities, program.node_k,
                                           program.child_ptr, program.child_idx))


def _minimize(sets: Iterable[frozenset[str]]) -> list[frozenset[str]]:
    kept: list[frozenset[str]] = []
    for s in sorted(set(sets), key=lambda s: (len(s), sorted(s))):
        if not any(k <= s for k in kept):
            kept.append(s)
    return kept


def minimal_cut_sets(tree: Node, events: Sequence[BasicEvent],
                     max_cut_sets: int = DEFAULT_MAX_CUT_SETS) -> list[frozenset[str]]:
    memo: dict[int, list[frozenset[str]]] = {}

    def check(n: int):
        if n > max_cut_sets:
            raise CutSetOverflow(f"cut set enumeration exceeded {max_cut_sets} sets")

    def conj(families: list[list[frozenset[str]]]) -> list[frozenset[str]]:
        acc = [frozenset()]
        for fam in families:
            check(len(acc) * len(fam))
            acc = _minimize(a | b for a in acc for b in fam)
        return acc

    def walk(node: Node) -> list[frozenset[str]]:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, ComponentRef):
            cover = covering_events(events, node)
            if not cover:
                raise FaultTreeError(f"no basic events cover tree leaf {node}")
            result = [frozenset({e.id}) for e in cover]
        else:
            families = [walk(c) for c in node.children]
            k = node.k
            if k == 1:
                result = _minimize(s for fam in families for s in fam)
            else:
                pool: list[frozenset[str]] = []
                for combo in combinations(families, k):
                    pool.extend(conj(list(combo)))
                    check(len(pool))
                result = _minimize(pool)
        check(len(result))
        memo[key] = result
        return result

    return walk(tree)


@dataclass(frozen=True)
class RareEventResult:
    probability: float
    cut_sets: tuple[tuple[str, ...], ...]

    @property
    def exceeds_one(self) -> bool:
        return self.probability > 1.0

    @property
    def reported(self) -> float:
        return min(self.probability, 1.0)


def eval_rare_event(tree: Node, events: Sequence[BasicEvent],
                    max_cut_sets: int = DEFAULT_MAX_CUT_SETS) -> RareEventResult:
    """Sum over minimal cut sets of the product of their event probabilities."""
    prob = {e.id: e.probability for e in events}
    cuts = minimal_cut_sets(tree, events, max_cut_sets)
    total = math.fsum(math.prod(prob[i] for i in c) for c in cuts)
    if total > 1.0:
        warnings.warn(f"rare-event sum {total:.4g} exceeds 1; approximation invalid",
                      RareEventWarning, stacklevel=2)
    ordered = sorted((tuple(sorted(c)) for c in cuts), key=lambda c: (len(c), c))
    return RareEventResult(total, tuple(ordered))


def format_cut_sets(cut_sets: Iterable[Iterable[str]]) -> str:
    lines = sorted((tuple(sorted(c)) for c in cut_sets), key=lambda c: (len(c), c))
    return "".join(",".join(c) + "\n" for c in lines)


@dataclass(frozen=True)
class SymmetricGroup:
    """Failure probabilities Q_k^m of events involving k of m identical components."""

    m: int
    q: dict[int, float]

    def __post_init__(self):
        if set(self.q) != set(range(1, self.m + 1)):
            raise FaultTreeError(f"symmetric group of size {self.m} needs keys 1..{self.m}")
        for k, v in self.q.items():
            if not (0.0 <= v <= 1.0):
                raise FaultTreeError(f"Q_{k} = {v!r} outside [0, 1]")


def eval_symmetric_2of3(group: SymmetricGroup) -> float:
    """2-out-of-3 failure under symmetry: 3*Q1^2 + 3*Q2 + Q3 (rare-event form)."""
    if group.m != 3:
        raise FaultTreeError(f"2-of-3 evaluation needs m = 3, got {group.m}")
    q1, q2, q3 = group.q[1], group.q[2], group.q[3]
    total = 3 * q1 * q1 + 3 * q2 + q3
    if total > 1.0:
        warnings.warn(f"2-of-3 rare-event sum {total:.4g} exceeds 1; approximation invalid",
                      RareEventWarning, stacklevel=2)
    return total


def analytic_marginal(events: Iterable[BasicEvent], component_id: str,
                      domain: Domain | None = None) -> float:
    """P(component fails) = 1 - prod(1 - p) over its covering events."""
    ref = ComponentRef(component_id, domain)
    return 1.0 - math.prod(1.0 - e.probability for e in covering_events(events, ref))
