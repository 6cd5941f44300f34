"""System model: components, coupling attributes, failure data and CCCGs."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .domain import Domain, InputMode
from .scoring import GradeSheet, MissingCell, beta_pbf2

if TYPE_CHECKING:
    from .faulttree import GateNode

ALL_LABEL = "ALL"


class ModelError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CouplingAttribute:
    category: str
    value: str

    def __post_init__(self):
        if not self.category or not self.value:
            raise ModelError(f"coupling attribute needs category and value, got {self!r}")

    def __str__(self) -> str:
        return f"{self.category}:{self.value}"

    @classmethod
    def parse(cls, text: str) -> "CouplingAttribute":
        category, sep, value = text.strip().partition(":")
        if not sep:
            raise ModelError(f"coupling attribute {text!r} is not 'category:value'")
        return cls(category.strip(), value.strip())


@dataclass(frozen=True)
class FailureData:
    domain: Domain
    q: float
    mode: InputMode = InputMode.TOTAL


@dataclass(frozen=True)
class Component:
    id: str
    class_id: str
    attributes: frozenset[CouplingAttribute]
    hardware: FailureData
    software: FailureData | None = None

    def failure(self, domain: Domain) -> FailureData | None:
        return self.hardware if domain is Domain.HARDWARE else self.software

    @property
    def domains(self) -> tuple[Domain, ...]:
        return tuple(d for d in Domain if self.failure(d) is not None)

    @property
    def categories(self) -> frozenset[str]:
        return frozenset(a.category for a in self.attributes)


@dataclass(frozen=True)
class Cccg:
    """A common cause component group.

    ``domains`` lists the failure domains in which the group produces a
    common cause event; a group may couple hardware only (e.g. a shared
    rack) while the same members share a single software group.
    """

    id: str
    members: frozenset[str]
    shared_attributes: frozenset[CouplingAttribute]
    domains: frozenset[Domain] = frozenset(Domain)
    label: str = ""
    hardware_grades: GradeSheet | None = None
    software_grades: GradeSheet | None = None
    hardware_beta: Fraction | None = None
    software_beta: Fraction | None = None
    origin: str = "user"

    def grades(self, domain: Domain) -> GradeSheet | None:
        return self.hardware_grades if domain is Domain.HARDWARE else self.software_grades

    def override(self, domain: Domain) -> Fraction | None:
        return self.hardware_beta if domain is Domain.HARDWARE else self.software_beta

    def beta(self, domain: Domain) -> Fraction | None:
        """Exact beta for ``domain``: override if set, else the graded score."""
        override = self.override(domain)
        if override is not None:
            return override
        sheet = self.grades(domain)
        if sheet is None:
            return None
        return beta_pbf2(sheet).fraction

    @property
    def sorted_members(self) -> tuple[str, ...]:
        return tuple(sorted(self.members))


class Normalization(str, Enum):
    NONE = "none"
    PROPORTIONAL = "proportional"
    WEIGHTS = "weights"


@dataclass(frozen=True)
class SolverOptions:
    normalization: Normalization = Normalization.PROPORTIONAL
    weights: Mapping[str, float] = field(default_factory=dict)
    evaluation: str = "exact"
    mc_seed: int = 42
    mc_replications: int = 100_000
    mc_confidence: float = 0.95
    max_cut_sets: int = 1_000_000

    def __hash__(self):
        return hash((self.normalization, tuple(sorted(self.weights.items())),
                     self.evaluation, self.mc_seed, self.mc_replications,
                     self.mc_confidence, self.max_cut_sets))


@dataclass(frozen=True)
class SystemModel:
    components: tuple[Component, ...]
    cccgs: tuple[Cccg, ...] = ()
    tree: "GateNode | None" = None
    options: SolverOptions = field(default_factory=SolverOptions)

    def component(self, component_id: str) -> Component:
        for c in self.components:
            if c.id == component_id:
                return c
        raise KeyError(component_id)

    @property
    def component_ids(self) -> list[str]:
        return [c.id for c in self.components]

    def cccg(self, cccg_id: str) -> Cccg:
        for g in self.cccgs:
            if g.id == cccg_id:
                return g
        raise KeyError(cccg_id)

    def groups_of(self, component_id: str, domain: Domain) -> list[Cccg]:
        return [g for g in self.cccgs if component_id in g.members and domain in g.domains]


def _check_class_categories(components: Sequence[Component]) -> None:
    by_class: dict[str, set[frozenset[str]]] = defaultdict(set)
    for c in components:
        by_class[c.class_id].add(c.categories)
    for class_id, shapes in sorted(by_class.items()):
        if len(shapes) > 1:
            raise ModelError(
                f"components of class {class_id!r} carry differing attribute categories"
            )


def group_label(shared: Iterable[CouplingAttribute], covers_class: bool,
                labels: Mapping[str, str] | None = None) -> str:
    if covers_class:
        return ALL_LABEL
    labels = labels or {}
    names = sorted({labels.get(a.category, a.category.upper()) for a in shared})
    return "+".join(names)


def _derived_id(class_id: str, label: str, shared: frozenset[CouplingAttribute]) -> str:
    if label == ALL_LABEL:
        return f"{class_id}-{ALL_LABEL}"
    return f"{class_id}-" + "+".join(f"{a.category}={a.value}" for a in sorted(shared))


def derive_cccgs(components: Sequence[Component],
                 labels: Mapping[str, str] | None = None) -> list[Cccg]:
    """Group identical components by shared coupling-attribute values.

    Within each class, every attribute value held by two or more members
    yields the maximal set of members holding it. Candidates with identical
    member sets are merged. ``labels`` maps attribute categories to report
    labels (default: upper-cased category); a group spanning its whole class
    is labelled ``ALL``.
    """
    _check_class_categories(components)
    by_class: dict[str, list[Component]] = defaultdict(list)
    for c in components:
        by_class[c.class_id].append(c)

    groups: list[Cccg] = []
    for class_id, members in by_class.items():
        holders: dict[CouplingAttribute, set[str]] = defaultdict(set)
        for c in members:
            for attr in c.attributes:
                holders[attr].add(c.id)

        merged: dict[frozenset[str], set[CouplingAttribute]] = defaultdict(set)
        for attr, ids in holders.items():
            if len(ids) >= 2:
                merged[frozenset(ids)].add(attr)

        candidates = [(ids, frozenset(attrs)) for ids, attrs in merged.items()]
        kept = [
            (ids, attrs) for ids, attrs in candidates
            if not any(ids < other_ids and attrs <= other_attrs
                       for other_ids, other_attrs in candidates)
        ]

        class_ids = frozenset(c.id for c in members)
        for ids, attrs in kept:
            domains = frozenset(
                d for d in Domain
                if all(c.failure(d) is not None for c in members if c.id in ids)
            )
            label = group_label(attrs, ids == class_ids, labels)
            groups.append(Cccg(
                id=_derived_id(class_id, label, attrs),
                members=ids,
                shared_attributes=attrs,
                domains=domains,
                label=label,
                origin="derived",
            ))

    groups.sort(key=lambda g: (-len(g.members), g.sorted_members, g.id))
    return groups


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    subject: str = ""

    def __str__(self) -> str:
        where = f" [{self.subject}]" if self.subject else ""
        return f"{self.severity.value}: {self.code}{where}: {self.message}"


def validate_model(model: SystemModel) -> list[Diagnostic]:
    """Check every model invariant; an empty list means the model is solvable."""
    out: list[Diagnostic] = []

    def error(code, message, subject=""):
        out.append(Diagnostic(Severity.ERROR, code, message, subject))

    def warning(code, message, subject=""):
        out.append(Diagnostic(Severity.WARNING, code, message, subject))

    if not model.components:
        error("NO_COMPONENTS", "model declares no components")

    by_id: dict[str, Component] = {}
    for c in model.components:
        if c.id in by_id:
            error("DUPLICATE_COMPONENT", "component id declared twice", c.id)
        by_id[c.id] = c
        if c.hardware.domain is not Domain.HARDWARE:
            error("DOMAIN_MISMATCH", "hardware failure data tagged with another domain", c.id)
        if c.software is not None and c.software.domain is not Domain.SOFTWARE:
            error("DOMAIN_MISMATCH", "software failure data tagged with another domain", c.id)
        for data in (c.hardware, c.software):
            if data is not None and not (0.0 <= data.q <= 1.0):
                error("Q_OUT_OF_RANGE", f"{data.domain.value} q={data.q!r} outside [0, 1]", c.id)

    categories: dict[str, frozenset[str]] = {}
    for c in model.components:
        seen = categories.setdefault(c.class_id, c.categories)
        if seen != c.categories:
            error("CLASS_CATEGORY_MISMATCH",
                  f"attribute categories differ from other members of class {c.class_id!r}",
                  c.id)

    seen_groups: set[tuple[frozenset[str], frozenset[CouplingAttribute]]] = set()
    seen_ids: set[str] = set()
    for g in model.cccgs:
        if g.id in seen_ids:
            error("DUPLICATE_CCCG_ID", "CCCG id declared twice", g.id)
        seen_ids.add(g.id)
        key = (g.members, g.shared_attributes)
        if key in seen_groups:
            error("DUPLICATE_CCCG", "another CCCG has the same members and attributes", g.id)
        seen_groups.add(key)

        if len(g.members) < 2:
            error("CCCG_TOO_SMALL", f"CCCG has {len(g.members)} member(s); at least 2 required",
                  g.id)
        unknown = sorted(m for m in g.members if m not in by_id)
        if unknown:
            error("UNKNOWN_MEMBER", f"members not declared as components: {', '.join(unknown)}",
                  g.id)
        known = [by_id[m] for m in sorted(g.members) if m in by_id]
        if len({c.class_id for c in known}) > 1:
            error("MIXED_CLASS", "CCCG mixes component classes", g.id)
        for attr in sorted(g.shared_attributes):
            lacking = [c.id for c in known if attr not in c.attributes]
            if lacking:
                error("ATTRIBUTE_NOT_SHARED",
                      f"{attr} not held by {', '.join(lacking)}", g.id)
        if not g.domains:
            warning("NO_DOMAINS", "CCCG applies to no failure domain", g.id)

        for domain in sorted(g.domains, key=lambda d: d.value):
            lacking = [c.id for c in known if c.failure(domain) is None]
            if lacking:
                error("MISSING_DOMAIN_DATA",
                      f"{domain.value} CCCG includes members without {domain.value} data: "
                      f"{', '.join(lacking)}", g.id)
            override = g.override(domain)
            sheet = g.grades(domain)
            if override is None and sheet is None:
                error("MISSING_BETA", f"no {domain.value} grades or beta override", g.id)
            if override is not None and not (0 <= override <= 1):
                error("BETA_OUT_OF_RANGE",
                      f"{domain.value} beta override {override} outside [0, 1]", g.id)
            if override is not None and sheet is not None:
                warning("OVERRIDE_SHADOWS_GRADES",
                        f"{domain.value} beta override takes precedence over grades", g.id)
            if sheet is not None:
                if sheet.domain is not domain:
                    error("SHEET_DOMAIN_MISMATCH",
                          f"{domain.value} slot holds a {sheet.domain.value} grade sheet", g.id)
                else:
                    try:
                        beta_pbf2(sheet)
                    except MissingCell as exc:
                        error("MISSING_CELL", str(exc), g.id)
            data = {(c.failure(domain).q, c.failure(domain).mode)
                    for c in known if c.failure(domain) is not None}
            if len({q for q, _ in data}) > 1:
                error("NONIDENTICAL_QT",
                      f"members carry different {domain.value} failure probabilities", g.id)
            elif len(data) > 1:
                error("NONIDENTICAL_MODE",
                      f"members declare different {domain.value} input modes", g.id)

    if model.tree is not None:
        from .faulttree import iter_references, GateNode

        def walk(node):
            if isinstance(node, GateNode):
                if not node.children:
                    error("EMPTY_GATE", "gate has no children", node.name)
                elif not (1 <= node.k <= len(node.children)):
                    error("KOFN_INVALID", f"k={node.k} with {len(node.children)} children",
                          node.name)
                for child in node.children:
                    walk(child)

        walk(model.tree)
        for ref in iter_references(model.tree):
            comp = by_id.get(ref.component_id)
            if comp is None:
                error("TREE_UNKNOWN_COMPONENT", "fault tree references an undeclared component",
                      ref.component_id)
            elif ref.domain is not None and comp.failure(ref.domain) is None:
                error("TREE_UNKNOWN_DOMAIN",
                      f"fault tree references missing {ref.domain.value} data", ref.component_id)

    return out


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diagnostics)
