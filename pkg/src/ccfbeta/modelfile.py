"""Reader and writer for the sectioned key-value model format.

A file is a sequence of ``[section]`` or ``[section name]`` headers, each
followed by ``key = value`` lines. ``#`` starts a comment. Sections:

``[options]``
    normalization, evaluation, seed, replications, confidence, max_cut_sets
``[weights]``
    CCCG id or label = weight factor (for ``normalization = weights``)
``[labels]``
    attribute category = report label for derived groups
``[component ID]``
    class, attributes (``category:value`` list), hardware, software
    (``<probability> total|independent``)
``[group CLASS LABEL]``
    settings applied to every derived CCCG of that class and label:
    domains, hardware.grades, software.grades, hardware.beta, software.beta
``[cccg ID]``
    an explicit group: members, shared, label, domains, origin and the
    grade/beta keys above. When any are present no groups are derived.
``[tree]``
    ``root = NAME`` plus one ``NAME = <gate> child ...`` line per gate,
    where gate is ``and``, ``or``, ``KofN`` (e.g. ``2of3``) or ``kofn K``,
    and each child is a gate name, a component id, or ``id:domain``.

Grades are either eight positional grades in canonical sub-factor order
or ``sub_factor=grade`` pairs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .domain import Domain, InputMode
from .faulttree import ComponentRef, GateNode
from .model import (Cccg, Component, CouplingAttribute, FailureData, ModelError, Normalization,
                    SolverOptions, SystemModel, derive_cccgs)
from .scoring import Grade, GradeSheet, ScoringError, SubFactor


class ModelFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = ""):
        self.line = line
        where = f"{source or '<model>'}:{line}: " if line else (f"{source}: " if source else "")
        super().__init__(f"{where}{message}")


@dataclass
class _Section:
    kind: str
    name: str
    line: int
    entries: dict[str, tuple[str, int]] = field(default_factory=dict)


@dataclass
class ModelDocument:
    model: SystemModel
    warnings: list[str] = field(default_factory=list)
    cccgs_derived: bool = False
    source: str = ""


SECTION_KEYS = {
    "options": {"normalization", "evaluation", "seed", "replications", "confidence",
                "max_cut_sets"},
    "component": {"class", "attributes", "hardware", "software"},
    "group": {"domains", "hardware.grades", "software.grades", "hardware.beta",
              "software.beta"},
    "cccg": {"members", "shared", "label", "domains", "origin", "hardware.grades",
             "software.grades", "hardware.beta", "software.beta"},
}
FREE_SECTIONS = {"weights", "labels", "tree"}
NAMED_SECTIONS = {"component", "group", "cccg"}

_HEADER = re.compile(r"^\[\s*([A-Za-z_]+)(?:\s+(.+?))?\s*\]$")
_KOFN = re.compile(r"^(\d+)\s*(?:of|oo)\s*(\d+)$", re.IGNORECASE)


def _split_sections(text: str, source: str) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = _HEADER.match(line)
        if header:
            kind = header.group(1).lower()
            name = (header.group(2) or "").strip()
            if kind not in SECTION_KEYS and kind not in FREE_SECTIONS:
                raise ModelFileError(f"unknown section [{kind}]", lineno, source)
            if kind in NAMED_SECTIONS and not name:
                raise ModelFileError(f"[{kind}] section needs a name", lineno, source)
            if kind not in NAMED_SECTIONS and name:
                raise ModelFileError(f"[{kind}] section takes no name", lineno, source)
            current = _Section(kind, name, lineno)
            sections.append(current)
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ModelFileError(f"expected 'key = value', got {line!r}", lineno, source)
        if current is None:
            raise ModelFileError("key outside of any section", lineno, source)
        key = key.strip()
        if not key:
            raise ModelFileError("empty key", lineno, source)
        if key in current.entries:
            raise ModelFileError(f"duplicate key {key!r}", lineno, source)
        current.entries[key] = (value.strip(), lineno)
    return sections


def _items(text: str) -> list[str]:
    return [t for t in re.split(r"[,\s]+", text.strip()) if t]


def _probability(text: str, line: int, source: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ModelFileError(f"not a number: {text!r}", line, source) from None


def _fraction(text: str, line: int, source: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ModelFileError(f"not a rational or decimal beta: {text!r}", line, source) from None


def _failure(domain: Domain, text: str, line: int, source: str) -> FailureData:
    parts = text.split()
    if not parts or len(parts) > 2:
        raise ModelFileError(f"expected '<probability> [total|independent]', got {text!r}",
                             line, source)
    q = _probability(parts[0], line, source)
    try:
        mode = InputMode.parse(parts[1]) if len(parts) == 2 else InputMode.TOTAL
    except ValueError as exc:
        raise ModelFileError(str(exc), line, source) from None
    return FailureData(domain, q, mode)


def _grades(domain: Domain, text: str, line: int, source: str) -> GradeSheet:
    tokens = _items(text)
    try:
        if any("=" in t for t in tokens):
            grades = {}
            for t in tokens:
                sf, sep, g = t.partition("=")
                if not sep:
                    raise ScoringError(f"mixed positional and keyed grades in {text!r}")
                sub_factor = SubFactor.parse(sf)
                if sub_factor in grades:
                    raise ScoringError(f"sub-factor {sf!r} graded twice")
                grades[sub_factor] = Grade.parse(g)
            return GradeSheet(domain, grades)
        return GradeSheet.from_sequence(domain, tokens)
    except ScoringError as exc:
        raise ModelFileError(str(exc), line, source) from None


def _domains(text: str, line: int, source: str) -> frozenset[Domain]:
    try:
        return frozenset(Domain.parse(t) for t in _items(text))
    except ValueError as exc:
        raise ModelFileError(str(exc), line, source) from None


def _beta_fields(sec: _Section, source: str) -> dict:
    out = {}
    for domain in Domain:
        if f"{domain.value}.grades" in sec.entries:
            value, line = sec.entries[f"{domain.value}.grades"]
            out[f"{domain.value}_grades"] = _grades(domain, value, line, source)
        if f"{domain.value}.beta" in sec.entries:
            value, line = sec.entries[f"{domain.value}.beta"]
            out[f"{domain.value}_beta"] = _fraction(value, line, source)
    return out


def _check_keys(sec: _Section, strict: bool, warnings: list[str], source: str) -> None:
    allowed = SECTION_KEYS.get(sec.kind)
    if allowed is None:
        return
    for key, (_, line) in sec.entries.items():
        if key not in allowed:
            msg = f"unknown key {key!r} in [{sec.kind}]"
            if strict:
                raise ModelFileError(msg, line, source)
            warnings.append(f"{source or '<model>'}:{line}: {msg} (ignored)")


def _parse_options(sec: _Section | None, weights: dict, source: str) -> SolverOptions:
    if sec is None:
        return SolverOptions(weights=weights)
    e = sec.entries
    kwargs: dict = {"weights": weights}
    try:
        if "normalization" in e:
            kwargs["normalization"] = Normalization(e["normalization"][0].lower())
        if "evaluation" in e:
            mode = e["evaluation"][0].lower()
            if mode not in ("exact", "rare", "mc"):
                raise ValueError(f"evaluation must be exact, rare or mc, got {mode!r}")
            kwargs["evaluation"] = mode
        if "seed" in e:
            kwargs["mc_seed"] = int(e["seed"][0], 0)
        if "replications" in e:
            kwargs["mc_replications"] = int(float(e["replications"][0]))
        if "confidence" in e:
            kwargs["mc_confidence"] = float(e["confidence"][0])
        if "max_cut_sets" in e:
            kwargs["max_cut_sets"] = int(float(e["max_cut_sets"][0]))
    except ValueError as exc:
        raise ModelFileError(str(exc), sec.line, source) from None
    return SolverOptions(**kwargs)


def _parse_tree(sec: _Section, component_ids: set[str], source: str) -> GateNode | ComponentRef:
    entries = dict(sec.entries)
    if "root" in entries:
        root_name, root_line = entries.pop("root")
    elif "top" in entries:
        root_name, root_line = "top", entries["top"][1]
    else:
        raise ModelFileError("[tree] needs a 'root = NAME' entry or a gate named 'top'",
                             sec.line, source)
    building: set[str] = set()
    built: dict[str, GateNode] = {}

    def child(token: str, line: int):
        if token in entries:
            return gate(token)
        cid, sep, dom = token.partition(":")
        if sep:
            try:
                return ComponentRef(cid, Domain.parse(dom))
            except ValueError as exc:
                raise ModelFileError(str(exc), line, source) from None
        return ComponentRef(token)

    def gate(name: str) -> GateNode:
        if name in built:
            return built[name]
        if name in building:
            raise ModelFileError(f"fault tree cycle through gate {name!r}", entries[name][1],
                                 source)
        building.add(name)
        text, line = entries[name]
        tokens = _items(text)
        if not tokens:
            raise ModelFileError(f"gate {name!r} is empty", line, source)
        head, rest = tokens[0].lower(), tokens[1:]
        vote = None
        m = _KOFN.match(head)
        if head in ("and", "or"):
            kind = head
        elif head == "kofn":
            if not rest:
                raise ModelFileError("kofn gate needs a vote count", line, source)
            kind, vote, rest = "kofn", int(rest[0]), rest[1:]
        elif m:
            kind, vote = "kofn", int(m.group(1))
            if int(m.group(2)) != len(rest):
                raise ModelFileError(
                    f"gate {name!r} declares {m.group(2)} inputs but lists {len(rest)}",
                    line, source)
        else:
            raise ModelFileError(f"unknown gate type {tokens[0]!r}", line, source)
        node = GateNode(kind, tuple(child(t, line) for t in rest), vote=vote, name=name)
        building.discard(name)
        built[name] = node
        return node

    if root_name in entries:
        return gate(root_name)
    # a bare component as the whole tree
    return child(root_name, root_line)


def parse_model(text: str, strict: bool = True, source: str = "") -> ModelDocument:
    sections = _split_sections(text, source)
    warnings: list[str] = []
    for sec in sections:
        _check_keys(sec, strict, warnings, source)

    singles: dict[str, _Section] = {}
    for sec in sections:
        if sec.kind in ("options", "weights", "labels", "tree"):
            if sec.kind in singles:
                raise ModelFileError(f"[{sec.kind}] declared twice", sec.line, source)
            singles[sec.kind] = sec

    weights = {}
    if "weights" in singles:
        for key, (value, line) in singles["weights"].entries.items():
            weights[key] = _probability(value, line, source)
    labels = {k: v for k, (v, _) in singles["labels"].entries.items()} if "labels" in singles \
        else {}
    options = _parse_options(singles.get("options"), weights, source)

    components = []
    for sec in (s for s in sections if s.kind == "component"):
        e = sec.entries
        if "class" not in e:
            raise ModelFileError(f"component {sec.name!r} needs a class", sec.line, source)
        if "hardware" not in e:
            raise ModelFileError(f"component {sec.name!r} needs hardware failure data",
                                 sec.line, source)
        try:
            attrs = frozenset(CouplingAttribute.parse(t)
                              for t in _items(e.get("attributes", ("", 0))[0]))
        except ModelError as exc:
            raise ModelFileError(str(exc), e["attributes"][1], source) from None
        hardware = _failure(Domain.HARDWARE, *e["hardware"], source)
        software = _failure(Domain.SOFTWARE, *e["software"], source) if "software" in e else None
        components.append(Component(sec.name, e["class"][0], attrs, hardware, software))

    explicit = [s for s in sections if s.kind == "cccg"]
    templates = [s for s in sections if s.kind == "group"]
    if explicit and templates:
        raise ModelFileError("[group] templates apply to derived CCCGs only; this file "
                             "declares explicit [cccg] sections", templates[0].line, source)

    if explicit:
        cccgs = []
        for sec in explicit:
            e = sec.entries
            if "members" not in e:
                raise ModelFileError(f"cccg {sec.name!r} needs members", sec.line, source)
            try:
                shared = frozenset(CouplingAttribute.parse(t)
                                   for t in _items(e.get("shared", ("", 0))[0]))
            except ModelError as exc:
                raise ModelFileError(str(exc), e["shared"][1], source) from None
            kwargs = _beta_fields(sec, source)
            members = frozenset(_items(e["members"][0]))
            if "domains" in e:
                kwargs["domains"] = _domains(*e["domains"], source)
            else:
                known = [c for c in components if c.id in members]
                kwargs["domains"] = frozenset(
                    d for d in Domain if all(c.failure(d) is not None for c in known))
            cccgs.append(Cccg(
                id=sec.name,
                members=members,
                shared_attributes=shared,
                label=e.get("label", (sec.name, 0))[0],
                origin=e.get("origin", ("user", 0))[0],
                **kwargs,
            ))
        derived = False
    else:
        cccgs = derive_cccgs(components, labels) if components else []
        class_of = {c.id: c.class_id for c in components}
        used = set()
        for i, group in enumerate(cccgs):
            class_id = class_of[next(iter(group.members))]
            for sec in templates:
                cls, _, label = sec.name.partition(" ")
                if cls == class_id and label.strip() == group.label:
                    used.add(id(sec))
                    kwargs = _beta_fields(sec, source)
                    if "domains" in sec.entries:
                        kwargs["domains"] = _domains(*sec.entries["domains"], source)
                    cccgs[i] = replace(group, **kwargs)
        for sec in templates:
            if id(sec) not in used:
                warnings.append(f"{source or '<model>'}:{sec.line}: [group {sec.name}] matches "
                                "no derived CCCG")
        derived = True

    tree = None
    if "tree" in singles:
        tree = _parse_tree(singles["tree"], {c.id for c in components}, source)

    model = SystemModel(tuple(components), tuple(cccgs), tree, options)
    return ModelDocument(model, warnings, derived, source)


def load_model(path: str | Path, strict: bool = True) -> ModelDocument:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read model file: {exc}", source=str(path)) from None
    return parse_model(text, strict=strict, source=str(path))


def parse_weights(text: str, source: str = "") -> dict[str, float]:
    """``key = weight`` lines (a bare weights file, no section header)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.lower() == "[weights]":
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ModelFileError(f"expected 'key = weight', got {line!r}", lineno, source)
        out[key.strip()] = _probability(value.strip(), lineno, source)
    return out


def _format_grades(sheet: GradeSheet) -> str:
    return " ".join(f"{sf.value}={g.value}" for sf, g in sheet.grades.items())


def dump_model(model: SystemModel) -> str:
    """Serialise a model with its CCCGs written out explicitly."""
    out: list[str] = []
    o = model.options
    out += ["[options]",
            f"normalization = {o.normalization.value}",
            f"evaluation = {o.evaluation}",
            f"seed = {o.mc_seed}",
            f"replications = {o.mc_replications}",
            f"confidence = {o.mc_confidence!r}",
            f"max_cut_sets = {o.max_cut_sets}",
            ""]
    if o.weights:
        out.append("[weights]")
        out += [f"{k} = {v!r}" for k, v in sorted(o.weights.items())]
        out.append("")
    for c in model.components:
        out.append(f"[component {c.id}]")
        out.append(f"class = {c.class_id}")
        out.append("attributes = " + ", ".join(str(a) for a in sorted(c.attributes)))
        out.append(f"hardware = {c.hardware.q!r} {c.hardware.mode.value}")
        if c.software is not None:
            out.append(f"software = {c.software.q!r} {c.software.mode.value}")
        out.append("")
    for g in model.cccgs:
        out.append(f"[cccg {g.id}]")
        out.append("members = " + " ".join(g.sorted_members))
        if g.shared_attributes:
            out.append("shared = " + ", ".join(str(a) for a in sorted(g.shared_attributes)))
        out.append(f"label = {g.label}")
        out.append("domains = " + " ".join(d.value for d in Domain if d in g.domains))
        out.append(f"origin = {g.origin}")
        for d in Domain:
            if g.grades(d) is not None:
                out.append(f"{d.value}.grades = {_format_grades(g.grades(d))}")
            if g.override(d) is not None:
                out.append(f"{d.value}.beta = {g.override(d)}")
        out.append("")
    if model.tree is not None:
        out.append("[tree]")
        out += _dump_tree(model.tree)
        out.append("")
    return "\n".join(out)


def _dump_tree(tree) -> list[str]:
    if isinstance(tree, ComponentRef):
        return [f"root = {tree}"]
    names: dict[int, str] = {}
    lines: list[str] = []
    taken = set()

    def name_of(node: GateNode) -> str:
        if id(node) not in names:
            base = node.name or f"gate{len(names) + 1}"
            name = base
            while name in taken:
                name = f"{base}_{len(taken)}"
            taken.add(name)
            names[id(node)] = name
        return names[id(node)]

    seen = set()

    def emit(node: GateNode):
        if id(node) in seen:
            return
        seen.add(id(node))
        parts = []
        for c in node.children:
            if isinstance(c, GateNode):
                emit(c)
                parts.append(name_of(c))
            else:
                parts.append(str(c))
        head = node.kind if node.kind != "kofn" else f"{node.k}of{len(node.children)}"
        lines.append(f"{name_of(node)} = {head} " + " ".join(parts))

    emit(tree)
    return [f"root = {name_of(tree)}"] + lines
