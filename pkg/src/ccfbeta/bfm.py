"""Modified beta factor model for components belonging to several CCCGs.

Each group ``w`` containing a component contributes ``beta_w * Q_t`` to its
dependent failure probability, and the independent part is what remains::

    beta_t = sum(beta_w)
    Q_I    = (1 - beta_t) * Q_t

Betas are carried as exact fractions until the final multiplication so
that near-unity ``beta_t`` does not lose the independent residual to
floating-point cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .domain import Domain, InputMode
from .model import Component, FailureData, Normalization, SystemModel

DEGENERATE_MARGIN = 1e-9
SENSITIVE_BETA_TOTAL = Fraction(99, 100)


class BfmError(ValueError):
    pass


class DegenerateTotal(BfmError):
    pass


class SolveError(BfmError):
    """Collects every per-component failure from :func:`solve_all`."""

    def __init__(self, failures: list[tuple[str, Domain, str]]):
        self.failures = failures
        lines = [f"{cid} ({domain.value}): {msg}" for cid, domain, msg in failures]
        super().__init__("; ".join(lines))


@dataclass(frozen=True)
class BetaAssignment:
    component_id: str
    domain: Domain
    entries: tuple[tuple[str, Fraction], ...]
    normalization_applied: Normalization | None = None
    raw_total: Fraction | None = None

    @property
    def beta_total(self) -> Fraction:
        return sum((b for _, b in self.entries), Fraction(0))

    def beta(self, cccg_id: str) -> Fraction:
        return dict(self.entries)[cccg_id]


@dataclass(frozen=True)
class FailureBreakdown:
    component_id: str
    domain: Domain
    q_total: float
    q_independent: float
    contributions: tuple[tuple[str, float], ...]
    input_mode: InputMode
    betas: BetaAssignment | None = None
    notes: tuple[str, ...] = field(default=())

    @property
    def q_dependent(self) -> float:
        return sum(p for _, p in self.contributions)

    def contribution(self, cccg_id: str) -> float:
        return dict(self.contributions)[cccg_id]

    @property
    def normalized(self) -> bool:
        return self.betas is not None and self.betas.normalization_applied is not None


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def _lookup_weight(weights: Mapping[str, float], cccg_id: str, label: str) -> Fraction:
    if cccg_id in weights:
        return _as_fraction(weights[cccg_id])
    if label in weights:
        return _as_fraction(weights[label])
    return Fraction(1)


def resolve_betas(model: SystemModel, component: Component, domain: Domain) -> BetaAssignment:
    entries = []
    for group in model.groups_of(component.id, domain):
        beta = group.beta(domain)
        if beta is None:
            raise BfmError(f"CCCG {group.id!r} has neither {domain.value} grades nor an override")
        entries.append((group.id, beta))

    total = sum((b for _, b in entries), Fraction(0))
    if total <= 1:
        return BetaAssignment(component.id, domain, tuple(entries))

    options = model.options
    if options.normalization is Normalization.PROPORTIONAL:
        scaled = tuple((gid, b / total) for gid, b in entries)
    elif options.normalization is Normalization.WEIGHTS:
        labels = {g.id: g.label for g in model.cccgs}
        scaled = tuple(
            (gid, b * _lookup_weight(options.weights, gid, labels.get(gid, "")))
            for gid, b in entries
        )
        if any(b < 0 for _, b in scaled):
            raise BfmError(f"negative weight for component {component.id!r}")
    else:
        raise BfmError(f"beta total {float(total):.6g} exceeds 1 and normalization is disabled")

    assignment = BetaAssignment(component.id, domain, scaled, options.normalization, total)
    if assignment.beta_total > 1:
        raise BfmError(
            f"beta total {float(assignment.beta_total):.6g} still exceeds 1 after "
            f"{options.normalization.value} normalization"
        )
    return assignment


def solve_component(betas: BetaAssignment, failure: FailureData) -> FailureBreakdown:
    beta_t = betas.beta_total
    if beta_t > 1:
        raise BfmError(f"beta total {float(beta_t):.6g} exceeds 1")
    residual = 1 - beta_t

    if failure.mode is InputMode.TOTAL:
        q_total = failure.q
        q_independent = float(residual) * q_total
    else:
        if beta_t >= 1 - DEGENERATE_MARGIN:
            raise DegenerateTotal(
                f"independent probability given but beta total {float(beta_t):.12g} leaves "
                "no independent share"
            )
        q_independent = failure.q
        q_total = q_independent / float(residual)
        if q_total > 1:
            raise BfmError(f"total failure probability {q_total:.6g} exceeds 1")

    contributions = tuple((gid, float(b) * q_total) for gid, b in betas.entries)
    notes = []
    if beta_t > SENSITIVE_BETA_TOTAL:
        notes.append(
            f"beta total {float(beta_t):.5f} > 0.99: independent share is a small residual "
            "and sensitive to beta rounding"
        )
    if betas.normalization_applied is not None:
        notes.append(f"betas normalized ({betas.normalization_applied.value}) from total "
                     f"{float(betas.raw_total):.6g}")
    return FailureBreakdown(
        component_id=betas.component_id,
        domain=betas.domain,
        q_total=q_total,
        q_independent=q_independent,
        contributions=contributions,
        input_mode=failure.mode,
        betas=betas,
        notes=tuple(notes),
    )


def solve_all(model: SystemModel) -> list[FailureBreakdown]:
    """One breakdown per (component, domain), sorted by component id then domain."""
    results: list[FailureBreakdown] = []
    failures: list[tuple[str, Domain, str]] = []
    for component in sorted(model.components, key=lambda c: c.id):
        for domain in component.domains:
            try:
                betas = resolve_betas(model, component, domain)
                results.append(solve_component(betas, component.failure(domain)))
            except BfmError as exc:
                failures.append((component.id, domain, str(exc)))
    if failures:
        raise SolveError(failures)
    return results
