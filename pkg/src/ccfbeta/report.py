"""Report tables: per-component failure breakdowns and per-CCCG betas."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .bfm import FailureBreakdown
from .domain import Domain
from .model import ALL_LABEL, SystemModel
from .scoring import SubFactor, beta_pbf2, table_for

NA = "N/A"
INDIVIDUAL = "INDIVIDUAL"
TOTAL = "Total"


def sci(x: float) -> str:
    """Four significant digits in scientific notation, e.g. ``5.943E-06``."""
    return f"{x:.3E}"


@dataclass
class Table:
    columns: list[str]
    rows: list[list[str]] = field(default_factory=list)

    def to_text(self) -> str:
        widths = [len(c) for c in self.columns]
        for row in self.rows:
            widths = [max(w, len(v)) for w, v in zip(widths, row)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(self.columns, widths)).rstrip()]
        lines.append("  ".join("-" * w for w in widths))
        for row in self.rows:
            lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_text()


def category_columns(model: SystemModel) -> list[str]:
    """CCCG labels ordered from the smallest groups up, ``ALL`` last."""
    sizes: dict[str, list[int]] = defaultdict(list)
    for g in model.cccgs:
        sizes[g.label].append(len(g.members))

    def key(label):
        mean = sum(sizes[label]) / len(sizes[label])
        return (label == ALL_LABEL, mean, label)

    return sorted(sizes, key=key)


@dataclass(frozen=True)
class BreakdownRow:
    name: str
    domain: Domain
    members: tuple[str, ...]
    individual: float
    by_label: dict[str, float]
    total: float
    flags: tuple[str, ...]

    def values(self, labels: Sequence[str]) -> tuple:
        return (self.individual, *(self.by_label.get(lbl) for lbl in labels), self.total)


def _row_for(model: SystemModel, b: FailureBreakdown) -> tuple[dict[str, float], tuple[str, ...]]:
    labels = {g.id: g.label for g in model.cccgs}
    by_label: dict[str, float] = defaultdict(float)
    for cccg_id, p in b.contributions:
        by_label[labels[cccg_id]] += p
    flags = []
    if b.normalized:
        flags.append("NORMALIZED")
    if b.betas is not None and b.betas.beta_total > Fraction(99, 100):
        flags.append("SENSITIVE")
    return dict(by_label), tuple(flags)


def breakdown_rows(model: SystemModel, breakdowns: Sequence[FailureBreakdown],
                   per_component: bool = False) -> list[BreakdownRow]:
    """Table rows; members of a class with identical rows collapse to one."""
    class_of = {c.id: c.class_id for c in model.components}
    class_size: dict[str, int] = defaultdict(int)
    for c in model.components:
        class_size[c.class_id] += 1

    raw = []
    for b in breakdowns:
        by_label, flags = _row_for(model, b)
        raw.append(BreakdownRow(b.component_id, b.domain, (b.component_id,), b.q_independent,
                                by_label, b.q_total, flags))
    if per_component:
        return [replace(r, name=f"{r.name}-{r.domain.value.title()}") for r in raw]

    grouped: dict[tuple[str, Domain], list[BreakdownRow]] = defaultdict(list)
    order: list[tuple[str, Domain]] = []
    for row in raw:
        key = (class_of[row.name], row.domain)
        if key not in grouped:
            order.append(key)
        grouped[key].append(row)

    out = []
    for key in order:
        rows = grouped[key]
        class_id, domain = key
        first = rows[0]
        same = all((r.individual, r.by_label, r.total, r.flags)
                   == (first.individual, first.by_label, first.total, first.flags) for r in rows)
        if same and len(rows) == class_size[class_id]:
            members = tuple(r.name for r in rows)
            out.append(BreakdownRow(f"{class_id}-{domain.value.title()}", domain, members,
                                    first.individual, first.by_label, first.total, first.flags))
        else:
            out.extend(replace(r, name=f"{r.name}-{domain.value.title()}") for r in rows)
    return out


def failure_table(model: SystemModel, breakdowns: Sequence[FailureBreakdown],
                  per_component: bool = False) -> Table:
    labels = category_columns(model)
    table = Table(["Component", INDIVIDUAL, *labels, TOTAL, "Flags"])
    for row in breakdown_rows(model, breakdowns, per_component):
        cells = [row.name, sci(row.individual)]
        cells += [sci(row.by_label[lbl]) if lbl in row.by_label else NA for lbl in labels]
        cells += [sci(row.total), ",".join(row.flags)]
        table.rows.append(cells)
    return table


@dataclass(frozen=True)
class BetaRow:
    cccg_id: str
    label: str
    domain: Domain
    size: int
    grades: tuple[str, ...]
    count_sum: int | None
    denominator: int | None
    beta: Fraction
    source: str
    flags: tuple[str, ...] = ()


def beta_rows(model: SystemModel,
              breakdowns: Sequence[FailureBreakdown] | None = None) -> list[BetaRow]:
    normalized: dict[tuple[str, Domain], set[str]] = defaultdict(set)
    for b in breakdowns or ():
        if b.normalized:
            for cccg_id, _ in b.betas.entries:
                normalized[cccg_id, b.domain].add(b.component_id)

    rows = []
    for g in model.cccgs:
        for domain in Domain:
            if domain not in g.domains:
                continue
            sheet, override = g.grades(domain), g.override(domain)
            grades: tuple[str, ...] = ("-",) * len(SubFactor)
            count_sum = denominator = None
            if sheet is not None:
                grades = tuple(sheet.grades[sf].value for sf in SubFactor)
            if override is not None:
                beta, source = override, "override"
            elif sheet is not None:
                score = beta_pbf2(sheet)
                beta, source = score.fraction, "grades"
                count_sum, denominator = score.count_sum, score.denominator
            else:
                continue
            flags = ()
            if (g.id, domain) in normalized:
                flags = (f"NORMALIZED({len(normalized[g.id, domain])} members)",)
            rows.append(BetaRow(g.id, g.label, domain, len(g.members), grades, count_sum,
                                denominator, beta, source, flags))
    return rows


BETA_COLUMNS = ["CCCG", "Label", "Domain", "Size"] + [sf.value for sf in SubFactor] + [
    "Sum", "d", "Beta", "Exact", "Source", "Flags"]


def beta_table(model: SystemModel,
               breakdowns: Sequence[FailureBreakdown] | None = None) -> Table:
    table = Table(list(BETA_COLUMNS))
    for r in beta_rows(model, breakdowns):
        table.rows.append([
            r.cccg_id, r.label, r.domain.value, str(r.size), *r.grades,
            "-" if r.count_sum is None else str(r.count_sum),
            "-" if r.denominator is None else str(r.denominator),
            f"{float(r.beta):.3f}", str(r.beta), r.source, ",".join(r.flags),
        ])
    return table


def scoring_tables_text() -> str:
    from .scoring import Grade, INPUT_SIMILARITY_BUCKETS, Diversity
    out = []
    for domain in Domain:
        table = table_for(domain)
        t = Table(["Sub-factor", *[g.value for g in Grade]])
        for sf in SubFactor:
            t.rows.append([sf.label] + [str(table.cells[sf, g]) if (sf, g) in table.cells else ""
                                        for g in Grade])
        t.rows.append(["(column sum)"] + [
            str(table.column_sum(g)) if all((sf, g) in table.cells for sf in SubFactor) else ""
            for g in Grade])
        out.append(f"{domain.value} beta estimation table, d = {table.denominator}\n")
        out.append(t.to_text())
        out.append("\n")
    t = Table(["R bucket", *[d.value for d in Diversity]])
    for bucket, grades in INPUT_SIMILARITY_BUCKETS:
        t.rows.append([bucket, *[grades[d].value for d in Diversity]])
    out.append("input similarity guide, R = (s - 1)/m for s = 1, R = s/m for s > 1\n")
    out.append(t.to_text())
    out.append("note: 0 < R <= 0.5 grades A+ and B/C start above 0.5; deviates from printed "
               "header (.5 <= R < 1), per worked example (m = 8, s = 4 graded A+)\n")
    return "".join(out)
