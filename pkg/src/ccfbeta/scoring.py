"""Beta factor estimation from qualitative sub-factor grades.

Two additive scoring tables (hardware and software) convert eight graded
defenses into a beta factor::

    beta = sum(sub-factor counts) / d

The software table widens the attainable range to 0.001 - 0.999 so that
low-diversity redundant software can carry a dominant dependent share.
A multiplicative partial-beta product is provided for comparison only; it
is known to be dominated by its single best-graded defense.

Scoring guidance notes for software sheets:

* Redundancy (& Diversity) grades the internal software diversity of the
  group (A = identical software, E = complete diversity).
* Tests grades software operational testing.
* The separation row is replaced by Input Similarity, graded from the
  ratio of input sources to group size (see :func:`input_similarity_grade`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from .domain import Domain


class ScoringError(ValueError):
    pass


class MissingCell(ScoringError):
    """Raised when a grade column is blank for the requested sub-factor."""

    def __init__(self, domain: Domain, sub_factor: "SubFactor", grade: "Grade"):
        self.domain = domain
        self.sub_factor = sub_factor
        self.grade = grade
        super().__init__(
            f"{domain.value} table has no {grade.value} cell for sub-factor "
            f"{sub_factor.label!r}"
        )


class Grade(str, Enum):
    A = "A"
    A_PLUS = "A+"
    B = "B"
    B_PLUS = "B+"
    C = "C"
    D = "D"
    E = "E"

    @property
    def rank(self) -> int:
        return _GRADE_ORDER.index(self)

    def __lt__(self, other):
        if not isinstance(other, Grade):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other):
        if not isinstance(other, Grade):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other):
        if not isinstance(other, Grade):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other):
        if not isinstance(other, Grade):
            return NotImplemented
        return self.rank >= other.rank

    @classmethod
    def parse(cls, text: str) -> "Grade":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ScoringError(f"unknown grade {text!r}") from None


_GRADE_ORDER = tuple(Grade)


class SubFactor(Enum):
    REDUNDANCY = "redundancy"
    SEPARATION = "separation"
    UNDERSTANDING = "understanding"
    ANALYSIS = "analysis"
    MMI = "mmi"
    SAFETY_CULTURE = "safety_culture"
    CONTROL = "control"
    TESTS = "tests"

    @property
    def label(self) -> str:
        return _SUB_FACTOR_LABELS[self]

    @classmethod
    def parse(cls, text: str) -> "SubFactor":
        key = text.strip().lower().replace("-", "_").replace(" ", "_")
        if key in ("input_similarity", "separation_input_similarity"):
            return cls.SEPARATION
        try:
            return cls(key)
        except ValueError:
            raise ScoringError(f"unknown sub-factor {text!r}") from None


_SUB_FACTOR_LABELS = {
    SubFactor.REDUNDANCY: "Redundancy (& Diversity)",
    SubFactor.SEPARATION: "Separation/Input Similarity",
    SubFactor.UNDERSTANDING: "Understanding",
    SubFactor.ANALYSIS: "Analysis",
    SubFactor.MMI: "MMI",
    SubFactor.SAFETY_CULTURE: "Safety Culture",
    SubFactor.CONTROL: "Control",
    SubFactor.TESTS: "Tests",
}


@dataclass(frozen=True)
class ScoringTable:
    domain: Domain
    cells: Mapping[tuple[SubFactor, Grade], int]
    denominator: int

    def grades_for(self, sub_factor: SubFactor) -> list[Grade]:
        return [g for g in Grade if (sub_factor, g) in self.cells]

    def column_sum(self, grade: Grade) -> int:
        return sum(self.cells[sf, grade] for sf in SubFactor)


def _table(domain: Domain, rows: dict[SubFactor, tuple], d: int) -> ScoringTable:
    cells = {}
    for sub_factor, counts in rows.items():
        for grade, count in zip(Grade, counts):
            if count is not None:
                cells[sub_factor, grade] = count
    return ScoringTable(domain, cells, d)


# Columns: A, A+, B, B+, C, D, E.  None marks a blank cell.
HARDWARE_TABLE = _table(
    Domain.HARDWARE,
    {
        SubFactor.REDUNDANCY: (1800, 882, 433, 212, 104, 25, 6),
        SubFactor.SEPARATION: (2400, None, 577, None, 139, 33, 8),
        SubFactor.UNDERSTANDING: (1800, None, 433, None, 104, 25, 6),
        SubFactor.ANALYSIS: (1800, None, 433, None, 104, 25, 6),
        SubFactor.MMI: (3000, None, 721, None, 173, 42, 10),
        SubFactor.SAFETY_CULTURE: (1500, None, 360, None, 87, 21, 5),
        SubFactor.CONTROL: (1800, None, 433, None, 104, 25, 6),
        SubFactor.TESTS: (1200, None, 288, None, 69, 17, 4),
    },
    51000,
)

SOFTWARE_TABLE = _table(
    Domain.SOFTWARE,
    {
        SubFactor.REDUNDANCY: (23976, 10112, 4265, 1799, 759, 135, 24),
        SubFactor.SEPARATION: (23976, 10112, 4265, None, 759, 135, 24),
        SubFactor.UNDERSTANDING: (7992, None, 1422, None, 253, 45, 8),
        SubFactor.ANALYSIS: (7992, None, 1422, None, 253, 45, 8),
        SubFactor.MMI: (11988, None, 2132, None, 379, 67, 12),
        SubFactor.SAFETY_CULTURE: (6993, None, 1244, None, 221, 39, 7),
        SubFactor.CONTROL: (4995, None, 888, None, 158, 28, 5),
        SubFactor.TESTS: (11988, None, 2132, None, 379, 67, 12),
    },
    100000,
)

TABLES = {Domain.HARDWARE: HARDWARE_TABLE, Domain.SOFTWARE: SOFTWARE_TABLE}


def table_for(domain: Domain) -> ScoringTable:
    return TABLES[domain]


def lookup_count(table: ScoringTable, sub_factor: SubFactor, grade: Grade) -> int:
    try:
        return table.cells[sub_factor, grade]
    except KeyError:
        raise MissingCell(table.domain, sub_factor, grade) from None


@dataclass(frozen=True)
class GradeSheet:
    """Eight sub-factor grades for one CCCG in one failure domain."""

    domain: Domain
    grades: Mapping[SubFactor, Grade]

    def __post_init__(self):
        missing = [sf.value for sf in SubFactor if sf not in self.grades]
        if missing:
            raise ScoringError(f"grade sheet missing sub-factors: {', '.join(missing)}")
        # normalise to a plain dict in canonical order so equality is structural
        object.__setattr__(self, "grades", {sf: self.grades[sf] for sf in SubFactor})

    @classmethod
    def from_sequence(cls, domain: Domain, grades: Iterable[Grade | str]) -> "GradeSheet":
        values = [g if isinstance(g, Grade) else Grade.parse(g) for g in grades]
        if len(values) != len(SubFactor):
            raise ScoringError(f"expected {len(SubFactor)} grades, got {len(values)}")
        return cls(domain, dict(zip(SubFactor, values)))

    @classmethod
    def uniform(cls, domain: Domain, grade: Grade) -> "GradeSheet":
        return cls(domain, {sf: grade for sf in SubFactor})

    def with_grade(self, sub_factor: SubFactor, grade: Grade) -> "GradeSheet":
        grades = dict(self.grades)
        grades[sub_factor] = grade
        return GradeSheet(self.domain, grades)

    def as_sequence(self) -> list[Grade]:
        return [self.grades[sf] for sf in SubFactor]

    def __hash__(self):
        return hash((self.domain, tuple(self.as_sequence())))


@dataclass(frozen=True)
class BetaScore:
    """Exact additive score: ``count_sum / denominator``."""

    count_sum: int
    denominator: int
    counts: tuple[int, ...] = ()

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.count_sum, self.denominator)

    @property
    def value(self) -> float:
        return self.count_sum / self.denominator

    def __float__(self) -> float:
        return self.value


def beta_pbf2(sheet: GradeSheet) -> BetaScore:
    """Additive sub-factor beta for one grade sheet, kept as an exact rational."""
    table = table_for(sheet.domain)
    counts = tuple(lookup_count(table, sf, sheet.grades[sf]) for sf in SubFactor)
    return BetaScore(sum(counts), table.denominator, counts)


class Diversity(str, Enum):
    ZERO = "zero"
    PARTIAL = "partial"
    COMPLETE = "complete"


@dataclass(frozen=True)
class InputProfile:
    m: int
    s: int
    diversity: Diversity = Diversity.ZERO

    def __post_init__(self):
        if self.m < 2:
            raise ScoringError(f"CCCG size m must be >= 2, got {self.m}")
        if self.s < 1:
            raise ScoringError(f"input source count s must be >= 1, got {self.s}")

    @property
    def ratio(self) -> Fraction:
        if self.s == 1:
            return Fraction(self.s - 1, self.m)
        return Fraction(self.s, self.m)


def input_similarity_grade(profile: InputProfile) -> Grade:
    """Grade the Input Similarity sub-factor from the input ratio.

    R = 0.5 is graded A+ (the 0 < R <= 0.5 bucket); B/C start strictly above 0.5.
    """
    r = profile.ratio
    diversity = profile.diversity
    if r == 0:
        return Grade.A
    if r <= Fraction(1, 2):
        return Grade.A_PLUS
    if r < 1:
        return Grade.B if diversity is Diversity.ZERO else Grade.C
    return Grade.E if diversity is Diversity.COMPLETE else Grade.D


# (bucket text, {diversity: grade}) rows used by the table dump
INPUT_SIMILARITY_BUCKETS = (
    ("R = 0", {d: Grade.A for d in Diversity}),
    ("0 < R <= 0.5", {d: Grade.A_PLUS for d in Diversity}),
    ("0.5 < R < 1", {Diversity.ZERO: Grade.B, Diversity.PARTIAL: Grade.C,
                     Diversity.COMPLETE: Grade.C}),
    ("R >= 1", {Diversity.ZERO: Grade.D, Diversity.PARTIAL: Grade.D,
                Diversity.COMPLETE: Grade.E}),
)


def beta_pbf1(partial_betas: Iterable[float]) -> float:
    """Multiplicative partial-beta estimate: the product of every partial beta.

    Any single strong defense dominates the product, so this tends to
    underpredict dependent failure (eighteen factors at 0.99 and one at 0.1
    still give about 0.083).
    """
    values = list(partial_betas)
    if not values:
        raise ScoringError("beta_pbf1 needs at least one partial beta")
    for v in values:
        if not (0.0 < v <= 1.0) or math.isnan(v):
            raise ScoringError(f"partial beta {v!r} outside (0, 1]")
    return math.prod(values)
