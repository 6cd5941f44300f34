from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ccfbeta import example_path, load_model  # noqa: E402
from ccfbeta.domain import Domain, InputMode  # noqa: E402
from ccfbeta.model import Component, CouplingAttribute, FailureData  # noqa: E402

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion."""

    def record(criterion: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE[criterion] = (passed, detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        passed, detail = _ACCEPTANCE[name]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}" + (f"  [{detail}]" if detail else ""))


@pytest.fixture(scope="session")
def case_study():
    return load_model(example_path("case_study.model"))


@pytest.fixture(scope="session")
def two_of_three():
    return load_model(example_path("two_of_three.model"))


def attrs(*pairs: str) -> frozenset[CouplingAttribute]:
    return frozenset(CouplingAttribute.parse(p) for p in pairs)


def component(cid: str, *pairs: str, class_id: str = "X", q: float = 1e-3,
              mode: InputMode = InputMode.TOTAL, software: float | None = None) -> Component:
    sw = None if software is None else FailureData(Domain.SOFTWARE, software, InputMode.TOTAL)
    return Component(cid, class_id, attrs(*pairs), FailureData(Domain.HARDWARE, q, mode), sw)
