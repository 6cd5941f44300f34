"""Enumerations shared by every layer of the engine."""

from __future__ import annotations

from enum import Enum


class Domain(str, Enum):
    HARDWARE = "hardware"
    SOFTWARE = "software"

    @property
    def short(self) -> str:
        return "HW" if self is Domain.HARDWARE else "SW"

    @classmethod
    def parse(cls, text: str) -> "Domain":
        key = text.strip().lower()
        for member in cls:
            if key in (member.value, member.short.lower()):
                return member
        raise ValueError(f"unknown failure domain {text!r}")


class InputMode(str, Enum):
    """Whether a supplied probability is the component total or its independent part."""

    TOTAL = "total"
    INDEPENDENT = "independent"

    @classmethod
    def parse(cls, text: str) -> "InputMode":
        key = text.strip().lower()
        aliases = {"total": cls.TOTAL, "totalgiven": cls.TOTAL,
                   "independent": cls.INDEPENDENT, "independentgiven": cls.INDEPENDENT,
                   "individual": cls.INDEPENDENT}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown input mode {text!r}") from None
