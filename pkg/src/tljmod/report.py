"""Validation reports shared by every checker in the package."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable


@dataclass(frozen=True)
class Violation:
    code: str
    ids: tuple[str, ...]
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "ids": list(self.ids), "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a check.

    ``ok`` is derived from ``violations`` so the two can never disagree.
    ``warnings`` never affect ``ok``; ``data`` carries check-specific numbers
    such as residuals.
    """

    violations: tuple[Violation, ...] = ()
    warnings: tuple[Violation, ...] = ()
    data: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": [v.to_dict() for v in self.violations],
            "warnings": [w.to_dict() for w in self.warnings],
            "data": self.data,
        }


def make_report(
    violations: Iterable[Violation] = (),
    warnings: Iterable[Violation] = (),
    data: dict[str, Any] | None = None,
) -> ValidationReport:
    return ValidationReport(tuple(violations), tuple(warnings), dict(data or {}))
