# src/experiments/checks.py
import logging
from dataclasses import asdict, dataclass, field
from typing import Any

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    expected: str
    measured: dict[str, Any] = field(default_factory=dict)


@dataclass
class CheckLog:
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name: str, passed: bool, expected: str, **measured) -> bool:
        self.checks.append(CheckResult(name, bool(passed), expected, measured))
        if not passed:
            logger.warning("check %s failed: expected %s, measured %s", name, expected, measured)
        return bool(passed)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_list(self) -> list[dict]:
        return [asdict(c) for c in self.checks]


@dataclass
class ExperimentOutcome:
    name: str
    checks: CheckLog
    files: list[str] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.checks.all_passed

    def to_dict(self) -> dict:
        return {
            "experiment": self.name,
            "passed": self.passed,
            "checks": self.checks.to_list(),
            "summary": self.summary,
            "files": sorted(self.files),
        }
