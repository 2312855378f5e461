"""Check results and reports shared by the validators and the property suite."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named property check.

    ``claim`` is a short self-describing statement of what was asserted
    (it doubles as the provenance column of serialized reports).
    ``status`` is ``ok`` for a real measurement, ``exact`` when the check
    holds identically, ``skipped``/``inconclusive`` when it did not apply.
    """

    name: str
    claim: str
    measured: float
    tolerance: float
    passed: bool
    status: str = "ok"
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        if self.status not in ("ok", "exact"):
            flag = self.status.upper()
        return (
            f"{flag:12s} {self.name:28s} measured={self.measured:.6e} "
            f"tol={self.tolerance:.6e}"
        )


@dataclass
class VerificationReport:
    """Ordered collection of check results plus a context fingerprint."""

    checks: list[CheckResult] = field(default_factory=list)
    context: dict = field(default_factory=dict)

    def add(self, result: CheckResult) -> CheckResult:
        self.checks.append(result)
        return result

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.status in ("ok", "exact"))

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed and c.status in ("ok", "exact")]

    def summary(self) -> str:
        return "\n".join(c.line() for c in self.checks)

    def fingerprint(self) -> str:
        blob = json.dumps(self.context, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["name", "claim", "measured", "tolerance", "pass", "status"]
            )
            for c in self.checks:
                writer.writerow(
                    [
                        c.name,
                        c.claim,
                        f"{c.measured:.17g}",
                        f"{c.tolerance:.17g}",
                        str(c.passed).lower(),
                        c.status,
                    ]
                )
