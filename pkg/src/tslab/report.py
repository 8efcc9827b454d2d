"""Structured pass/fail records for the verification suites."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"
STATUSES = (PASS, FAIL, NOT_APPLICABLE)


def to_plain(value: Any) -> Any:
    """Convert Fractions (and containers of them) to JSON-friendly values."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int | str | float):
        return value
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, list | tuple | set | frozenset):
        items = sorted(value) if isinstance(value, set | frozenset) else value
        return [to_plain(v) for v in items]
    if hasattr(value, "to_json"):
        return value.to_json()
    return str(value)


@dataclass
class Case:
    id: str
    status: str
    witness: Any = None
    margins: Any = None
    note: str = ""

    def to_json(self) -> dict:
        out = {"id": self.id, "status": self.status}
        if self.witness is not None:
            out["witness"] = to_plain(self.witness)
        if self.margins is not None:
            out["margins"] = to_plain(self.margins)
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class VerificationReport:
    suite: str
    cases: list[Case] = field(default_factory=list)

    def add(self, id: str, status: str, witness: Any = None, margins: Any = None,
            note: str = "") -> Case:
        if status not in STATUSES:
            raise ValueError(f"unknown status {status!r}")
        if status == FAIL and witness is None:
            raise ValueError("a failing case needs a witness")
        case = Case(id, status, witness, margins, note)
        self.cases.append(case)
        return case

    def check(self, id: str, ok: bool, witness: Any = None, margins: Any = None,
              note: str = "") -> Case:
        """Add a pass/fail case; a failure without a witness records the id itself."""
        if ok:
            return self.add(id, PASS, None, margins, note)
        return self.add(id, FAIL, witness if witness is not None else id, margins, note)

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for case in other.cases:
            self.cases.append(Case(prefix + case.id, case.status, case.witness,
                                   case.margins, case.note))

    @property
    def summary(self) -> dict[str, int]:
        counts = {s: 0 for s in STATUSES}
        for case in self.cases:
            counts[case.status] += 1
        return counts

    @property
    def ok(self) -> bool:
        return self.summary[FAIL] == 0

    def failures(self) -> list[Case]:
        return [c for c in self.cases if c.status == FAIL]

    def find(self, id: str) -> Optional[Case]:
        for case in self.cases:
            if case.id == id:
                return case
        return None

    def to_json(self) -> dict:
        return {"suite": self.suite, "cases": [c.to_json() for c in self.cases],
                "summary": self.summary}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["suite", "id", "status", "witness", "margins"])
        for c in self.cases:
            writer.writerow([self.suite, c.id, c.status,
                             "" if c.witness is None else json.dumps(to_plain(c.witness)),
                             "" if c.margins is None else json.dumps(to_plain(c.margins))])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"suite {self.suite}"]
        for c in self.cases:
            line = f"  {c.status:<14} {c.id}"
            if c.status == FAIL:
                line += f"  witness={json.dumps(to_plain(c.witness))}"
            if c.note:
                line += f"  ({c.note})"
            lines.append(line)
        s = self.summary
        lines.append(f"{s[PASS]} pass, {s[FAIL]} fail, {s[NOT_APPLICABLE]} not-applicable")
        return "\n".join(lines)
