"""Verdicts, claims and reports, with deterministic JSON and text renderings."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

TOOL_VERSION = "0.1.0"


class Verdict(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INDETERMINATE = "indeterminate"

    @classmethod
    def of(cls, ok: bool) -> "Verdict":
        return cls.PASS if ok else cls.FAIL

    def __bool__(self):
        return self is Verdict.PASS

    def __and__(self, other: "Verdict") -> "Verdict":
        return combine([self, other])


def combine(verdicts) -> Verdict:
    verdicts = list(verdicts)
    if any(v is Verdict.FAIL for v in verdicts):
        return Verdict.FAIL
    if any(v is Verdict.INDETERMINATE for v in verdicts):
        return Verdict.INDETERMINATE
    return Verdict.PASS


@dataclass
class Check:
    """One named verdict inside a check report (an axiom, a junction, ...)."""

    name: str
    verdict: Verdict
    witness: Any = None

    def as_dict(self) -> dict:
        return {"name": self.name, "verdict": self.verdict.value, "witness": _plain(self.witness)}


@dataclass
class CheckReport:
    """A list of named checks; passes iff every check passes."""

    title: str
    checks: list[Check] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add(self, name: str, verdict: Verdict | bool, witness: Any = None) -> Check:
        if isinstance(verdict, bool):
            verdict = Verdict.of(verdict)
        c = Check(name, verdict, witness)
        self.checks.append(c)
        return c

    @property
    def verdict(self) -> Verdict:
        return combine(c.verdict for c in self.checks)

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.verdict is not Verdict.PASS]

    def as_dict(self) -> dict:
        return {
            "title": self.title,
            "verdict": self.verdict.value,
            "checks": [c.as_dict() for c in self.checks],
            "notes": _plain(self.notes),
        }


@dataclass
class Claim:
    claim: str
    tag: str
    verdict: Verdict
    witness: Any = None
    precision: str = ""
    wall_time: float = 0.0

    def as_dict(self, timings: bool = False) -> dict:
        out = {
            "claim": self.claim,
            "tag": self.tag,
            "verdict": self.verdict.value,
            "witness": _plain(self.witness),
            "precision": self.precision,
        }
        if timings:
            out["wall_time"] = round(self.wall_time, 6)
        return out


@dataclass
class Report:
    scenario: str
    seed: int | None
    context: dict
    claims: list[Claim] = field(default_factory=list)
    tool_version: str = TOOL_VERSION

    def add(self, claim: Claim) -> None:
        self.claims.append(claim)

    def sorted_claims(self) -> list[Claim]:
        return sorted(self.claims, key=lambda c: c.claim)

    @property
    def verdict(self) -> Verdict:
        return combine(c.verdict for c in self.claims)

    def __getitem__(self, name: str) -> Claim:
        for c in self.claims:
            if c.claim == name:
                return c
        raise KeyError(name)

    def exit_code(self) -> int:
        v = self.verdict
        if v is Verdict.PASS:
            return 0
        if v is Verdict.FAIL:
            return 1
        return 2

    def as_dict(self, timings: bool = False) -> dict:
        return {
            "tool_version": self.tool_version,
            "scenario": self.scenario,
            "seed": self.seed,
            "context": _plain(self.context),
            "verdict": self.verdict.value,
            "claims": [c.as_dict(timings) for c in self.sorted_claims()],
        }

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.as_dict(timings), indent=2, sort_keys=True) + "\n"

    def to_text(self, timings: bool = False) -> str:
        lines = [
            f"# {self.scenario}  (bkmod {self.tool_version})",
            f"# seed: {self.seed}",
            "# context: " + ", ".join(f"{k}={_plain(v)}" for k, v in sorted(self.context.items())),
        ]
        for c in self.sorted_claims():
            line = f"{c.verdict.value.upper():<13} {c.claim}  [{c.tag}]  @ {c.precision}"
            if timings:
                line += f"  ({c.wall_time:.3f}s)"
            lines.append(line)
            if c.witness not in (None, "", {}, []):
                lines.append(f"    witness: {json.dumps(_plain(c.witness), sort_keys=True)}")
        lines.append(f"# overall: {self.verdict.value}")
        return "\n".join(lines) + "\n"


def _plain(x: Any) -> Any:
    """Convert witnesses into JSON-friendly builtins, deterministically."""
    if x is None or isinstance(x, (bool, str, float)):
        return x
    if isinstance(x, int):
        return int(x)
    if isinstance(x, Verdict):
        return x.value
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in sorted(x.items(), key=lambda kv: str(kv[0]))}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if hasattr(x, "as_dict"):
        return _plain(x.as_dict())
    if hasattr(x, "tolist"):
        return _plain(x.tolist())
    if hasattr(x, "__int__"):
        return int(x)
    return str(x)
