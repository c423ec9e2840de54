"""Stage 1: ask the model to split a method's input space into partitions."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Sequence

from .api_model import MethodUnderTest
from .llm_gateway import LLMGateway, PromptRecord, hash_prompt, make_meta

log = logging.getLogger(__name__)

RECEIVER = "receiver"
ANSWER_MARKER = "PARTITIONS:"

SYSTEM_TEXT = """\
You are an expert in software testing. Your task is input space partitioning: \
given the source code of a library API method, divide the space of its inputs \
into partitions such that every input inside one partition drives the method \
through the same behaviour, and together the partitions cover every branch and \
every exceptional behaviour of the method.

Work in this order: read the method signature, then the body, then reason \
about each parameter. Use both what the code does and what the method means \
in its domain (for example, corner cases of the mathematics it implements).

Finish your answer with a line containing only PARTITIONS: followed by a \
numbered list, one partition per line, in exactly this form:
(1) <param>: <constraint>; <param>: <constraint>
(2) <param>: <constraint>; <param>: <constraint>
Name every parameter in every partition. Do not use ';' inside a constraint."""

STRICT_REMINDER = """\
Your previous answer could not be parsed. Reply with the line PARTITIONS: and \
then only the numbered list, e.g.
PARTITIONS:
(1) x: is negative; y: is zero
(2) x: is positive; y: is any integer"""

# Authored demonstration of the expected answer shape.
FEW_SHOT = (
    (
        """\
Partition the input space of this method.

```python
def clamp_ratio(numerator: int, denominator: int) -> float:
    if denominator == 0:
        raise ZeroDivisionError("denominator is zero")
    ratio = numerator / denominator
    if ratio > 1.0:
        return 1.0
    return max(ratio, 0.0)
```""",
        """\
Signature: two ints, returns a float in [0, 1].
Body: a zero denominator raises; ratios above 1 clamp to 1; negative ratios clamp to 0 through max().
Parameters: the sign and relative size of numerator and denominator decide every branch.
PARTITIONS:
(1) numerator: any integer; denominator: is 0
(2) numerator: greater than denominator, both positive; denominator: positive
(3) numerator: between 0 and denominator; denominator: positive
(4) numerator: negative; denominator: positive""",
    ),
)


class PartitionParseError(ValueError):
    pass


@dataclass(frozen=True)
class PartitionSpec:
    method_id: str
    index: int
    per_param_constraints: tuple[tuple[str, str], ...]
    raw_text: str
    unmatched: tuple[str, ...] = ()

    def constraint_for(self, name: str) -> str | None:
        for param, text in self.per_param_constraints:
            if param == name:
                return text
        return None

    def describe(self) -> str:
        parts = [f"{p}: {c}" for p, c in self.per_param_constraints] + list(self.unmatched)
        return "; ".join(parts) if parts else "(no constraints)"

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "index": self.index,
            "per_param_constraints": [list(pc) for pc in self.per_param_constraints],
            "raw_text": self.raw_text,
            "unmatched": list(self.unmatched),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PartitionSpec":
        return cls(
            data["method_id"],
            int(data["index"]),
            tuple(tuple(pc) for pc in data["per_param_constraints"]),
            data["raw_text"],
            tuple(data.get("unmatched", ())),
        )


def empty_spec(method: MethodUnderTest, index: int = 1) -> PartitionSpec:
    """A specification that constrains nothing; used when partitioning is skipped."""
    return PartitionSpec(method.method_id, index, (), "(no constraints)")


def parameter_names(method: MethodUnderTest) -> list[str]:
    names = [p.name for p in method.params]
    if method.needs_receiver:
        names.insert(0, RECEIVER)
    return names


def build_isp_prompt(
    method: MethodUnderTest,
    mode: str = "plain",
    callee_sources: Sequence[str] = (),
    reminder: bool = False,
) -> PromptRecord:
    if mode not in ("plain", "with_callees"):
        raise ValueError(f"unknown prompt mode {mode!r}")
    user = f"Partition the input space of this method.\n\n```python\n{method.source.rstrip()}\n```"
    if method.needs_receiver:
        user += (
            f"\n\nThe method is called on an instance of {method.owner_fqn}; "
            f"treat that instance as a parameter named {RECEIVER}."
        )
    if mode == "with_callees" and callee_sources:
        blocks = "\n\n".join(f"```python\n{src.rstrip()}\n```" for src in callee_sources)
        user += f"\n\nSource of the methods it calls:\n\n{blocks}"
    if reminder:
        user += "\n\n" + STRICT_REMINDER
    return PromptRecord(
        stage="ISP",
        system_text=SYSTEM_TEXT,
        user_text=user,
        few_shot=FEW_SHOT,
        meta=make_meta(method=method.method_id, attempt=2 if reminder else None),
    )


_ITEM = re.compile(r"(?:(?<=\s)|^)\((\d+)\)[ \t]*|^[ \t]*(\d+)[.)][ \t]+", re.MULTILINE)


def parse_partitions(method: MethodUnderTest, response_text: str) -> list[PartitionSpec]:
    """One spec per numbered item; identical items collapse to the first."""
    text = response_text
    marker = text.rfind(ANSWER_MARKER)
    if marker >= 0:
        text = text[marker + len(ANSWER_MARKER) :]
    matches = list(_ITEM.finditer(text))
    if not matches:
        raise PartitionParseError("no numbered partitions found")
    names = set(parameter_names(method))
    specs: list[PartitionSpec] = []
    seen_indices: set[int] = set()
    seen_raw: set[str] = set()
    for i, match in enumerate(matches):
        index = int(match.group(1) or match.group(2))
        if index in seen_indices:
            raise PartitionParseError(f"duplicate partition index {index}")
        seen_indices.add(index)
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        raw = text[match.end() : end].strip()
        if not raw:
            raise PartitionParseError(f"partition {index} is empty")
        if raw in seen_raw:
            continue
        seen_raw.add(raw)
        constraints: list[tuple[str, str]] = []
        unmatched: list[str] = []
        for segment in raw.split(";"):
            segment = segment.strip()
            if not segment:
                continue
            name, sep, rest = segment.partition(":")
            name = name.strip().strip("`*").strip()
            if sep and name in names:
                constraints.append((name, rest.strip()))
            else:
                unmatched.append(segment)
        specs.append(PartitionSpec(method.method_id, index, tuple(constraints), raw, tuple(unmatched)))
    return specs


def render_partitions(specs: Sequence[PartitionSpec]) -> str:
    lines = [ANSWER_MARKER]
    for spec in specs:
        parts = [f"{p}: {c}" for p, c in spec.per_param_constraints] + list(spec.unmatched)
        lines.append(f"({spec.index}) " + "; ".join(parts))
    return "\n".join(lines) + "\n"


@dataclass
class PartitionOutcome:
    method_id: str
    specs: list[PartitionSpec] = field(default_factory=list)
    retries: int = 0
    failed: bool = False
    error: str | None = None
    prompt_hashes: list[str] = field(default_factory=list)
    responses: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "specs": [s.to_dict() for s in self.specs],
            "retries": self.retries,
            "failed": self.failed,
            "error": self.error,
            "prompt_hashes": list(self.prompt_hashes),
            "responses": list(self.responses),
        }


def partition(
    method: MethodUnderTest,
    gateway: LLMGateway,
    mode: str = "plain",
    callee_sources: Sequence[str] = (),
) -> PartitionOutcome:
    """Prompt, parse, and re-ask once with a stricter format reminder on failure."""
    outcome = PartitionOutcome(method.method_id)
    for attempt in range(2):
        prompt = build_isp_prompt(method, mode, callee_sources, reminder=attempt > 0)
        outcome.prompt_hashes.append(hash_prompt(prompt))
        result = gateway.complete(prompt)
        outcome.responses.append(result.text)
        try:
            outcome.specs = parse_partitions(method, result.text)
            outcome.retries = attempt
            return outcome
        except PartitionParseError as exc:
            outcome.error = str(exc)
            log.info("partition parse failed for %s: %s", method.method_id, exc)
    outcome.retries = 1
    outcome.failed = True
    return outcome
