"""Stage 3: fill values into the selected constructors and emit a driver program."""

from __future__ import annotations

import logging
import re
import textwrap
from dataclasses import dataclass, field
from importlib import resources
from string import Template
from typing import Sequence

from .api_model import MethodUnderTest, is_array
from .llm_gateway import LLMGateway, PromptRecord, hash_prompt, make_meta
from .partitioner import RECEIVER, PartitionSpec, parameter_names
from .selector import CONSTRUCTOR, EXTERNAL_OPAQUE, PRIMITIVE_SLOT, InstantiationPlan, PlanNode

log = logging.getLogger(__name__)

NEUTRAL_DEFAULT = "None"
BODY_INDENT = " " * 8

SYSTEM_TEXT = """\
You are an expert in software testing. Your task is object instantiation: \
write Python statements that create the arguments for one call of a library \
method so that the arguments satisfy the given partition specification.

Answer with exactly two fenced code blocks and nothing else after them:
IMPORTS:
```python
<import statements, one per line; may be empty>
```
STATEMENTS:
```python
<assignment statements, in execution order>
```
Use the variable names given in the request. Do not call the method under \
test yourself; it is called with the final variables after your statements run."""

BASELINE_SYSTEM_TEXT = """\
You are an expert in software testing. Write one test input for the given \
library method: Python statements that create every argument of the method.

Answer with exactly two fenced code blocks and nothing else after them:
IMPORTS:
```python
<import statements, one per line; may be empty>
```
STATEMENTS:
```python
<assignment statements, in execution order>
```
Assign one variable per parameter, named exactly like the parameter. Do not \
call the method under test yourself."""

STRICT_REMINDER = """\
Your previous answer could not be parsed. Reply with the line IMPORTS: \
followed by one fenced python block, then the line STATEMENTS: followed by \
one fenced python block."""

FEW_SHOT = (
    (
        """\
Method under test: geometry.area_ratio(a: Circle, b: Circle)
Partition specification: a: radius is zero; b: radius is positive
Selected constructors, from leaves to roots:
a_center = Point(a_center_x, a_center_y)
a = Circle(a_center, a_radius)
b_center = Point(b_center_x, b_center_y)
b = Circle(b_center, b_radius)
Values to choose:
a_center_x: float
a_center_y: float
a_radius: float
b_center_x: float
b_center_y: float
b_radius: float""",
        """\
IMPORTS:
```python
from geometry import Circle, Point
```
STATEMENTS:
```python
a_center_x = 0.0
a_center_y = 0.0
a_radius = 0.0
b_center_x = 1.0
b_center_y = -2.0
b_radius = 3.5
a_center = Point(a_center_x, a_center_y)
a = Circle(a_center, a_radius)
b_center = Point(b_center_x, b_center_y)
b = Circle(b_center, b_radius)
```""",
    ),
)


class StatementParseError(ValueError):
    pass


class TemplateError(RuntimeError):
    """A driver template left a placeholder unresolved; a bug, not bad data."""


@dataclass(frozen=True)
class DriverSource:
    method_id: str
    partition_index: int
    import_block: tuple[str, ...]
    body_statements: tuple[str, ...]
    entry_point_text: str
    provenance: tuple[str, ...] = ()
    lint: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "partition_index": self.partition_index,
            "import_block": list(self.import_block),
            "body_statements": list(self.body_statements),
            "provenance": list(self.provenance),
            "lint": list(self.lint),
        }


# -- prompt -------------------------------------------------------------------


def _ctor_name(node: PlanNode) -> str:
    assert node.signature_text is not None
    return node.signature_text.split("(", 1)[0]


def _argument(child: PlanNode) -> str:
    p = child.param
    if p is not None and p.is_variadic:
        return f"*{child.name}"
    if p is not None and p.keyword_only:
        return f"{p.name}={child.name}"
    return child.name


def render_constructor_lines(plan: InstantiationPlan) -> list[str]:
    """Selected constructors as assignments, leaves first."""
    lines: list[str] = []

    def visit(node: PlanNode) -> None:
        if node.kind != CONSTRUCTOR:
            return
        for child in node.children:
            visit(child)
        args = ", ".join(_argument(c) for c in node.children)
        lines.append(f"{node.name} = {_ctor_name(node)}({args})")

    for root in plan.roots:
        visit(root)
    return lines


def _slot_line(node: PlanNode) -> str:
    if node.kind == EXTERNAL_OPAQUE:
        why = "too deep to construct" if node.truncated else "external type"
        return f"{node.name}: {node.type_fqn} ({why}; use a neutral default such as {NEUTRAL_DEFAULT})"
    kind = node.type_fqn
    if node.param is not None and node.param.is_variadic:
        kind = f"sequence of {kind} (passed as *{node.name})"
    elif is_array(kind):
        kind = f"{kind} value"
    return f"{node.name}: {kind}"


def _call_text(method: MethodUnderTest) -> str:
    args = []
    for p in method.params:
        if p.is_variadic:
            args.append(f"*{p.name}")
        elif p.keyword_only:
            args.append(f"{p.name}={p.name}")
        else:
            args.append(p.name)
    joined = ", ".join(args)
    if method.needs_receiver:
        return f"{RECEIVER}.{method.name}({joined})"
    if method.is_module_function:
        return f"{method.module}.{method.name}({joined})"
    return f"{method.owner_fqn.rsplit('.', 1)[-1]}.{method.name}({joined})"


def build_oi_prompt(
    plan: InstantiationPlan | None,
    spec: PartitionSpec,
    method: MethodUnderTest,
    reminder: bool = False,
) -> PromptRecord:
    """Instantiation request; without a plan the model picks constructors itself."""
    lines = [f"Method under test: {method.owner_fqn}.{method.signature()}"]
    lines.append(f"Partition specification: {spec.describe()}")
    if plan is not None:
        ctor_lines = render_constructor_lines(plan)
        if ctor_lines:
            lines.append("Selected constructors, from leaves to roots:")
            lines.extend(ctor_lines)
        slots = [n for n in plan.nodes() if n.kind in (PRIMITIVE_SLOT, EXTERNAL_OPAQUE)]
        if slots:
            lines.append("Values to choose:")
            lines.extend(_slot_line(n) for n in slots)
        else:
            lines.append("No literal values are needed; write the constructor statements as given.")
        variant = "plan"
    else:
        names = parameter_names(method)
        lines.append("Source:")
        lines.append(f"```python\n{method.source.rstrip()}\n```")
        if method.needs_receiver:
            lines.append(f"Create the instance the method is called on as `{RECEIVER}` ({method.owner_fqn}).")
        if names:
            lines.append("Variables to define: " + ", ".join(names))
        variant = "free"
    lines.append(f"The method is then called as: {_call_text(method)}")
    if reminder:
        lines.append("")
        lines.append(STRICT_REMINDER)
    return PromptRecord(
        stage="INSTANTIATE",
        system_text=SYSTEM_TEXT,
        user_text="\n".join(lines),
        few_shot=FEW_SHOT,
        meta=make_meta(
            method=method.method_id,
            partition=spec.index,
            variant=variant,
            attempt=2 if reminder else None,
        ),
    )


def build_baseline_prompt(method: MethodUnderTest, reminder: bool = False) -> PromptRecord:
    user = (
        f"Method under test: {method.owner_fqn}.{method.signature()}\n"
        f"```python\n{method.source.rstrip()}\n```"
    )
    if method.needs_receiver:
        user += f"\nAlso create the instance the method is called on, named `{RECEIVER}` ({method.owner_fqn})."
    user += f"\nThe method is then called as: {_call_text(method)}"
    if reminder:
        user += "\n\n" + STRICT_REMINDER
    return PromptRecord(
        stage="BASELINE",
        system_text=BASELINE_SYSTEM_TEXT,
        user_text=user,
        meta=make_meta(method=method.method_id, attempt=2 if reminder else None),
    )


# -- parsing ------------------------------------------------------------------

_FENCE = re.compile(r"^[ \t]*```([^\n`]*)\n(.*?)^[ \t]*```[ \t]*$", re.MULTILINE | re.DOTALL)
_LABELS = ("IMPORTS", "STATEMENTS")


def _label(info: str, preceding: str) -> str | None:
    for text in (info, preceding):
        words = re.findall(r"[A-Za-z]+", text.upper())
        found = [w for w in words if w in _LABELS]
        if found:
            return found[-1]
    return None


def _block_lines(body: str) -> list[str]:
    body = textwrap.dedent(body)
    return [line.rstrip() for line in body.splitlines() if line.strip()]


def parse_statements(response_text: str) -> tuple[list[str], list[str]]:
    """Extract the IMPORTS and STATEMENTS fenced blocks, in either order.

    A block is labelled by its info string (```IMPORTS) or by the last
    non-blank line before it (``IMPORTS:``). Imports are deduplicated;
    statements keep their order.
    """
    blocks: dict[str, list[str]] = {}
    last_end = 0
    for match in _FENCE.finditer(response_text):
        before = [l for l in response_text[last_end : match.start()].splitlines() if l.strip()]
        label = _label(match.group(1), before[-1] if before else "")
        last_end = match.end()
        if label is not None and label not in blocks:
            blocks[label] = _block_lines(match.group(2))
    missing = [l for l in _LABELS if l not in blocks]
    if missing:
        raise StatementParseError("missing block(s): " + ", ".join(missing))
    imports = list(dict.fromkeys(blocks["IMPORTS"]))
    return imports, blocks["STATEMENTS"]


def render_statements(imports: Sequence[str], statements: Sequence[str]) -> str:
    out = ["IMPORTS:", "```python", *imports, "```", "STATEMENTS:", "```python", *statements, "```"]
    return "\n".join(out) + "\n"


# -- driver -------------------------------------------------------------------


def load_template(path: str | None = None) -> str:
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    return resources.files("ispgen").joinpath("templates/driver.py.tmpl").read_text(encoding="utf-8")


def _target_import(method: MethodUnderTest) -> tuple[str, str]:
    """(import line, call expression) for the method under test."""
    call = _call_text(method)
    if method.needs_receiver:
        return "pass", call
    if method.is_module_function:
        return f"from {method.module} import {method.name} as _mut", "_mut" + call[call.index("(") :]
    owner = method.owner_fqn.rsplit(".", 1)[-1]
    return (
        f"from {method.module} import {owner} as _mut_owner",
        f"_mut_owner.{method.name}" + call[call.index("(") :],
    )


def slot_lint(plan: InstantiationPlan | None, statements: Sequence[str]) -> list[str]:
    """Names of primitive slots that no statement mentions."""
    if plan is None:
        return []
    text = "\n".join(statements)
    problems = []
    for node in plan.primitive_slots():
        if not re.search(rf"(?<![\w.]){re.escape(node.name)}(?!\w)", text):
            problems.append(f"value slot {node.name!r} is never assigned")
    return problems


def emit_driver(
    method: MethodUnderTest,
    imports: Sequence[str],
    statements: Sequence[str],
    template: str | None = None,
    partition_index: int = 1,
    provenance: Sequence[str] = (),
    plan: InstantiationPlan | None = None,
) -> DriverSource:
    """Instantiate the driver template; byte-deterministic in its inputs."""
    template = load_template() if template is None else template
    target_import, call = _target_import(method)
    imports = list(dict.fromkeys(imports))
    values = {
        "method_id": method.method_id,
        "partition_index": str(partition_index),
        "target_import": target_import,
        "imports": "\n".join(BODY_INDENT + line for line in imports) or BODY_INDENT + "pass",
        "statements": "\n".join(BODY_INDENT + line for line in statements) or BODY_INDENT + "pass",
        "call": call,
    }
    try:
        text = Template(template).substitute(values)
    except (KeyError, ValueError) as exc:
        raise TemplateError(f"driver template placeholder problem: {exc}") from exc
    return DriverSource(
        method_id=method.method_id,
        partition_index=partition_index,
        import_block=tuple(imports),
        body_statements=tuple(statements),
        entry_point_text=text,
        provenance=tuple(provenance),
        lint=tuple(slot_lint(plan, statements)),
    )


@dataclass
class InstantiationOutcome:
    method_id: str
    partition_index: int
    driver: DriverSource | None = None
    retries: int = 0
    failed: bool = False
    error: str | None = None
    prompt_hashes: list[str] = field(default_factory=list)
    responses: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "partition_index": self.partition_index,
            "retries": self.retries,
            "failed": self.failed,
            "error": self.error,
            "prompt_hashes": list(self.prompt_hashes),
            "responses": list(self.responses),
        }


def _generate(method, index, gateway, make_prompt, plan, template) -> InstantiationOutcome:
    outcome = InstantiationOutcome(method.method_id, index)
    for attempt in range(2):
        prompt = make_prompt(attempt > 0)
        outcome.prompt_hashes.append(hash_prompt(prompt))
        text = gateway.complete(prompt).text
        outcome.responses.append(text)
        try:
            imports, statements = parse_statements(text)
        except StatementParseError as exc:
            outcome.error = str(exc)
            log.info("statement parse failed for %s/%d: %s", method.method_id, index, exc)
            continue
        outcome.retries = attempt
        outcome.error = None
        outcome.driver = emit_driver(
            method, imports, statements, template, index, outcome.prompt_hashes, plan
        )
        return outcome
    outcome.retries = 1
    outcome.failed = True
    return outcome


def instantiate(
    method: MethodUnderTest,
    spec: PartitionSpec,
    plan: InstantiationPlan | None,
    gateway: LLMGateway,
    template: str | None = None,
) -> InstantiationOutcome:
    """Prompt, parse and emit one driver, re-asking once on a parse failure."""
    return _generate(
        method,
        spec.index,
        gateway,
        lambda reminder: build_oi_prompt(plan, spec, method, reminder),
        plan,
        template,
    )


def baseline_generate(
    method: MethodUnderTest, gateway: LLMGateway, template: str | None = None
) -> InstantiationOutcome:
    """Single-prompt driver straight from the method source."""
    return _generate(
        method, 1, gateway, lambda reminder: build_baseline_prompt(method, reminder), None, template
    )
