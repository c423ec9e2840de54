"""Stage 2: choose one constructor per reference-typed value, top down."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Sequence

from .api_model import ApiModel, ConstructorDescriptor, MethodUnderTest, ParameterDescriptor, is_array
from .llm_gateway import GatewayError, LLMGateway, PromptRecord, hash_prompt, make_meta
from .partitioner import RECEIVER, PartitionSpec
from .tdg import TypeDependencyGraph, constructor_candidates, dependency_text, reference_type

log = logging.getLogger(__name__)

PRIMITIVE_SLOT = "primitive_slot"
CONSTRUCTOR = "constructor"
EXTERNAL_OPAQUE = "external_opaque"

SYSTEM_TEXT = """\
You are an expert in software testing. Your task is constructor selection: \
an object of the given type must be created as an argument for a library \
method under test, and the object has to satisfy the given partition \
specification. Choose exactly one constructor from the numbered list, the one \
that makes it easiest to build an object meeting the specification.

Consider the specification, every listed constructor, and the dependency \
information of the type. End your answer with a line of the form
ANSWER: <number>"""

FEW_SHOT = (
    (
        """\
Type: shapes.Circle (argument `c`)
Specification for `c`: radius is zero
Candidate constructors:
[1] Circle(center: Point, radius: float)
[2] Circle(diameter_text: str)
Dependency information:
class shapes.Circle:
  Constructors:
    Circle(center: Point, radius: float)
    Circle(diameter_text: str)
  has-a: shapes.Point""",
        """\
The radius has to be exactly zero. Constructor [1] takes the radius directly as a float, \
so 0.0 can be passed without relying on string parsing.
ANSWER: 1""",
    ),
)


class SelectionParseError(ValueError):
    pass


class PlanFailure(Exception):
    pass


@dataclass(frozen=True)
class PlanNode:
    name: str
    type_fqn: str
    kind: str  # primitive_slot | constructor | external_opaque
    signature_text: str | None = None
    owner_fqn: str | None = None
    children: tuple["PlanNode", ...] = ()
    param: ParameterDescriptor | None = None
    auto_selected: bool = False
    fallback: bool = False
    truncated: bool = False

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def depth(self) -> int:
        """Constructor levels along the deepest path."""
        if self.kind != CONSTRUCTOR:
            return 0
        return 1 + max((c.depth() for c in self.children), default=0)

    def to_dict(self) -> dict:
        d: dict = {"name": self.name, "type_fqn": self.type_fqn, "kind": self.kind}
        if self.kind == CONSTRUCTOR:
            d.update(
                signature_text=self.signature_text,
                owner_fqn=self.owner_fqn,
                auto_selected=self.auto_selected,
                fallback=self.fallback,
                children=[c.to_dict() for c in self.children],
            )
        if self.param is not None:
            d["variadic"] = self.param.is_variadic
            d["keyword_only"] = self.param.keyword_only
        if self.truncated:
            d["truncated"] = True
        return d


@dataclass
class InstantiationPlan:
    method_id: str
    partition_index: int
    roots: list[PlanNode] = field(default_factory=list)
    truncated: bool = False
    gateway_calls: int = 0
    prompt_hashes: list[str] = field(default_factory=list)

    def nodes(self):
        for r in self.roots:
            yield from r.walk()

    def primitive_slots(self) -> list[PlanNode]:
        return [n for n in self.nodes() if n.kind == PRIMITIVE_SLOT]

    def constructor_nodes(self) -> list[PlanNode]:
        return [n for n in self.nodes() if n.kind == CONSTRUCTOR]

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "partition_index": self.partition_index,
            "truncated": self.truncated,
            "gateway_calls": self.gateway_calls,
            "prompt_hashes": list(self.prompt_hashes),
            "roots": [r.to_dict() for r in self.roots],
        }


def build_selection_prompt(
    type_fqn: str,
    candidates: Sequence[ConstructorDescriptor],
    spec: PartitionSpec,
    dependency: str,
    slot: str = "",
    constraint: str | None = None,
) -> PromptRecord:
    if not candidates:
        raise ValueError("selection prompt needs at least one candidate")
    lines = [f"Type: {type_fqn}" + (f" (argument `{slot}`)" if slot else "")]
    if constraint is None:
        root = slot.split("_")[0] if slot else ""
        constraint = spec.constraint_for(slot) or spec.constraint_for(root)
    lines.append(f"Specification for `{slot}`: {constraint}" if constraint else "Specification: " + spec.describe())
    lines.append(f"Full partition specification: {spec.describe()}")
    lines.append("Candidate constructors:")
    for i, c in enumerate(candidates, 1):
        lines.append(f"[{i}] {c.signature_text}")
    lines.append("Dependency information:")
    lines.append(dependency)
    return PromptRecord(
        stage="SELECT",
        system_text=SYSTEM_TEXT,
        user_text="\n".join(lines),
        few_shot=FEW_SHOT,
        meta=make_meta(method=spec.method_id, partition=spec.index, type=type_fqn, slot=slot),
    )


_ANSWER = re.compile(r"ANSWER\s*:\s*\[?(\d+)", re.IGNORECASE)
_INT = re.compile(r"(?<![\w.])(\d+)(?!\w|\.\d)")


def parse_selection(response_text: str, candidates: Sequence[object]) -> int:
    """1-based index of the chosen candidate."""
    n = len(candidates)
    answer = _ANSWER.search(response_text)
    if answer and 1 <= int(answer.group(1)) <= n:
        return int(answer.group(1))
    for match in _INT.finditer(response_text):
        value = int(match.group(1))
        if 1 <= value <= n:
            return value
    raise SelectionParseError(f"no candidate index in [1, {n}] in response")


def fallback_choice(candidates: Sequence[ConstructorDescriptor]) -> int:
    """Fewest reference-typed parameters; earliest declared on ties."""
    def ref_count(c: ConstructorDescriptor) -> int:
        return sum(1 for p in c.params if reference_type(p.type_fqn) is not None)

    best = min(range(len(candidates)), key=lambda i: (ref_count(candidates[i]), i))
    return best + 1


def _roots(method: MethodUnderTest) -> list[ParameterDescriptor]:
    roots = list(method.params)
    if method.needs_receiver:
        roots.insert(0, ParameterDescriptor(RECEIVER, method.owner_fqn))
    return roots


class _Planner:
    def __init__(self, method, spec, tdg, model, gateway, use_llm):
        self.method = method
        self.spec = spec
        self.tdg = tdg
        self.model = model
        self.gateway = gateway
        self.use_llm = use_llm
        self.plan = InstantiationPlan(method.method_id, spec.index)

    def node(self, name: str, param: ParameterDescriptor, depth: int, root: str) -> PlanNode:
        type_fqn = param.type_fqn
        ref = reference_type(type_fqn)
        if ref is None or param.is_variadic or is_array(type_fqn):
            return PlanNode(name, type_fqn, PRIMITIVE_SLOT, param=param)
        t = self.model.types.get(ref)
        if t is None or t.external:
            return PlanNode(name, type_fqn, EXTERNAL_OPAQUE, param=param)
        if depth > self.tdg.depth_bound:
            self.plan.truncated = True
            return PlanNode(name, type_fqn, EXTERNAL_OPAQUE, param=param, truncated=True)
        candidates = constructor_candidates(self.tdg, self.model, ref)
        if not candidates:
            raise PlanFailure(f"no usable constructor for {ref} (slot {name})")
        auto = len(candidates) == 1
        used_fallback = False
        if auto:
            choice = 1
        elif not self.use_llm:
            choice = fallback_choice(candidates)
            used_fallback = True
        else:
            prompt = build_selection_prompt(
                ref,
                candidates,
                self.spec,
                dependency_text(self.tdg, self.model, ref),
                slot=name,
                constraint=self.spec.constraint_for(name) or self.spec.constraint_for(root),
            )
            self.plan.gateway_calls += 1
            self.plan.prompt_hashes.append(hash_prompt(prompt))
            try:
                choice = parse_selection(self.gateway.complete(prompt).text, candidates)
            except SelectionParseError as exc:
                log.info("selection for %s/%s fell back: %s", self.method.method_id, name, exc)
                choice = fallback_choice(candidates)
                used_fallback = True
        ctor = candidates[choice - 1]
        children = tuple(
            self.node(f"{name}_{p.name}", p, depth + 1, root) for p in ctor.params
        )
        return PlanNode(
            name,
            ref,
            CONSTRUCTOR,
            signature_text=ctor.signature_text,
            owner_fqn=ctor.owner_fqn,
            children=children,
            param=param,
            auto_selected=auto,
            fallback=used_fallback,
        )


def plan_instantiation(
    method: MethodUnderTest,
    spec: PartitionSpec,
    tdg: TypeDependencyGraph,
    model: ApiModel,
    gateway: LLMGateway | None,
    use_llm: bool = True,
) -> InstantiationPlan:
    """Walk from each parameter down to literal slots, one selection per type occurrence.

    Types with a single candidate are taken without asking; failed or
    unparsable selections fall back to the constructor with the fewest
    reference-typed parameters. Raises :class:`PlanFailure` when some type
    has no usable constructor.
    """
    if spec.method_id != method.method_id:
        raise ValueError("specification belongs to a different method")
    if gateway is None:
        use_llm = False
    planner = _Planner(method, spec, tdg, model, gateway, use_llm)
    for param in _roots(method):
        planner.plan.roots.append(planner.node(param.name, param, 1, param.name))
    return planner.plan


__all__ = [
    "CONSTRUCTOR",
    "EXTERNAL_OPAQUE",
    "GatewayError",
    "InstantiationPlan",
    "PRIMITIVE_SLOT",
    "PlanFailure",
    "PlanNode",
    "SelectionParseError",
    "build_selection_prompt",
    "fallback_choice",
    "parse_selection",
    "plan_instantiation",
]
