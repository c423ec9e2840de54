"""Language-neutral description of a library under test.

The rest of the pipeline only ever sees these records, never source files, so
any frontend able to fill them in can drive test generation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

TYPE_KINDS = ("primitive", "reference", "array", "interface-like", "abstract")
VISIBILITIES = ("public", "non-public")

# Types the instantiator fills with literals instead of constructor calls.
PRIMITIVE_TYPES = frozenset(
    {"int", "float", "bool", "str", "bytes", "complex", "None", "object", "typing.Any"}
)

_ARRAY_PREFIXES = ("list[", "tuple[")


class ModelError(Exception):
    """Base class for model file problems."""


class ModelParseError(ModelError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class ModelValidationError(ModelError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid API model: " + "; ".join(violations))


def is_primitive(type_fqn: str) -> bool:
    return type_fqn in PRIMITIVE_TYPES


def is_array(type_fqn: str) -> bool:
    return type_fqn.startswith(_ARRAY_PREFIXES) and type_fqn.endswith("]")


def element_type(type_fqn: str) -> str:
    """Element type of ``list[T]`` / ``tuple[T, ...]``; ``object`` when mixed."""
    inner = type_fqn[type_fqn.index("[") + 1 : -1].strip()
    if type_fqn.startswith("tuple["):
        parts = [p.strip() for p in inner.split(",")]
        parts = [p for p in parts if p != "..."]
        if len(set(parts)) != 1:
            return "object"
        inner = parts[0]
    return inner or "object"


@dataclass(frozen=True)
class ParameterDescriptor:
    name: str
    type_fqn: str
    is_variadic: bool = False
    keyword_only: bool = False

    def render(self) -> str:
        star = "*" if self.is_variadic else ""
        return f"{star}{self.name}: {self.type_fqn}"


@dataclass(frozen=True)
class ConstructorDescriptor:
    owner_fqn: str
    params: tuple[ParameterDescriptor, ...]
    signature_text: str
    visibility: str = "public"

    @property
    def is_public(self) -> bool:
        return self.visibility == "public"


@dataclass(frozen=True)
class TypeDescriptor:
    fqn: str
    kind: str = "reference"
    supertypes: tuple[str, ...] = ()
    constructors: tuple[ConstructorDescriptor, ...] = ()
    source_excerpt: str | None = None
    external: bool = False

    @property
    def short_name(self) -> str:
        return self.fqn.rsplit(".", 1)[-1]


@dataclass(frozen=True)
class MethodUnderTest:
    owner_fqn: str
    name: str
    params: tuple[ParameterDescriptor, ...]
    source: str
    is_static: bool
    module: str
    doc_declared_exceptions: frozenset[str] = frozenset()
    signature_declared_exceptions: frozenset[str] = frozenset()
    branch_point_count: int = 0

    @property
    def method_id(self) -> str:
        return f"{self.owner_fqn}::{self.name}"

    @property
    def is_module_function(self) -> bool:
        return self.owner_fqn == self.module

    @property
    def needs_receiver(self) -> bool:
        return not self.is_static and not self.is_module_function

    def signature(self) -> str:
        params = ", ".join(p.render() for p in self.params)
        return f"{self.name}({params})"


@dataclass(frozen=True)
class ApiModel:
    library_name: str
    version: str = "0"
    types: Mapping[str, TypeDescriptor] = field(default_factory=dict)
    methods: tuple[MethodUnderTest, ...] = ()

    def method(self, method_id: str) -> MethodUnderTest:
        for m in self.methods:
            if m.method_id == method_id:
                return m
        raise KeyError(method_id)

    def resolves(self, type_fqn: str) -> bool:
        if is_primitive(type_fqn) or type_fqn in self.types:
            return True
        if is_array(type_fqn):
            return self.resolves(element_type(type_fqn))
        return False

    def subtypes_of(self, fqn: str) -> list[str]:
        """Direct subtypes recorded in the model, sorted by fqn."""
        return sorted(t.fqn for t in self.types.values() if fqn in t.supertypes)

    def is_subtype(self, sub: str, sup: str) -> bool:
        """Reflexive, transitive subtype test over recorded supertype links."""
        seen: set[str] = set()
        stack = [sub]
        while stack:
            cur = stack.pop()
            if cur == sup:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            t = self.types.get(cur)
            if t is not None:
                stack.extend(t.supertypes)
        return False


def validate(model: ApiModel) -> list[str]:
    """Return one message per invariant violation; an empty list means valid."""
    violations: list[str] = []

    def check_param_list(where: str, params: Iterable[ParameterDescriptor]) -> None:
        names: set[str] = set()
        for p in params:
            if p.name in names:
                violations.append(f"{where}: duplicate parameter name {p.name!r}")
            names.add(p.name)
            if not model.resolves(p.type_fqn):
                violations.append(
                    f"{where}: parameter {p.name!r} references missing type {p.type_fqn!r}"
                )

    for key, t in model.types.items():
        if not t.fqn:
            violations.append(f"type under key {key!r} has an empty fqn")
            continue
        if key != t.fqn:
            violations.append(f"type {t.fqn!r} stored under mismatched key {key!r}")
        if t.kind not in TYPE_KINDS:
            violations.append(f"type {t.fqn!r} has unknown kind {t.kind!r}")
        if t.kind == "primitive" and t.constructors:
            violations.append(f"primitive type {t.fqn!r} declares constructors")
        for sup in t.supertypes:
            if sup not in model.types:
                violations.append(f"type {t.fqn!r} has unknown supertype {sup!r}")
        signatures: set[str] = set()
        for ctor in t.constructors:
            where = f"constructor {ctor.signature_text!r} of {t.fqn!r}"
            if ctor.owner_fqn != t.fqn:
                violations.append(f"{where} names owner {ctor.owner_fqn!r}")
            if ctor.visibility not in VISIBILITIES:
                violations.append(f"{where} has unknown visibility {ctor.visibility!r}")
            if ctor.signature_text in signatures:
                violations.append(f"{where} is declared twice")
            signatures.add(ctor.signature_text)
            check_param_list(where, ctor.params)

    seen_methods: set[tuple[str, str, tuple[str, ...]]] = set()
    for m in model.methods:
        where = f"method {m.method_id!r}"
        if not m.source.strip():
            violations.append(f"{where} has empty source")
        if m.branch_point_count < 0:
            violations.append(f"{where} has negative branch_point_count")
        if not m.is_module_function and m.owner_fqn not in model.types:
            violations.append(f"{where} has unknown owner type {m.owner_fqn!r}")
        key = (m.owner_fqn, m.name, tuple(p.type_fqn for p in m.params))
        if key in seen_methods:
            violations.append(f"{where} is listed twice")
        seen_methods.add(key)
        check_param_list(where, m.params)
    return violations


# -- (de)serialization -------------------------------------------------------


def _param_to_dict(p: ParameterDescriptor) -> dict[str, Any]:
    return {
        "name": p.name,
        "type_fqn": p.type_fqn,
        "is_variadic": p.is_variadic,
        "keyword_only": p.keyword_only,
    }


def _param_from_dict(d: Mapping[str, Any]) -> ParameterDescriptor:
    return ParameterDescriptor(
        name=d["name"],
        type_fqn=d["type_fqn"],
        is_variadic=bool(d.get("is_variadic", False)),
        keyword_only=bool(d.get("keyword_only", False)),
    )


def _ctor_to_dict(c: ConstructorDescriptor) -> dict[str, Any]:
    return {
        "owner_fqn": c.owner_fqn,
        "params": [_param_to_dict(p) for p in c.params],
        "signature_text": c.signature_text,
        "visibility": c.visibility,
    }


def _ctor_from_dict(d: Mapping[str, Any]) -> ConstructorDescriptor:
    return ConstructorDescriptor(
        owner_fqn=d["owner_fqn"],
        params=tuple(_param_from_dict(p) for p in d.get("params", ())),
        signature_text=d["signature_text"],
        visibility=d.get("visibility", "public"),
    )


def type_to_dict(t: TypeDescriptor) -> dict[str, Any]:
    return {
        "fqn": t.fqn,
        "kind": t.kind,
        "supertypes": list(t.supertypes),
        "constructors": [_ctor_to_dict(c) for c in t.constructors],
        "source_excerpt": t.source_excerpt,
        "external": t.external,
    }


def type_from_dict(d: Mapping[str, Any]) -> TypeDescriptor:
    return TypeDescriptor(
        fqn=d["fqn"],
        kind=d.get("kind", "reference"),
        supertypes=tuple(d.get("supertypes", ())),
        constructors=tuple(_ctor_from_dict(c) for c in d.get("constructors", ())),
        source_excerpt=d.get("source_excerpt"),
        external=bool(d.get("external", False)),
    )


def method_to_dict(m: MethodUnderTest) -> dict[str, Any]:
    return {
        "owner_fqn": m.owner_fqn,
        "name": m.name,
        "module": m.module,
        "params": [_param_to_dict(p) for p in m.params],
        "source": m.source,
        "is_static": m.is_static,
        "doc_declared_exceptions": sorted(m.doc_declared_exceptions),
        "signature_declared_exceptions": sorted(m.signature_declared_exceptions),
        "branch_point_count": m.branch_point_count,
    }


def method_from_dict(d: Mapping[str, Any]) -> MethodUnderTest:
    return MethodUnderTest(
        owner_fqn=d["owner_fqn"],
        name=d["name"],
        module=d.get("module", d["owner_fqn"]),
        params=tuple(_param_from_dict(p) for p in d.get("params", ())),
        source=d["source"],
        is_static=bool(d["is_static"]),
        doc_declared_exceptions=frozenset(d.get("doc_declared_exceptions", ())),
        signature_declared_exceptions=frozenset(d.get("signature_declared_exceptions", ())),
        branch_point_count=int(d.get("branch_point_count", 0)),
    )


def to_dict(model: ApiModel) -> dict[str, Any]:
    return {
        "library": model.library_name,
        "version": model.version,
        "types": {fqn: type_to_dict(model.types[fqn]) for fqn in sorted(model.types)},
        "methods": [method_to_dict(m) for m in model.methods],
    }


def from_dict(data: Mapping[str, Any]) -> ApiModel:
    missing = [k for k in ("library", "version", "types", "methods") if k not in data]
    if missing:
        raise ModelParseError(f"missing top-level keys {missing}", 1, 1)
    try:
        types = {fqn: type_from_dict(t) for fqn, t in data["types"].items()}
        methods = tuple(method_from_dict(m) for m in data["methods"])
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ModelParseError(f"malformed model entry: {exc!r}", 1, 1) from exc
    return ApiModel(
        library_name=data["library"], version=data["version"], types=types, methods=methods
    )


def dumps(model: ApiModel) -> str:
    return json.dumps(to_dict(model), indent=2, ensure_ascii=False) + "\n"


def loads(text: str, *, check: bool = True) -> ApiModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(data, dict):
        raise ModelParseError("top-level value must be an object", 1, 1)
    model = from_dict(data)
    if check:
        violations = validate(model)
        if violations:
            raise ModelValidationError(violations)
    return model


def load(path: str | Path, *, check: bool = True) -> ApiModel:
    return loads(Path(path).read_text(encoding="utf-8"), check=check)


def store(model: ApiModel, path: str | Path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")
