"""Build an :class:`ApiModel` from a tree of Python sources.

Only the standard :mod:`ast` module is used; nothing from the library under
test is imported. Multiple constructors per class are read from
``@overload``-decorated ``__init__`` stubs, dataclass fields, or the plain
``__init__``; exceptions a method declares are read from structured docstring
tags (``Raises:`` sections, ``:raises X:``) and from a ``@throws(...)``
decorator on the definition.
"""

from __future__ import annotations

import ast
import builtins
import logging
import re
import textwrap
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .api_model import (
    ApiModel,
    ConstructorDescriptor,
    MethodUnderTest,
    ParameterDescriptor,
    TypeDescriptor,
    element_type,
    is_array,
    is_primitive,
)
from .sites import count_branch_points

log = logging.getLogger(__name__)

_BUILTIN_LITERAL_TYPES = {
    "int": "int",
    "float": "float",
    "bool": "bool",
    "str": "str",
    "bytes": "bytes",
    "complex": "complex",
    "object": "object",
    "None": "None",
    "Any": "typing.Any",
}
_SEQUENCE_NAMES = {"list", "List", "Sequence", "MutableSequence", "Iterable", "Collection"}
_OPTIONAL_NAMES = {"Optional"}
_UNION_NAMES = {"Union"}
_SKIPPED_DUNDERS = {
    "__init__",
    "__new__",
    "__post_init__",
    "__init_subclass__",
    "__class_getitem__",
    "__del__",
}
_ABSTRACT_BASES = {"ABC", "abc.ABC"}
_INTERFACE_BASES = {"Protocol", "typing.Protocol"}
_THROWS_DECORATORS = {"throws", "raises"}

# Methods every class inherits from ``object``, with arity excluding self.
OBJECT_INHERITED = {
    "__eq__": 1,
    "__ne__": 1,
    "__hash__": 0,
    "__str__": 0,
    "__repr__": 0,
    "__format__": 1,
}


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.path}:{self.line}: {self.message}"


@dataclass
class SelectionReport:
    kept: list[str] = field(default_factory=list)
    excluded_abstract: list[str] = field(default_factory=list)
    excluded_single_block: list[str] = field(default_factory=list)
    excluded_object_inherited: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, list[str]]:
        return {
            "kept": list(self.kept),
            "excluded_abstract": list(self.excluded_abstract),
            "excluded_single_block": list(self.excluded_single_block),
            "excluded_object_inherited": list(self.excluded_object_inherited),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SelectionReport":
        return cls(**{k: list(data.get(k, ())) for k in cls().to_dict()})


# -- module scanning ----------------------------------------------------------


@dataclass
class _Module:
    name: str
    path: Path
    tree: ast.Module
    text: str
    is_package: bool
    imports: dict[str, str] = field(default_factory=dict)  # local alias -> dotted target
    classes: dict[str, ast.ClassDef] = field(default_factory=dict)
    functions: dict[str, ast.FunctionDef | ast.AsyncFunctionDef] = field(default_factory=dict)

    def segment(self, node: ast.AST) -> str:
        return ast.get_source_segment(self.text, node) or ""

    def def_source(self, node: ast.AST) -> str:
        """Source of a def/class including decorators, dedented."""
        start = min([node.lineno] + [d.lineno for d in getattr(node, "decorator_list", [])])
        lines = self.text.splitlines()[start - 1 : node.end_lineno]
        return textwrap.dedent("\n".join(lines)) + "\n"


def _module_name(path: Path, import_root: Path) -> tuple[str, bool]:
    rel = path.relative_to(import_root).with_suffix("")
    parts = list(rel.parts)
    is_package = parts[-1] == "__init__"
    if is_package:
        parts = parts[:-1]
    return ".".join(parts), is_package


def _resolve_relative(module: _Module, level: int, target: str | None) -> str:
    base = module.name.split(".")
    if not module.is_package:
        base = base[:-1]
    if level > 1:
        base = base[: len(base) - (level - 1)]
    if target:
        base = base + target.split(".")
    return ".".join(base)


def _decorator_name(node: ast.expr) -> str:
    if isinstance(node, ast.Call):
        node = node.func
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        return node.attr
    return ""


def _is_overload(node: ast.AST) -> bool:
    return any(_decorator_name(d) == "overload" for d in getattr(node, "decorator_list", []))


class LibrarySource:
    """Parsed view of a source tree; the frontend's working state."""

    def __init__(self, source_root: str | Path):
        self.source_root = Path(source_root)
        root = self.source_root
        self.import_root = root.parent if (root / "__init__.py").exists() else root
        self.library_name = root.name
        self.modules: dict[str, _Module] = {}
        self.diagnostics: list[Diagnostic] = []
        self.class_index: dict[str, tuple[_Module, ast.ClassDef]] = {}
        self.function_index: dict[str, tuple[_Module, ast.AST, ast.ClassDef | None]] = {}
        self._external: dict[str, TypeDescriptor] = {}
        self._ctor_cache: dict[str, tuple[ConstructorDescriptor, ...] | None] = {}
        self._scan()

    # scanning

    def _scan(self) -> None:
        if not self.source_root.is_dir():
            return
        paths = sorted(
            p
            for p in self.source_root.rglob("*.py")
            if not any(part.startswith((".", "__pycache__")) for part in p.relative_to(self.source_root).parts)
        )
        for path in paths:
            name, is_package = _module_name(path, self.import_root)
            rel = str(path.relative_to(self.import_root))
            try:
                text = path.read_text(encoding="utf-8")
                tree = ast.parse(text, filename=rel)
            except (SyntaxError, UnicodeDecodeError, ValueError) as exc:
                line = getattr(exc, "lineno", 0) or 0
                self.diagnostics.append(Diagnostic(rel, line, f"skipped unparseable file: {exc}"))
                continue
            module = _Module(name, path, tree, text, is_package)
            self._collect_symbols(module)
            self.modules[name] = module
        if self.diagnostics:
            log.warning("%d file(s) skipped while scanning %s", len(self.diagnostics), self.source_root)

    def _collect_symbols(self, module: _Module) -> None:
        for node in module.tree.body:
            if isinstance(node, ast.Import):
                for alias in node.names:
                    if alias.asname:
                        module.imports[alias.asname] = alias.name
                    else:
                        top = alias.name.split(".")[0]
                        module.imports[top] = top
            elif isinstance(node, ast.ImportFrom):
                base = (
                    _resolve_relative(module, node.level, node.module)
                    if node.level
                    else (node.module or "")
                )
                for alias in node.names:
                    if alias.name == "*":
                        continue
                    module.imports[alias.asname or alias.name] = f"{base}.{alias.name}"
            elif isinstance(node, ast.ClassDef):
                module.classes[node.name] = node
                self.class_index[f"{module.name}.{node.name}"] = (module, node)
                for item in node.body:
                    if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)) and not _is_overload(item):
                        self.function_index[f"{module.name}.{node.name}.{item.name}"] = (module, item, node)
            elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                if _is_overload(node):
                    continue
                module.functions[node.name] = node
                self.function_index[f"{module.name}.{node.name}"] = (module, node, None)

    # name resolution

    def resolve_symbol(self, module: _Module, dotted: str) -> str:
        """Map a name as written in ``module`` to a fully qualified name."""
        head, _, rest = dotted.partition(".")
        if head in module.classes or head in module.functions:
            target = f"{module.name}.{head}"
        elif head in module.imports:
            target = module.imports[head]
        else:
            return dotted
        target = f"{target}.{rest}" if rest else target
        return self._follow_reexports(target)

    def _follow_reexports(self, fqn: str, depth: int = 0) -> str:
        """``pkg.Name`` re-exported from ``pkg/__init__`` -> defining module."""
        if depth > 8 or fqn in self.class_index or fqn in self.function_index:
            return fqn
        mod_name, _, attr = fqn.rpartition(".")
        module = self.modules.get(mod_name)
        if module is not None and attr in module.imports:
            return self._follow_reexports(module.imports[attr], depth + 1)
        return fqn

    def resolve_annotation(self, module: _Module, node: ast.expr | None) -> str:
        if node is None:
            return "object"
        if isinstance(node, ast.Constant):
            if node.value is None:
                return "None"
            if isinstance(node.value, str):
                try:
                    inner = ast.parse(node.value, mode="eval").body
                except SyntaxError:
                    return node.value
                return self.resolve_annotation(module, inner)
            return "object"
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.BitOr):
            return self._union(module, [node.left, node.right])
        if isinstance(node, ast.Subscript):
            base = self._dotted(node.value)
            short = base.rsplit(".", 1)[-1]
            args = node.slice.elts if isinstance(node.slice, ast.Tuple) else [node.slice]
            if short in _OPTIONAL_NAMES:
                return self._union(module, [args[0], ast.Constant(None)])
            if short in _UNION_NAMES:
                return self._union(module, list(args))
            if short in _SEQUENCE_NAMES:
                return f"list[{self.resolve_annotation(module, args[0])}]"
            if short in ("tuple", "Tuple"):
                parts = [
                    "..." if isinstance(a, ast.Constant) and a.value is Ellipsis else self.resolve_annotation(module, a)
                    for a in args
                ]
                return f"tuple[{', '.join(parts)}]"
            if short in ("dict", "Dict", "Mapping", "set", "Set", "frozenset", "FrozenSet"):
                return "object"
            return self.resolve_annotation(module, node.value)
        dotted = self._dotted(node)
        if not dotted:
            return "object"
        if dotted in _BUILTIN_LITERAL_TYPES and dotted not in module.classes:
            return _BUILTIN_LITERAL_TYPES[dotted]
        if dotted in ("typing.Any",):
            return "typing.Any"
        return self.resolve_symbol(module, dotted)

    def _union(self, module: _Module, members: list[ast.expr]) -> str:
        resolved = []
        for m in members:
            if isinstance(m, ast.BinOp) and isinstance(m.op, ast.BitOr):
                resolved.extend(self._union(module, [m.left, m.right]).split(" | "))
            else:
                resolved.append(self.resolve_annotation(module, m))
        non_none = [r for r in dict.fromkeys(resolved) if r != "None"]
        if not non_none:
            return "None"
        if len(non_none) == 1:
            return non_none[0]
        return " | ".join(non_none)

    @staticmethod
    def _dotted(node: ast.expr) -> str:
        parts: list[str] = []
        while isinstance(node, ast.Attribute):
            parts.append(node.attr)
            node = node.value
        if isinstance(node, ast.Name):
            parts.append(node.id)
            return ".".join(reversed(parts))
        return ""

    def _note_type(self, fqn: str) -> None:
        """Register ``fqn`` as an opaque external node if it is not a library class."""
        if is_primitive(fqn) or fqn in self.class_index or fqn in self._external:
            return
        if is_array(fqn):
            self._note_type(element_type(fqn))
            return
        self._external[fqn] = TypeDescriptor(fqn=fqn, kind="reference", external=True)

    # parameters

    def _params(
        self, module: _Module, func: ast.FunctionDef | ast.AsyncFunctionDef, skip_first: bool
    ) -> tuple[ParameterDescriptor, ...]:
        args = func.args
        positional = list(args.posonlyargs) + list(args.args)
        if skip_first and positional:
            positional = positional[1:]
        params = []
        for a in positional:
            params.append(ParameterDescriptor(a.arg, self.resolve_annotation(module, a.annotation)))
        if args.vararg is not None:
            params.append(
                ParameterDescriptor(
                    args.vararg.arg,
                    self.resolve_annotation(module, args.vararg.annotation),
                    is_variadic=True,
                )
            )
        for a in args.kwonlyargs:
            params.append(
                ParameterDescriptor(a.arg, self.resolve_annotation(module, a.annotation), keyword_only=True)
            )
        for p in params:
            self._note_type(p.type_fqn)
        return tuple(params)

    def _signature_text(self, module: _Module, cls_name: str, func: ast.FunctionDef, skip_first: bool = True) -> str:
        args = func.args
        positional = list(args.posonlyargs) + list(args.args)
        if skip_first and positional:
            positional = positional[1:]
        rendered = []
        for a in positional:
            ann = module.segment(a.annotation) if a.annotation is not None else ""
            rendered.append(f"{a.arg}: {ann}" if ann else a.arg)
        if args.vararg is not None:
            ann = module.segment(args.vararg.annotation) if args.vararg.annotation is not None else ""
            rendered.append(f"*{args.vararg.arg}: {ann}" if ann else f"*{args.vararg.arg}")
        elif args.kwonlyargs:
            rendered.append("*")
        for a in args.kwonlyargs:
            ann = module.segment(a.annotation) if a.annotation is not None else ""
            rendered.append(f"{a.arg}: {ann}" if ann else a.arg)
        return f"{cls_name}({', '.join(rendered)})"

    # classes

    def _class_kind(self, module: _Module, node: ast.ClassDef) -> str:
        base_names = {self._dotted(b) for b in node.bases}
        if base_names & _INTERFACE_BASES:
            return "interface-like"
        if base_names & _ABSTRACT_BASES:
            return "abstract"
        for kw in node.keywords:
            if kw.arg == "metaclass" and self._dotted(kw.value).endswith("ABCMeta"):
                return "abstract"
        for item in node.body:
            if any(_decorator_name(d) == "abstractmethod" for d in getattr(item, "decorator_list", [])):
                return "abstract"
        return "reference"

    def _supertypes(self, module: _Module, node: ast.ClassDef) -> tuple[str, ...]:
        sups = []
        for b in node.bases:
            if isinstance(b, ast.Subscript):
                b = b.value
            dotted = self._dotted(b)
            if not dotted or dotted in ("object", "Generic", "typing.Generic") or dotted in _ABSTRACT_BASES | _INTERFACE_BASES:
                continue
            fqn = self.resolve_symbol(module, dotted)
            self._note_type(fqn)
            sups.append(fqn)
        return tuple(sups)

    def _is_dataclass(self, node: ast.ClassDef) -> bool:
        return any(_decorator_name(d) == "dataclass" for d in node.decorator_list)

    def _dataclass_params(self, fqn: str) -> list[tuple[str, ParameterDescriptor]] | None:
        module, node = self.class_index[fqn]
        fields: list[tuple[str, ParameterDescriptor]] = []
        for sup in self._supertypes(module, node):
            if sup in self.class_index and self._is_dataclass(self.class_index[sup][1]):
                fields.extend(self._dataclass_params(sup) or [])
        for item in node.body:
            if not isinstance(item, ast.AnnAssign) or not isinstance(item.target, ast.Name):
                continue
            if "ClassVar" in module.segment(item.annotation):
                continue
            if (
                isinstance(item.value, ast.Call)
                and _decorator_name(item.value) == "field"
                and any(
                    kw.arg == "init" and isinstance(kw.value, ast.Constant) and kw.value.value is False
                    for kw in item.value.keywords
                )
            ):
                continue
            ann = module.segment(item.annotation)
            param = ParameterDescriptor(item.target.id, self.resolve_annotation(module, item.annotation))
            self._note_type(param.type_fqn)
            fields = [f for f in fields if f[1].name != param.name]
            fields.append((f"{item.target.id}: {ann}", param))
        return fields

    def constructors(self, fqn: str) -> tuple[ConstructorDescriptor, ...] | None:
        """Constructors of a library class; ``None`` when they are unknown."""
        if fqn in self._ctor_cache:
            return self._ctor_cache[fqn]
        self._ctor_cache[fqn] = None  # guards inheritance cycles
        module, node = self.class_index[fqn]
        visibility = "non-public" if node.name.startswith("_") else "public"
        ctors: tuple[ConstructorDescriptor, ...] | None
        inits = [
            item
            for item in node.body
            if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)) and item.name == "__init__"
        ]
        overloads = [f for f in inits if _is_overload(f)]
        chosen = overloads or inits[-1:]
        if chosen:
            ctors = tuple(
                ConstructorDescriptor(
                    owner_fqn=fqn,
                    params=self._params(module, f, skip_first=True),
                    signature_text=self._signature_text(module, node.name, f),
                    visibility=visibility,
                )
                for f in chosen
            )
        elif self._is_dataclass(node):
            fields = self._dataclass_params(fqn) or []
            ctors = (
                ConstructorDescriptor(
                    owner_fqn=fqn,
                    params=tuple(p for _, p in fields),
                    signature_text=f"{node.name}({', '.join(t for t, _ in fields)})",
                    visibility=visibility,
                ),
            )
        else:
            ctors = None
            library_bases = [s for s in self._supertypes(module, node) if s in self.class_index]
            external_bases = [s for s in self._supertypes(module, node) if s not in self.class_index]
            for base in library_bases:
                inherited = self.constructors(base)
                if inherited is not None:
                    base_name = base.rsplit(".", 1)[-1]
                    ctors = tuple(
                        ConstructorDescriptor(
                            owner_fqn=fqn,
                            params=c.params,
                            signature_text=node.name + c.signature_text[len(base_name):],
                            visibility=visibility,
                        )
                        for c in inherited
                    )
                    break
            if ctors is None and not library_bases and not external_bases:
                ctors = (ConstructorDescriptor(fqn, (), f"{node.name}()", visibility),)
        self._ctor_cache[fqn] = ctors
        return ctors

    def _type_descriptor(self, fqn: str) -> TypeDescriptor:
        module, node = self.class_index[fqn]
        header = module.text.splitlines()[node.lineno - 1].strip()
        doc = ast.get_docstring(node)
        excerpt = header if not doc else f"{header}\n    \"\"\"{doc.splitlines()[0]}\"\"\""
        return TypeDescriptor(
            fqn=fqn,
            kind=self._class_kind(module, node),
            supertypes=self._supertypes(module, node),
            constructors=self.constructors(fqn) or (),
            source_excerpt=excerpt,
        )

    # methods

    def _method(
        self, module: _Module, func: ast.FunctionDef | ast.AsyncFunctionDef, cls: ast.ClassDef | None
    ) -> MethodUnderTest:
        decorators = {_decorator_name(d) for d in func.decorator_list}
        is_static = cls is None or bool(decorators & {"staticmethod", "classmethod"})
        skip_first = cls is not None and "staticmethod" not in decorators
        owner = module.name if cls is None else f"{module.name}.{cls.name}"
        source = module.def_source(func)
        resolve = lambda name: self._resolve_exception(module, name)  # noqa: E731
        return MethodUnderTest(
            owner_fqn=owner,
            name=func.name,
            module=module.name,
            params=self._params(module, func, skip_first),
            source=source,
            is_static=is_static,
            doc_declared_exceptions=frozenset(
                extract_doc_exceptions(source, resolve=resolve, diagnostics=self.diagnostics)
            ),
            signature_declared_exceptions=frozenset(extract_signature_exceptions(source, resolve=resolve)),
            branch_point_count=count_branch_points(func),
        )

    def _resolve_exception(self, module: _Module, name: str) -> str:
        if hasattr(builtins, name) and name not in module.classes and name not in module.imports:
            return name
        return self.resolve_symbol(module, name)

    def _is_api_method(self, func: ast.AST) -> bool:
        name = func.name  # type: ignore[attr-defined]
        decorators = {_decorator_name(d) for d in func.decorator_list}  # type: ignore[attr-defined]
        if decorators & {"property", "setter", "getter", "deleter", "cached_property", "overload"}:
            return False
        if name.startswith("__") and name.endswith("__"):
            return name not in _SKIPPED_DUNDERS
        return not name.startswith("_")

    def to_model(self, version: str = "0") -> ApiModel:
        types: dict[str, TypeDescriptor] = {}
        methods: list[MethodUnderTest] = []
        for module in self.modules.values():
            private = any(part.startswith("_") for part in module.name.split("."))
            for node in module.tree.body:
                if private:
                    continue
                if isinstance(node, ast.ClassDef):
                    fqn = f"{module.name}.{node.name}"
                    types[fqn] = self._type_descriptor(fqn)
                    if node.name.startswith("_"):
                        continue
                    for item in node.body:
                        if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)) and self._is_api_method(item):
                            methods.append(self._method(module, item, node))
                elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    if self._is_api_method(node) and not (node.name.startswith("__")):
                        methods.append(self._method(module, node, None))
        for fqn, t in self._external.items():
            types.setdefault(fqn, t)
        return ApiModel(library_name=self.library_name, version=version, types=types, methods=tuple(methods))

    # callees

    def callee_sources(self, method: MethodUnderTest, diagnostics: list[Diagnostic] | None = None) -> list[str]:
        own_key = f"{method.owner_fqn}.{method.name}"
        if own_key not in self.function_index:
            return []
        module, func, cls = self.function_index[own_key]
        calls = sorted(
            (n for stmt in func.body for n in ast.walk(stmt) if isinstance(n, ast.Call)),
            key=lambda n: (n.lineno, n.col_offset),
        )
        seen: list[str] = []
        for call in calls:
            target = self._resolve_callee(module, cls, call.func)
            if target is None:
                if diagnostics is not None:
                    diagnostics.append(
                        Diagnostic(str(module.path.name), call.lineno, f"unresolved callee {module.segment(call.func)!r}")
                    )
                continue
            if target == "" or target == own_key or target in seen:
                continue
            seen.append(target)
        out = []
        for target in seen:
            mod, node, _ = self.function_index[target]
            out.append(mod.def_source(node))
        return out

    def _resolve_callee(self, module: _Module, cls: ast.ClassDef | None, func: ast.expr) -> str | None:
        """Library function key, ``""`` for calls outside the library, ``None`` if unknown."""
        if isinstance(func, ast.Name):
            if func.id in module.functions or func.id in module.imports:
                fqn = self.resolve_symbol(module, func.id)
                if fqn in self.function_index:
                    return fqn
                if fqn in self.class_index or not self._in_library(fqn):
                    return ""
                return None
            if func.id in module.classes or hasattr(builtins, func.id):
                return ""
            return None
        if isinstance(func, ast.Attribute):
            owner = func.value
            if isinstance(owner, ast.Name) and owner.id in ("self", "cls") and cls is not None:
                return self._lookup_method(f"{module.name}.{cls.name}", func.attr)
            dotted = self._dotted(owner)
            if dotted:
                head = dotted.split(".")[0]
                if head in module.imports or head in module.classes:
                    fqn = self.resolve_symbol(module, dotted)
                    if fqn in self.class_index:
                        return self._lookup_method(fqn, func.attr)
                    key = f"{fqn}.{func.attr}"
                    key = self._follow_reexports(key)
                    if key in self.function_index:
                        return key
                    if not self._in_library(fqn):
                        return ""
        return None

    def _lookup_method(self, class_fqn: str, name: str, depth: int = 0) -> str | None:
        key = f"{class_fqn}.{name}"
        if key in self.function_index:
            return key
        if class_fqn in self.class_index and depth < 16:
            module, node = self.class_index[class_fqn]
            for sup in self._supertypes(module, node):
                found = self._lookup_method(sup, name, depth + 1)
                if found:
                    return found
        return None

    def _in_library(self, fqn: str) -> bool:
        top = fqn.split(".")[0]
        return any(m.split(".")[0] == top for m in self.modules)


# -- public operations ----------------------------------------------------------


def scan(source_root: str | Path) -> LibrarySource:
    return LibrarySource(source_root)


def extract_api_model(source_root: str | Path, diagnostics: list[Diagnostic] | None = None) -> ApiModel:
    """Extract the API model of every module under ``source_root``.

    Files that fail to parse are skipped and reported through ``diagnostics``.
    """
    library = LibrarySource(source_root)
    model = library.to_model()
    if diagnostics is not None:
        diagnostics.extend(library.diagnostics)
    return model


def select_methods(model: ApiModel) -> SelectionReport:
    report = SelectionReport()
    for m in model.methods:
        owner = model.types.get(m.owner_fqn)
        if owner is not None and owner.kind in ("abstract", "interface-like"):
            report.excluded_abstract.append(m.method_id)
        elif OBJECT_INHERITED.get(m.name) == len(m.params) and not m.is_module_function:
            report.excluded_object_inherited.append(m.method_id)
        elif m.branch_point_count == 0:
            report.excluded_single_block.append(m.method_id)
        else:
            report.kept.append(m.method_id)
    return report


_NAME = r"[A-Za-z_][\w.]*"
_SPHINX_RAISES = re.compile(rf":(?:raises?|exception|except)\s+({_NAME}(?:\s*,\s*{_NAME})*)\s*:")
_AT_RAISES = re.compile(rf"@(?:raises?|throws|exception)\s+({_NAME})")
_SECTION = re.compile(r"^\s*(Raises|Throws|Exceptions)\s*:?\s*$")
_NUMPY_RULE = re.compile(r"^\s*-{3,}\s*$")
_ENTRY = re.compile(rf"^({_NAME}(?:\s*(?:,|\bor\b|\|)\s*{_NAME})*)\s*(?::.*)?$")


def _docstring_of(source: str) -> str | None:
    tree = ast.parse(textwrap.dedent(source))
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            return ast.get_docstring(node)
    return None


def extract_doc_exceptions(
    method: MethodUnderTest | str,
    resolve: Callable[[str], str] | None = None,
    diagnostics: list[Diagnostic] | None = None,
) -> set[str]:
    """Exception names declared in the docstring's structured raise tags."""
    source = method.source if isinstance(method, MethodUnderTest) else method
    where = method.method_id if isinstance(method, MethodUnderTest) else "<source>"
    try:
        doc = _docstring_of(source)
    except SyntaxError as exc:
        if diagnostics is not None:
            diagnostics.append(Diagnostic(where, exc.lineno or 0, f"unparsable doc comment: {exc.msg}"))
        return set()
    if not doc:
        return set()
    names: list[str] = []
    for match in _SPHINX_RAISES.finditer(doc):
        names.extend(n.strip() for n in match.group(1).split(","))
    names.extend(m.group(1) for m in _AT_RAISES.finditer(doc))

    lines = doc.splitlines()
    i = 0
    while i < len(lines):
        if not _SECTION.match(lines[i]):
            i += 1
            continue
        header_indent = len(lines[i]) - len(lines[i].lstrip())
        i += 1
        numpy_style = i < len(lines) and _NUMPY_RULE.match(lines[i]) is not None
        if numpy_style:
            i += 1
        entry_indent: int | None = None
        while i < len(lines):
            line = lines[i]
            if not line.strip():
                i += 1
                if numpy_style:
                    continue
                break
            indent = len(line) - len(line.lstrip())
            if indent < header_indent or (indent == header_indent and not numpy_style):
                break
            if numpy_style and i + 1 < len(lines) and _NUMPY_RULE.match(lines[i + 1]):
                break
            if entry_indent is None:
                entry_indent = indent
            if indent == entry_indent:
                match = _ENTRY.match(line.strip())
                if match:
                    names.extend(n for n in re.split(r"\s*(?:,|\bor\b|\|)\s*", match.group(1)) if n)
                elif diagnostics is not None:
                    diagnostics.append(Diagnostic(where, 0, f"unrecognized raises entry {line.strip()!r}"))
            i += 1
    resolve = resolve or (lambda n: n)
    return {resolve(n) for n in names}


def extract_signature_exceptions(
    method: MethodUnderTest | str, resolve: Callable[[str], str] | None = None
) -> set[str]:
    """Exception classes listed in a ``@throws(...)`` decorator on the definition."""
    source = method.source if isinstance(method, MethodUnderTest) else method
    try:
        tree = ast.parse(textwrap.dedent(source))
    except SyntaxError:
        return set()
    resolve = resolve or (lambda n: n)
    names: set[str] = set()
    for node in tree.body:
        if not isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            continue
        for dec in node.decorator_list:
            if isinstance(dec, ast.Call) and _decorator_name(dec) in _THROWS_DECORATORS:
                for arg in dec.args:
                    dotted = LibrarySource._dotted(arg)
                    if dotted:
                        names.add(resolve(dotted))
    return names


def collect_callee_sources(
    method: MethodUnderTest,
    library: LibrarySource,
    depth: int = 1,
    diagnostics: list[Diagnostic] | None = None,
) -> list[str]:
    """Source of library functions ``method`` calls directly, in call order."""
    if depth != 1:
        raise ValueError("only depth 1 callee collection is supported")
    return library.callee_sources(method, diagnostics)


def iter_kept(model: ApiModel, report: SelectionReport) -> Iterable[MethodUnderTest]:
    kept = set(report.kept)
    return (m for m in model.methods if m.method_id in kept)
