"""Type dependency graph over the reference types a method needs to build.

Nodes are reference types. A usage edge ``A -> B`` means some public
constructor of ``A`` takes a ``B``; a subtype edge ``(S, T)`` means ``S`` is a
``T``, so an argument typed ``T`` may be built with any of ``S``'s
constructors. Real type graphs are cyclic (``Apfloat`` is an ``Apcomplex``
that holds ``Apfloat`` parts), so traversals cut revisits and stop at a depth
bound.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .api_model import (
    ApiModel,
    ConstructorDescriptor,
    MethodUnderTest,
    element_type,
    is_array,
    is_primitive,
)

DEFAULT_DEPTH_BOUND = 5


@dataclass(frozen=True)
class UsageEdge:
    source: str
    target: str
    via: str  # constructor signature text


@dataclass(frozen=True)
class TypeDependencyGraph:
    nodes: tuple[str, ...]
    edges: tuple[UsageEdge, ...]
    subtype_edges: tuple[tuple[str, str], ...]  # (sub, super)
    depth_bound: int = DEFAULT_DEPTH_BOUND
    external: frozenset[str] = frozenset()

    def successors(self, fqn: str) -> list[str]:
        """Usage targets in edge order, then direct subtypes by name."""
        out = [e.target for e in self.edges if e.source == fqn]
        out += sorted(sub for sub, sup in self.subtype_edges if sup == fqn)
        return list(dict.fromkeys(out))

    def subtypes(self, fqn: str) -> list[str]:
        """All transitive subtypes of ``fqn``, sorted by name."""
        found: set[str] = set()
        stack = [fqn]
        while stack:
            cur = stack.pop()
            for sub, sup in self.subtype_edges:
                if sup == cur and sub not in found and sub != fqn:
                    found.add(sub)
                    stack.append(sub)
        return sorted(found)


@dataclass(frozen=True)
class Reachable:
    types: tuple[str, ...]
    truncated: bool = False

    def __iter__(self):
        return iter(self.types)

    def __len__(self) -> int:
        return len(self.types)


def reference_type(type_fqn: str) -> str | None:
    """The reference type behind a parameter type, or None for literals."""
    while is_array(type_fqn):
        type_fqn = element_type(type_fqn)
    if is_primitive(type_fqn):
        return None
    return type_fqn


def _public_ctors(model: ApiModel, fqn: str) -> list[ConstructorDescriptor]:
    t = model.types.get(fqn)
    if t is None or t.external:
        return []
    return [c for c in t.constructors if c.is_public]


def build_tdg(
    model: ApiModel,
    depth_bound: int = DEFAULT_DEPTH_BOUND,
    methods: Iterable[MethodUnderTest] | None = None,
) -> TypeDependencyGraph:
    """Graph of every reference type reachable from the methods' parameters."""
    if depth_bound < 1:
        raise ValueError("depth_bound must be >= 1")
    methods = model.methods if methods is None else tuple(methods)

    all_subtypes: dict[str, list[str]] = {}
    for t in model.types.values():
        for sup in t.supertypes:
            all_subtypes.setdefault(sup, []).append(t.fqn)

    roots: list[str] = []
    for m in methods:
        if m.needs_receiver:
            roots.append(m.owner_fqn)
        for p in m.params:
            ref = reference_type(p.type_fqn)
            if ref is not None:
                roots.append(ref)

    nodes: list[str] = []
    seen: set[str] = set()
    edges: list[UsageEdge] = []
    subtype_edges: list[tuple[str, str]] = []
    queue = deque(dict.fromkeys(roots))
    while queue:
        fqn = queue.popleft()
        if fqn in seen:
            continue
        seen.add(fqn)
        nodes.append(fqn)
        for ctor in _public_ctors(model, fqn):
            for p in ctor.params:
                ref = reference_type(p.type_fqn)
                if ref is None:
                    continue
                edge = UsageEdge(fqn, ref, ctor.signature_text)
                if edge not in edges:
                    edges.append(edge)
                queue.append(ref)
        for sub in sorted(all_subtypes.get(fqn, ())):
            if (sub, fqn) not in subtype_edges:
                subtype_edges.append((sub, fqn))
            queue.append(sub)

    external = frozenset(n for n in nodes if n not in model.types or model.types[n].external)
    return TypeDependencyGraph(tuple(nodes), tuple(edges), tuple(subtype_edges), depth_bound, external)


def reachable_types(tdg: TypeDependencyGraph, param_types: Sequence[str]) -> Reachable:
    """Reference types needed for ``param_types``, users before the types they use.

    Types deeper than ``tdg.depth_bound`` (roots are depth 1) are left out and
    flagged through ``truncated``; edges closing a cycle are ignored for ordering.
    """
    node_set = set(tdg.nodes)
    roots = []
    for t in param_types:
        ref = reference_type(t)
        if ref is not None and ref in node_set:
            roots.append(ref)
    roots = list(dict.fromkeys(roots))

    # Depths are fixed when a node is first discovered (BFS), so a node
    # already queued at the bound is not mistaken for a truncated one.
    depth: dict[str, int] = {r: 1 for r in roots}
    truncated = False
    queue = deque(roots)
    while queue:
        fqn = queue.popleft()
        d = depth[fqn]
        for nxt in tdg.successors(fqn):
            if nxt in depth:
                continue
            if d + 1 > tdg.depth_bound:
                truncated = True
                continue
            depth[nxt] = d + 1
            queue.append(nxt)

    # Reverse DFS postorder over the depth-limited subgraph.
    post: list[str] = []
    visited: set[str] = set()
    for root in roots:
        if root in visited:
            continue
        visited.add(root)
        stack = [(root, iter(tdg.successors(root)))]
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt in depth and nxt not in visited:
                    visited.add(nxt)
                    stack.append((nxt, iter(tdg.successors(nxt))))
                    advanced = True
                    break
            if not advanced:
                post.append(node)
                stack.pop()
    return Reachable(tuple(reversed(post)), truncated)


def constructor_candidates(
    tdg: TypeDependencyGraph, model: ApiModel, type_fqn: str
) -> list[ConstructorDescriptor]:
    """Public constructors able to produce a ``type_fqn`` value.

    The type's own constructors come first (unless it is abstract), then
    those of its subtypes ordered by fqn, each in declaration order.
    """
    t = model.types.get(type_fqn)
    if t is None or t.external:
        return []
    out: list[ConstructorDescriptor] = []
    for fqn in [type_fqn] + tdg.subtypes(type_fqn):
        sub = model.types.get(fqn)
        if sub is None or sub.kind in ("abstract", "interface-like", "primitive"):
            continue
        out.extend(_public_ctors(model, fqn))
    return out


def dependency_text(tdg: TypeDependencyGraph, model: ApiModel, type_fqn: str) -> str:
    """Plain-text rendering of a type's constructors and is-a / has-a links."""
    lines: list[str] = []
    for fqn in [type_fqn] + [s for s in tdg.successors(type_fqn) if s != type_fqn]:
        t = model.types.get(fqn)
        if t is None or t.external:
            lines.append(f"class {fqn}: external type, constructors unknown")
            continue
        header = f"{t.kind if t.kind != 'reference' else 'class'} {fqn}"
        if t.supertypes:
            header += " is-a " + ", ".join(t.supertypes)
        lines.append(header + ":")
        ctors = _public_ctors(model, fqn)
        lines.append("  Constructors:" if ctors else "  Constructors: none")
        lines.extend(f"    {c.signature_text}" for c in ctors)
        uses = sorted({e.target for e in tdg.edges if e.source == fqn})
        if uses:
            lines.append("  has-a: " + ", ".join(uses))
    return "\n".join(lines)


def to_dot(tdg: TypeDependencyGraph) -> str:
    """Graphviz dump for debugging."""
    out = ["digraph tdg {"]
    for n in tdg.nodes:
        shape = "box, style=dashed" if n in tdg.external else "box"
        out.append(f'  "{n}" [shape={shape}];')
    for e in tdg.edges:
        out.append(f'  "{e.source}" -> "{e.target}" [label="{e.via}"];')
    for sub, sup in tdg.subtype_edges:
        out.append(f'  "{sub}" -> "{sup}" [style=dotted, label="is-a"];')
    out.append("}")
    return "\n".join(out) + "\n"
