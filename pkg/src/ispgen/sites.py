"""Branch-site enumeration shared by method selection and instrumentation.

A site is one place where control flow can split. Binary sites (conditions,
loop tests, short-circuit operands) have a true and a false arm; ``case``
clauses and ``except`` handlers are one-armed sites of their own.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

BINARY_ARMS = ("true", "false")
SINGLE_ARM = ("taken",)


@dataclass(frozen=True)
class BranchSite:
    ordinal: int
    kind: str
    node: ast.AST
    operand: int = 0  # which BoolOp operand decides the short circuit

    @property
    def arms(self) -> tuple[str, ...]:
        return SINGLE_ARM if self.kind in ("case", "except") else BINARY_ARMS


def _children(node: ast.AST):
    return ast.iter_child_nodes(node)


def branch_sites(func: ast.FunctionDef | ast.AsyncFunctionDef) -> list[BranchSite]:
    """Pre-order list of branch sites inside ``func``'s body."""
    sites: list[BranchSite] = []

    def add(kind: str, node: ast.AST, operand: int = 0) -> None:
        sites.append(BranchSite(len(sites), kind, node, operand))

    def visit(node: ast.AST) -> None:
        if isinstance(node, ast.If):
            add("if", node)
        elif isinstance(node, ast.IfExp):
            add("ifexp", node)
        elif isinstance(node, ast.While):
            add("while", node)
        elif isinstance(node, (ast.For, ast.AsyncFor)):
            add("for", node)
        elif isinstance(node, ast.BoolOp):
            for i in range(len(node.values) - 1):
                add("boolop", node, i)
        elif isinstance(node, ast.comprehension):
            add("comp_for", node)
            for cond in node.ifs:
                add("comp_if", cond)
        elif isinstance(node, ast.match_case):
            add("case", node)
        elif isinstance(node, ast.ExceptHandler):
            add("except", node)
        for child in _children(node):
            visit(child)

    for stmt in func.body:
        visit(stmt)
    return sites


def count_branch_points(func: ast.FunctionDef | ast.AsyncFunctionDef) -> int:
    return len(branch_sites(func))
