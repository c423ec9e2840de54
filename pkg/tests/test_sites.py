from __future__ import annotations

import ast
import io
import textwrap
import tokenize

from hypothesis import given, settings
from hypothesis import strategies as st

from ispgen.sites import branch_sites, count_branch_points


def _func(src: str) -> ast.FunctionDef:
    return ast.parse(textwrap.dedent(src)).body[0]


def _keyword_oracle(src: str) -> int:
    """Count branching keywords with the tokenizer, independent of the AST walk."""
    n = 0
    for tok in tokenize.generate_tokens(io.StringIO(src).readline):
        if tok.type == tokenize.NAME and tok.string in ("if", "elif", "while", "for", "except", "and", "or"):
            n += 1
    return n


def test_pow_shape_has_three_sites():
    f = _func("""
    def pow(z, w):
        result = check(z, w)
        if result is not None:
            return result
        elif z.real().signum() >= 0 and z.imag().signum() == 0:
            return 1
        else:
            return 2
    """)
    kinds = [s.kind for s in branch_sites(f)]
    assert kinds == ["if", "if", "boolop"]


def test_match_with_default_is_five_edges():
    f = _func("""
    def f(x):
        match x:
            case 1:
                return "a"
            case 2:
                return "b"
            case 3:
                return "c"
            case 4:
                return "d"
            case _:
                return "e"
    """)
    sites = branch_sites(f)
    assert [s.kind for s in sites] == ["case"] * 5
    assert sum(len(s.arms) for s in sites) == 5


def test_single_block_has_no_sites():
    assert count_branch_points(_func("def f(x):\n    return x + 1\n")) == 0


def test_comprehension_and_conditional_expression():
    f = _func("def f(xs):\n    return [x for x in xs if x] if xs else []\n")
    assert [s.kind for s in branch_sites(f)] == ["ifexp", "comp_for", "comp_if"]


def test_boolop_operands_are_separate_sites():
    f = _func("def f(a, b, c):\n    return a or b or c\n")
    sites = branch_sites(f)
    assert [(s.kind, s.operand) for s in sites] == [("boolop", 0), ("boolop", 1)]


def test_ordinals_follow_preorder():
    f = _func("""
    def f(xs):
        for x in xs:
            while x:
                x -= 1
        try:
            pass
        except ValueError:
            pass
    """)
    sites = branch_sites(f)
    assert [s.ordinal for s in sites] == [0, 1, 2]
    assert [s.kind for s in sites] == ["for", "while", "except"]


# -- generated functions ---------------------------------------------------------------

_cond = st.sampled_from(["x", "x > 1", "x and y", "x or y or z", "not x", "x and (y or z)"])


@st.composite
def _block(draw, depth: int = 0) -> list[str]:
    lines = []
    for _ in range(draw(st.integers(1, 3))):
        kind = draw(st.sampled_from(["pass", "if", "ifelif", "while", "for", "try"] if depth < 3 else ["pass"]))
        if kind == "pass":
            lines.append("x = x")
            continue
        inner = ["    " + line for line in draw(_block(depth + 1))]
        if kind == "if":
            lines += [f"if {draw(_cond)}:"] + inner
        elif kind == "ifelif":
            lines += [f"if {draw(_cond)}:"] + inner + [f"elif {draw(_cond)}:"] + inner + ["else:"] + inner
        elif kind == "while":
            lines += [f"while {draw(_cond)}:"] + inner + ["    break"]
        elif kind == "for":
            lines += ["for x in y:"] + inner
        else:
            lines += ["try:"] + inner + ["except ValueError:"] + inner
    return lines


@settings(max_examples=200, deadline=None)
@given(_block())
def test_site_count_matches_token_oracle(body):
    src = "def f(x, y, z):\n" + "\n".join("    " + line for line in body) + "\n"
    f = _func(src)
    assert count_branch_points(f) == _keyword_oracle(src)
