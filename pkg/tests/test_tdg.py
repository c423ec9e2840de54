from __future__ import annotations

import random

from ispgen.api_model import ApiModel, ConstructorDescriptor, ParameterDescriptor, TypeDescriptor
from ispgen.tdg import build_tdg, constructor_candidates, dependency_text, reachable_types, to_dot

from tdg_oracle import check_order, distances, random_model, successor_map

APC = "apfloat.core.Apcomplex"
APF = "apfloat.core.Apfloat"


def _ctor(owner, *types):
    ps = tuple(ParameterDescriptor(f"p{i}", t) for i, t in enumerate(types))
    return ConstructorDescriptor(owner, ps, f"{owner}({', '.join(types)})")


def _model(*types):
    return ApiModel("t", types={t.fqn: t for t in types})


def test_corpus_graph(model):
    tdg = build_tdg(model)
    assert set(tdg.nodes) >= {APC, APF}
    assert any(e.source == APC and e.target == APF and "real" in e.via for e in tdg.edges)
    assert (APF, APC) in tdg.subtype_edges
    assert reachable_types(tdg, [APC, APC]).types == (APC, APF)
    assert reachable_types(tdg, []).types == ()
    assert reachable_types(tdg, ["int", "str"]).types == ()


def test_primitive_only_methods_give_empty_graph():
    from ispgen.api_model import MethodUnderTest

    m = MethodUnderTest("t", "f", (ParameterDescriptor("x", "int"),), "def f(x): ...", False, "t")
    tdg = build_tdg(ApiModel("t", methods=(m,)))
    assert tdg.nodes == () and tdg.edges == ()


def test_diamond_order():
    model = _model(
        TypeDescriptor("A", constructors=(_ctor("A", "B", "C"),)),
        TypeDescriptor("B", constructors=(_ctor("B", "D"),)),
        TypeDescriptor("C", constructors=(_ctor("C", "D"),)),
        TypeDescriptor("D", constructors=(_ctor("D", "int"),)),
    )
    order = list(reachable_types(build_tdg(model, methods=()), []).types)
    assert order == []
    tdg = build_tdg(_with_method(model, "A"))
    order = list(reachable_types(tdg, ["A"]).types)
    assert order[0] == "A" and order[-1] == "D" and sorted(order) == ["A", "B", "C", "D"]


def _with_method(model, type_fqn):
    from ispgen.api_model import MethodUnderTest

    m = MethodUnderTest("t", "f", (ParameterDescriptor("x", type_fqn),), "def f(x): ...", False, "t")
    return ApiModel(model.library_name, types=model.types, methods=(m,))


def test_self_recursive_node_is_cut_at_bound():
    node = TypeDescriptor("Node", constructors=(_ctor("Node", "Node"), _ctor("Node")))
    tdg = build_tdg(_with_method(_model(node), "Node"), depth_bound=2)
    assert tdg.nodes == ("Node",)
    assert [(e.source, e.target) for e in tdg.edges] == [("Node", "Node")]
    result = reachable_types(tdg, ["Node"])
    assert result.types == ("Node",) and not result.truncated


def test_chain_is_truncated_at_bound():
    model = _with_method(
        _model(
            TypeDescriptor("A", constructors=(_ctor("A", "B"),)),
            TypeDescriptor("B", constructors=(_ctor("B", "C"),)),
            TypeDescriptor("C", constructors=(_ctor("C"),)),
        ),
        "A",
    )
    assert reachable_types(build_tdg(model, depth_bound=2), ["A"]) == reachable_types(
        build_tdg(model, depth_bound=2), ["A"]
    )
    cut = reachable_types(build_tdg(model, depth_bound=2), ["A"])
    assert cut.types == ("A", "B") and cut.truncated
    full = reachable_types(build_tdg(model, depth_bound=3), ["A"])
    assert full.types == ("A", "B", "C") and not full.truncated


def test_candidates_of_abstract_type_come_from_subtypes():
    model = _with_method(
        _model(
            TypeDescriptor("Shape", kind="abstract", constructors=(_ctor("Shape"),)),
            TypeDescriptor("Square", supertypes=("Shape",), constructors=(_ctor("Square", "float"), _ctor("Square"))),
            TypeDescriptor("Circle", supertypes=("Shape",), constructors=(_ctor("Circle", "float"), _ctor("Circle"))),
        ),
        "Shape",
    )
    tdg = build_tdg(model)
    cands = constructor_candidates(tdg, model, "Shape")
    assert len(cands) == 4
    assert [c.owner_fqn for c in cands] == ["Circle", "Circle", "Square", "Square"]


def test_apcomplex_candidates_include_subtype(model):
    tdg = build_tdg(model)
    owners = [c.owner_fqn for c in constructor_candidates(tdg, model, APC)]
    assert owners[:2] == [APC, APC] and set(owners[2:]) == {APF}
    assert constructor_candidates(tdg, model, "numbers.Number") == []


def test_dependency_text_and_dot(model):
    tdg = build_tdg(model)
    text = dependency_text(tdg, model, APC)
    assert "Apcomplex(real: Apfloat, imag: Apfloat)" in text
    assert f"is-a {APC}" in text
    assert to_dot(tdg).startswith("digraph")


def test_random_graphs_against_oracle():
    rng = random.Random(7)
    for _ in range(200):
        model, roots = random_model(rng)
        bound = rng.randint(1, 6)
        tdg = build_tdg(_with_roots(model, roots), depth_bound=bound)
        result = reachable_types(tdg, roots)
        _check(model, roots, bound, result)


def _with_roots(model, roots):
    from ispgen.api_model import MethodUnderTest

    params = tuple(ParameterDescriptor(f"x{i}", r) for i, r in enumerate(roots))
    m = MethodUnderTest("g", "f", params, "def f(): ...", False, "g")
    return ApiModel(model.library_name, types=model.types, methods=(m,))


def _check(model, roots, bound, result):
    succ = successor_map(model)
    dist = distances(succ, [r for r in roots if r in model.types])
    expected = {v for v, d in dist.items() if d <= bound}
    assert len(result.types) == len(set(result.types))
    assert set(result.types) == expected
    assert result.truncated == any(d == bound + 1 for d in dist.values())
    check_order(list(result.types), succ)
