from __future__ import annotations

import random

import pytest

from ispgen.api_model import ApiModel, ConstructorDescriptor, MethodUnderTest, ParameterDescriptor, TypeDescriptor
from ispgen.llm_gateway import GatewayConfig, LLMGateway, StubResponses
from ispgen.partitioner import PartitionSpec, empty_spec, parse_partitions
from ispgen.selector import (
    CONSTRUCTOR,
    EXTERNAL_OPAQUE,
    PRIMITIVE_SLOT,
    PlanFailure,
    SelectionParseError,
    build_selection_prompt,
    fallback_choice,
    parse_selection,
    plan_instantiation,
)
from ispgen.tdg import build_tdg, constructor_candidates

from conftest import CountingTransport, POW
from tdg_oracle import random_model

APC = "apfloat.core.Apcomplex"
APF = "apfloat.core.Apfloat"
SPEC1 = "(1) z: real part is non-negative and imaginary part is 0; w: is an Apcomplex number"


def _stub(*entries):
    return LLMGateway(GatewayConfig(mode="stub"), stub=StubResponses(list(entries)), transport=CountingTransport())


def _ctor(owner, *params):
    ps = tuple(ParameterDescriptor(n, t) for n, t in params)
    return ConstructorDescriptor(owner, ps, f"{owner}({', '.join(p.render() for p in ps)})")


@pytest.mark.parametrize(
    "text, expected",
    [("1", 1), ("I choose constructor 2 because it takes parts", 2), ("ANSWER: 2", 2),
     ("Constructor 1 is tempting, but ANSWER: 2", 2), ("[2] fits best.", 2)],
)
def test_parse_selection(text, expected):
    assert parse_selection(text, ["a", "b"]) == expected


@pytest.mark.parametrize("text", ["7", "", "none of them", "0", "2.5"])
def test_parse_selection_failures(text):
    with pytest.raises(SelectionParseError):
        parse_selection(text, ["a", "b"])


def test_prompt_lists_candidates(model):
    tdg = build_tdg(model)
    cands = constructor_candidates(tdg, model, APC)
    (spec,) = parse_partitions(model.method(POW), SPEC1)
    prompt = build_selection_prompt(APC, cands, spec, "deps", slot="z")
    assert "[1] Apcomplex(real: Apfloat, imag: Apfloat)" in prompt.user_text
    assert "[2] Apcomplex(value: str)" in prompt.user_text
    assert "real part is non-negative and imaginary part is 0" in prompt.user_text
    assert prompt.stage == "SELECT" and prompt.meta_dict["slot"] == "z"
    with pytest.raises(ValueError):
        build_selection_prompt(APC, [], spec, "deps")


def test_single_candidate_still_renders_a_prompt(model):
    tdg = build_tdg(model)
    one = constructor_candidates(tdg, model, APC)[:1]
    prompt = build_selection_prompt(APC, one, empty_spec(model.method(POW)), "deps")
    assert "[1]" in prompt.user_text and "[2]" not in prompt.user_text


def test_ten_candidates_are_indexed_distinctly():
    cands = [_ctor("t.T", *[(f"a{j}", "int") for j in range(i)]) for i in range(10)]
    spec = PartitionSpec("t::f", 1, (), "x")
    prompt = build_selection_prompt("t.T", cands, spec, "deps")
    for i in range(1, 11):
        assert f"[{i}] " in prompt.user_text
    assert parse_selection("ANSWER: 10", cands) == 10


def test_pow_plan_matches_selected_constructors(model):
    tdg = build_tdg(model)
    (spec,) = parse_partitions(model.method(POW), SPEC1)
    gw = _stub({"stage": "SELECT", "text": "ANSWER: 1"})
    plan = plan_instantiation(model.method(POW), spec, tdg, model, gw)
    z, w = plan.roots
    assert z.signature_text == "Apcomplex(real: Apfloat, imag: Apfloat)"
    assert [c.signature_text for c in z.children] == ["Apfloat(value: float)"] * 2
    assert [c.name for c in z.children] == ["z_real", "z_imag"]
    assert [s.name for s in plan.primitive_slots()] == ["z_real_value", "z_imag_value", "w_real_value", "w_imag_value"]
    assert plan.gateway_calls == 6 == gw.calls_by_stage()["SELECT"]
    assert not plan.truncated


def test_all_primitive_method_needs_no_calls(model):
    gw = _stub()
    m = model.method("lang.conversion::int_array_to_long")
    plan = plan_instantiation(m, empty_spec(m), build_tdg(model), model, gw)
    assert all(n.kind == PRIMITIVE_SLOT for n in plan.nodes())
    assert plan.gateway_calls == 0 and gw.usage == []


def test_recursive_node_is_truncated():
    node = TypeDescriptor("g.Node", constructors=(_ctor("g.Node", ("nxt", "g.Node")),))
    m = MethodUnderTest("g", "f", (ParameterDescriptor("n", "g.Node"),), "def f(n): ...", False, "g")
    model = ApiModel("g", types={"g.Node": node}, methods=(m,))
    plan = plan_instantiation(m, empty_spec(m), build_tdg(model, depth_bound=2), model, None)
    (root,) = plan.roots
    assert root.kind == CONSTRUCTOR and root.children[0].kind == CONSTRUCTOR
    inner = root.children[0].children[0]
    assert inner.kind == EXTERNAL_OPAQUE and inner.truncated and plan.truncated
    assert inner.name == "n_nxt_nxt"


def test_unparsable_selection_falls_back(model):
    gw = _stub({"stage": "SELECT", "text": "no idea"})
    m = model.method(POW)
    plan = plan_instantiation(m, empty_spec(m), build_tdg(model), model, gw)
    z = plan.roots[0]
    assert z.fallback and z.signature_text == "Apcomplex(value: str)"


def test_fallback_prefers_fewest_reference_params():
    cands = [_ctor("t.A", ("b", "t.B")), _ctor("t.A", ("x", "int"), ("y", "str")), _ctor("t.A", ("s", "str"))]
    assert fallback_choice(cands) == 2


def test_type_without_constructors_fails():
    m = MethodUnderTest("g", "f", (ParameterDescriptor("x", "g.A"),), "def f(x): ...", False, "g")
    model = ApiModel("g", types={"g.A": TypeDescriptor("g.A")}, methods=(m,))
    with pytest.raises(PlanFailure):
        plan_instantiation(m, empty_spec(m), build_tdg(model), model, None)


def test_spec_must_match_method(model):
    with pytest.raises(ValueError):
        plan_instantiation(model.method(POW), PartitionSpec("x::y", 1, (), "r"), build_tdg(model), model, None)


def test_call_count_invariant_on_random_models():
    rng = random.Random(11)
    checked = 0
    for _ in range(150):
        lib, roots = random_model(rng, max_nodes=8)
        params = tuple(ParameterDescriptor(f"x{i}", r) for i, r in enumerate(roots))
        m = MethodUnderTest("g", "f", params, "def f(): ...", False, "g")
        model = ApiModel("g", types=lib.types, methods=(m,))
        tdg = build_tdg(model, depth_bound=3)
        gw = _stub({"stage": "SELECT", "text": f"ANSWER: {rng.randint(1, 3)}"})
        try:
            plan = plan_instantiation(m, empty_spec(m), tdg, model, gw)
        except PlanFailure:
            continue
        multi = [n for n in plan.constructor_nodes() if len(constructor_candidates(tdg, model, n.type_fqn)) >= 2]
        assert plan.gateway_calls == len(multi) == len(gw.usage)
        assert all(n.depth() <= 3 for n in plan.roots)
        checked += 1
    assert checked > 50
