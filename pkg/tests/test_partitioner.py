from __future__ import annotations

import pytest
from hypothesis import given, settings

from ispgen.llm_gateway import GatewayConfig, LLMGateway, StubResponses
from ispgen.partitioner import (
    ANSWER_MARKER,
    PartitionParseError,
    build_isp_prompt,
    empty_spec,
    parse_partitions,
    partition,
    render_partitions,
)

from conftest import MOD_POW, POW
from strategies import methods_and_specs

QUOTED = (
    "(1) z: real part is non-negative and imaginary part is 0; w: is an Apcomplex number. "
    "(2) z: real part is negative or imaginary part is non-zero; w: is an Apcomplex number"
)


def _gateway(*texts):
    return LLMGateway(GatewayConfig(mode="stub"), stub=StubResponses([{"stage": "ISP", "texts": list(texts)}]))


def test_quoted_example_gives_two_specs(model):
    specs = parse_partitions(model.method(POW), QUOTED)
    assert [s.index for s in specs] == [1, 2]
    assert [p for p, _ in specs[0].per_param_constraints] == ["z", "w"]
    assert specs[0].constraint_for("z") == "real part is non-negative and imaginary part is 0"
    assert specs[1].constraint_for("w") == "is an Apcomplex number"
    assert specs[0].unmatched == ()


@pytest.mark.parametrize("text", ["", "no list here", "PARTITIONS:\n"])
def test_missing_items_fail(model, text):
    with pytest.raises(PartitionParseError):
        parse_partitions(model.method(POW), text)


def test_duplicate_index_fails(model):
    with pytest.raises(PartitionParseError, match="duplicate"):
        parse_partitions(model.method(POW), "(1) z: a\n(1) z: b\n")


def test_unmatched_segments_are_kept(model):
    (spec,) = parse_partitions(model.method(POW), "(1) z: zero; the result is 1; q: nope")
    assert spec.per_param_constraints == (("z", "zero"),)
    assert spec.unmatched == ("the result is 1", "q: nope")


def test_identical_raw_items_collapse(model):
    specs = parse_partitions(model.method(POW), "(1) z: zero\n(2) z: zero\n(3) z: one\n")
    assert [s.index for s in specs] == [1, 3]


def test_receiver_is_a_parameter(model):
    (spec,) = parse_partitions(model.method(MOD_POW), "1. receiver: modulus 7; a: 2; n: -1")
    assert [p for p, _ in spec.per_param_constraints] == ["receiver", "a", "n"]


def test_prompt_contents(model, library):
    pow_ = model.method(POW)
    plain = build_isp_prompt(pow_)
    assert "input space partitioning" in plain.system_text
    assert pow_.source.rstrip() in plain.user_text
    assert "numbered" in plain.system_text and ";" in plain.system_text
    callees = library.callee_sources(pow_)
    cg = build_isp_prompt(pow_, "with_callees", callees)
    assert len(cg.user_text) > len(plain.user_text)
    assert all(src.rstrip() in cg.user_text for src in callees)
    assert build_isp_prompt(pow_, "with_callees", []).user_text == plain.user_text
    with pytest.raises(ValueError):
        build_isp_prompt(pow_, "fancy")


def test_stub_fixture_gives_six_pow_partitions(model, stub_gateway):
    outcome = partition(model.method(POW), stub_gateway)
    assert len(outcome.specs) == 6 and outcome.retries == 0 and not outcome.failed
    assert outcome.specs[0].constraint_for("z") == "real part is non-negative and imaginary part is 0"


def test_garbage_twice_marks_failed(model):
    gw = _gateway("I cannot help", "still nothing")
    outcome = partition(model.method(POW), gw)
    assert outcome.failed and outcome.specs == [] and outcome.retries == 1
    assert gw.calls_by_stage()["ISP"] == 2
    assert len(set(outcome.prompt_hashes)) == 2


def test_valid_second_answer_counts_one_retry(model):
    outcome = partition(model.method(POW), _gateway("hmm", QUOTED))
    assert not outcome.failed and outcome.retries == 1 and len(outcome.specs) == 2


def test_empty_spec():
    from ispgen.api_model import MethodUnderTest

    spec = empty_spec(MethodUnderTest("m", "f", (), "def f(): ...", False, "m"))
    assert spec.index == 1 and spec.per_param_constraints == () and spec.raw_text


@settings(max_examples=100, deadline=None)
@given(methods_and_specs())
def test_render_parse_round_trip(case):
    method, specs = case
    text = render_partitions(specs)
    assert text.startswith(ANSWER_MARKER)
    parsed = parse_partitions(method, "Some reasoning first.\n" + text)
    assert [(s.index, s.per_param_constraints) for s in parsed] == [
        (s.index, s.per_param_constraints) for s in specs
    ]
