from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ispgen.api_model import ApiModel, TypeDescriptor
from ispgen.executor import ExceptionEvent, ExecutionRecord
from ispgen.llm_gateway import PriceTable, TokenUsage
from ispgen.triage import (
    UNDEFINED,
    compute_metrics,
    declared_sets,
    dedupe,
    dumps_json,
    exception_ancestors,
    filter_exceptions,
    library_of,
    mode_report,
    render_csv,
    render_text,
)


def _event(fqn, method="m::f", frame=("m", "f", 1)):
    return ExceptionEvent(fqn, "", frame, True, method, 1)


def _record(lib, edges=(), status="ok", compile_status="ok", mid=None):
    return ExecutionRecord(
        mid or f"{lib}.mod::f", 1, compile_status,
        run_status=None if compile_status == "failed" else status,
        covered_edges=frozenset(edges), library=lib,
    )


def test_rule_order_prefers_doc_set():
    report = filter_exceptions([_event("ValueError")], {"m::f": ({"ValueError"}, {"ValueError"})})
    assert len(report.rule1_filtered) == 1 and report.rule2_filtered == [] and report.kept == []


def test_empty_events():
    report = filter_exceptions([], {})
    assert report.to_dict()["counts"] == {
        "captured": 0, "rule1_doc_declared": 0, "rule2_signature_declared": 0, "kept": 0, "unique_kept": 0,
    }


def test_unknown_method_is_kept_with_diagnostic():
    report = filter_exceptions([_event("KeyError", method="x::y")], {"m::f": (set(), set())})
    assert len(report.kept) == 1 and "x::y" in report.diagnostics[0]


def test_subtypes_match_declared_supertypes():
    model = ApiModel("lib", types={
        "lib.errors.Base": TypeDescriptor("lib.errors.Base", supertypes=("ValueError",)),
        "lib.errors.Leaf": TypeDescriptor("lib.errors.Leaf", supertypes=("lib.errors.Base",)),
    })
    assert {"lib.errors.Base", "ValueError", "Exception", "BaseException"} <= exception_ancestors("lib.errors.Leaf", model)
    declared = {"m::f": (set(), {"ArithmeticError", "lib.errors.Base"})}
    events = [_event("ZeroDivisionError"), _event("lib.errors.Leaf"), _event("KeyError")]
    report = filter_exceptions(events, declared, model)
    assert [e.exception_fqn for e in report.rule2_filtered] == ["ZeroDivisionError", "lib.errors.Leaf"]
    assert [e.exception_fqn for e in report.kept] == ["KeyError"]


def test_corpus_declared_sets(model):
    sets = declared_sets(model)
    assert sets["apfloat.apcomplex_math::pow"] == (frozenset(), frozenset({"ArithmeticError"}))


def test_dedupe():
    assert len(dedupe([_event("E"), _event("E")])) == 1
    assert len(dedupe([_event("E", frame=("m", "f", 1)), _event("E", frame=("m", "f", 2))])) == 2
    keys = [("A", 1), ("A", 1), ("A", 2), ("B", 1), ("B", 1), ("C", 1), ("C", 3), ("D", 1), ("D", 1), ("E", 9)]
    events = [_event(k, frame=("m", "f", line)) for k, line in keys]
    unique = dedupe(events)
    assert len(unique) == 7 and unique[0] is events[0]


def test_two_libraries_aggregate_raw_counts():
    records = [_record("a", [f"a#{i}" for i in range(7)])] + [_record("a", [f"a#{i}"]) for i in range(7, 10)]
    records += [_record("b", [f"b#{i}" for i in range(5)])]
    table = compute_metrics(records)
    assert table.row("a").n_edge == 10 and table.row("a").edge_per_input == 2.5
    assert table.row("b").edge_per_input == 5.0
    assert table.overall.edge_per_input == 3.0


def test_zero_inputs_are_undefined():
    table = compute_metrics([_record("a", compile_status="failed")], selection_report={"a": 1})
    assert table.overall.edge_per_input is None
    assert table.to_dict()["overall"]["edge_per_input"] == UNDEFINED
    assert table.overall.invalid_input_ratio == 1.0
    assert compute_metrics([]).overall.to_dict()["invalid_input_ratio"] == UNDEFINED


def test_crash_is_not_an_input_but_timeout_is():
    table = compute_metrics([_record("a", status="crash"), _record("a", status="timeout")])
    assert table.overall.n_input == 1 and table.overall.compile_failures == 0


def test_costs_and_unknown_mode():
    table = compute_metrics([], usage={"a": TokenUsage(2_000_000, 1_000_000)}, price_table=PriceTable(0.5, 1.5))
    assert table.row("a").cost == pytest.approx(2.5) and table.overall.cost == pytest.approx(2.5)
    with pytest.raises(ValueError):
        compute_metrics([], mode="turbo")


def test_reports_render(model):
    table = compute_metrics([_record("a", ["a#0", "a#1"])], selection_report={"a": 1}, universe={"a": 4})
    report = mode_report(table, "no_isp", {"ISP": 0, "SELECT": 2})
    assert report["mode"] == "no_isp" and report["metrics"]["overall"]["coverage"] == 0.5
    assert "wall_ms" not in json.dumps(report) and "run_ms" not in json.dumps(report)
    text = render_text(table, filter_exceptions([_event("E")], {}))
    assert "#Edge/#Input" in text and "2.000" in text
    csv_text = render_csv(table)
    assert csv_text.splitlines()[0].startswith("library,") and len(csv_text.splitlines()) == 3
    assert dumps_json({"b": 1, "a": 2}).index('"a"') < dumps_json({"b": 1, "a": 2}).index('"b"')


def test_library_of():
    assert library_of("apfloat.core.Apcomplex::pow") == "apfloat"
    assert library_of("lang::f") == "lang"


# -- properties ----------------------------------------------------------------------

_names = st.sampled_from(["ValueError", "KeyError", "IndexError", "ArithmeticError", "ZeroDivisionError", "lib.Err"])
_methods = st.sampled_from(["m::f", "m::g", "n::h"])
_events = st.builds(
    lambda fqn, mid, line: _event(fqn, mid, ("m", "f", line)), _names, _methods, st.integers(1, 3)
)
_declared = st.fixed_dictionaries({
    mid: st.tuples(st.sets(_names, max_size=2), st.sets(_names, max_size=2)) for mid in ("m::f", "m::g")
})


@given(st.lists(_events, max_size=40), _declared)
def test_triage_buckets_partition_the_events(events, declared):
    report = filter_exceptions(events, declared)
    buckets = [report.rule1_filtered, report.rule2_filtered, report.kept]
    assert sum(map(len, buckets)) == len(report.captured) == len(events)
    ids = [id(e) for b in buckets for e in b]
    assert len(set(ids)) == len(ids)


_records = st.lists(
    st.builds(
        lambda lib, edges, status, failed: _record(
            lib, () if failed else edges, status, "failed" if failed else "ok"
        ),
        st.sampled_from(["a", "b", "c"]),
        st.sets(st.sampled_from([f"e{i}" for i in range(8)]), max_size=5),
        st.sampled_from(["ok", "exception", "timeout", "crash"]),
        st.booleans(),
    ),
    max_size=30,
)


@settings(deadline=None)
@given(_records, st.randoms())
def test_metrics_permutation_invariant_and_union_bounded(records, rnd):
    table = compute_metrics(records)
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert compute_metrics(shuffled).to_dict() == table.to_dict()
    assert table.overall.n_edge <= sum(r.n_edge for r in table.rows)
    assert table.overall.n_input == sum(r.n_input for r in table.rows)
