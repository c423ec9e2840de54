"""Exception triage and metric aggregation on hand-made data."""

from ispgen.executor import ExceptionEvent, ExecutionRecord
from ispgen.llm_gateway import PriceTable, TokenUsage, estimate_cost
from ispgen.triage import compute_metrics, dedupe, filter_exceptions, render_text

declared = {"lib.num::parse": ({"ValueError"}, {"ArithmeticError"})}
events = [
    ExceptionEvent("ValueError", "bad digit", ("lib.num", "parse", 12), True, "lib.num::parse"),
    ExceptionEvent("ZeroDivisionError", "x / 0", ("lib.num", "parse", 20), True, "lib.num::parse"),
    ExceptionEvent("IndexError", "list index", ("lib.num", "parse", 31), True, "lib.num::parse"),
    ExceptionEvent("IndexError", "list index", ("lib.num", "parse", 31), True, "lib.num::parse"),
]
report = filter_exceptions(events, declared)
print("documented:", len(report.rule1_filtered), " declared:", len(report.rule2_filtered),
      " kept:", len(report.kept), " unique kept:", len(dedupe(report.kept)))

# The overall row adds raw counts; it is not a mean of the per-library ratios
records = [
    ExecutionRecord("a.m::f", i, "ok", run_status="ok", covered_edges=frozenset(e), library="a")
    for i, e in enumerate([{"a0", "a1", "a2", "a3", "a4", "a5", "a6"}, {"a7"}, {"a8"}, {"a9"}], 1)
]
records.append(ExecutionRecord("b.m::g", 1, "ok", run_status="ok",
                               covered_edges=frozenset(f"b{i}" for i in range(5)), library="b"))
records.append(ExecutionRecord("b.m::g", 2, "failed", diagnostics=["undefined name 'q'"], library="b"))
table = compute_metrics(records, {"a": TokenUsage(120_000, 9_000), "b": TokenUsage(40_000, 3_000)},
                        {"a": 1, "b": 1})
print(render_text(table, report))

print(f"{estimate_cost(TokenUsage(66_952_785, 6_240_207), PriceTable(0.50, 1.50)):.4f} USD")
