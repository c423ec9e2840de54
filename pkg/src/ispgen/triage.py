"""False-positive filtering of captured exceptions, deduplication, and metric tables."""

from __future__ import annotations

import builtins
import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .api_model import ApiModel
from .executor import ExceptionEvent, ExecutionRecord
from .llm_gateway import PriceTable, TokenUsage, estimate_cost

log = logging.getLogger(__name__)

UNDEFINED = "n/a"
MODES = ("full", "no_tda", "no_isp", "baseline", "cg")


# -- exception filtering ------------------------------------------------------------


def exception_ancestors(fqn: str, model: ApiModel | None = None) -> set[str]:
    """``fqn`` and every supertype known from the model or the builtin hierarchy."""
    seen: set[str] = set()
    stack = [fqn]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        t = model.types.get(cur) if model is not None else None
        if t is not None:
            stack.extend(t.supertypes)
        builtin = getattr(builtins, cur, None) if "." not in cur else None
        if isinstance(builtin, type) and issubclass(builtin, BaseException):
            stack.extend(k.__name__ for k in builtin.__mro__[1:] if k is not object)
    return seen


def make_matcher(model: ApiModel | None = None) -> Callable[[str, Iterable[str]], bool]:
    cache: dict[str, set[str]] = {}

    def matches(fqn: str, declared: Iterable[str]) -> bool:
        if fqn not in cache:
            cache[fqn] = exception_ancestors(fqn, model)
        return any(d in cache[fqn] for d in declared)

    return matches


@dataclass
class TriageReport:
    captured: list[ExceptionEvent] = field(default_factory=list)
    rule1_filtered: list[ExceptionEvent] = field(default_factory=list)
    rule2_filtered: list[ExceptionEvent] = field(default_factory=list)
    kept: list[ExceptionEvent] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def per_type_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(e.exception_fqn for e in self.kept).items()))

    def to_dict(self) -> dict:
        unique = dedupe(self.kept)
        return {
            "counts": {
                "captured": len(self.captured),
                "rule1_doc_declared": len(self.rule1_filtered),
                "rule2_signature_declared": len(self.rule2_filtered),
                "kept": len(self.kept),
                "unique_kept": len(unique),
            },
            "per_type_counts": self.per_type_counts,
            "kept": [e.to_dict() for e in self.kept],
            "unique_kept": [e.to_dict() for e in unique],
            "rule1_filtered": [e.to_dict() for e in self.rule1_filtered],
            "rule2_filtered": [e.to_dict() for e in self.rule2_filtered],
            "diagnostics": list(self.diagnostics),
        }


def filter_exceptions(
    events: Sequence[ExceptionEvent],
    declared: Mapping[str, tuple[Iterable[str], Iterable[str]]],
    model: ApiModel | None = None,
) -> TriageReport:
    """Split events into doc-declared, then signature-declared, then kept.

    ``declared`` maps a method id to its (doc set, signature set). Events of
    unknown methods are kept, with a diagnostic.
    """
    matches = make_matcher(model)
    report = TriageReport(captured=list(events))
    for e in events:
        sets = declared.get(e.method_id)
        if sets is None:
            report.diagnostics.append(f"event for unknown method {e.method_id!r} kept")
            report.kept.append(e)
            continue
        doc, sig = sets
        if matches(e.exception_fqn, doc):
            report.rule1_filtered.append(e)
        elif matches(e.exception_fqn, sig):
            report.rule2_filtered.append(e)
        else:
            report.kept.append(e)
    return report


def declared_sets(model: ApiModel) -> dict[str, tuple[frozenset[str], frozenset[str]]]:
    return {
        m.method_id: (m.doc_declared_exceptions, m.signature_declared_exceptions) for m in model.methods
    }


def dedupe(events: Iterable[ExceptionEvent]) -> list[ExceptionEvent]:
    """First event per (method, exception type, top frame)."""
    seen: set[tuple] = set()
    out = []
    for e in events:
        key = (e.method_id, e.exception_fqn, tuple(e.top_frame))
        if key not in seen:
            seen.add(key)
            out.append(e)
    return out


# -- metrics --------------------------------------------------------------------------


@dataclass
class MetricsRow:
    library: str
    mode: str = "full"
    n_api: int = 0
    n_records: int = 0
    n_input: int = 0
    n_edge: int = 0
    n_edge_universe: int = 0
    compile_failures: int = 0
    compile_ms: int = 0
    run_ms: int = 0
    llm_ms: int = 0
    tokens_in: int = 0
    tokens_out: int = 0
    cost: float = 0.0
    n_api_failed: int = 0
    n_exceptions: int = 0

    @property
    def edge_per_input(self) -> float | None:
        return self.n_edge / self.n_input if self.n_input > 0 else None

    @property
    def invalid_input_ratio(self) -> float | None:
        return self.compile_failures / self.n_records if self.n_records > 0 else None

    @property
    def coverage(self) -> float | None:
        return self.n_edge / self.n_edge_universe if self.n_edge_universe > 0 else None

    @property
    def time_ms(self) -> int:
        return self.compile_ms + self.run_ms + self.llm_ms

    def to_dict(self, timings: bool = True) -> dict:
        d = {
            "library": self.library,
            "mode": self.mode,
            "n_api": self.n_api,
            "n_api_failed": self.n_api_failed,
            "n_records": self.n_records,
            "n_input": self.n_input,
            "n_edge": self.n_edge,
            "n_edge_universe": self.n_edge_universe,
            "edge_per_input": _num(self.edge_per_input),
            "coverage": _num(self.coverage),
            "compile_failures": self.compile_failures,
            "invalid_input_ratio": _num(self.invalid_input_ratio),
            "n_exceptions": self.n_exceptions,
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
            "cost": round(self.cost, 7),
        }
        if timings:
            d.update(compile_ms=self.compile_ms, run_ms=self.run_ms, llm_ms=self.llm_ms, time_ms=self.time_ms)
        return d


def _num(value: float | None, digits: int = 6) -> float | str:
    return UNDEFINED if value is None else round(value, digits)


@dataclass
class MetricsTable:
    rows: list[MetricsRow]
    overall: MetricsRow
    mode: str = "full"

    def row(self, library: str) -> MetricsRow:
        for r in self.rows:
            if r.library == library:
                return r
        raise KeyError(library)

    def to_dict(self, timings: bool = True) -> dict:
        return {
            "mode": self.mode,
            "libraries": [r.to_dict(timings) for r in self.rows],
            "overall": self.overall.to_dict(timings),
        }


def library_of(method_id: str) -> str:
    return method_id.split("::", 1)[0].split(".", 1)[0]


def compute_metrics(
    records: Iterable[ExecutionRecord],
    usage: Mapping[str, TokenUsage] | None = None,
    selection_report: Mapping[str, int] | None = None,
    *,
    failed_apis: Mapping[str, int] | None = None,
    universe: Mapping[str, int] | None = None,
    llm_ms: Mapping[str, int] | None = None,
    price_table: PriceTable | None = None,
    mode: str = "full",
) -> MetricsTable:
    """Per-library rows plus an overall row aggregated from raw counts.

    ``usage`` maps library to token usage, ``selection_report`` maps library
    to the number of methods under test, ``failed_apis`` to the number of
    methods that produced no driver, ``universe`` to the edge-table size.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    usage = usage or {}
    apis = selection_report or {}
    failed_apis = failed_apis or {}
    universe = universe or {}
    llm_ms = llm_ms or {}
    price_table = price_table or PriceTable()

    by_lib: dict[str, list[ExecutionRecord]] = {}
    for r in records:
        by_lib.setdefault(r.library or library_of(r.method_id), []).append(r)
    libraries = sorted(set(by_lib) | set(usage) | set(apis) | set(failed_apis) | set(universe))

    rows: list[MetricsRow] = []
    all_edges: set[tuple[str, str]] = set()
    for lib in libraries:
        recs = by_lib.get(lib, [])
        edges: set[str] = set()
        row = MetricsRow(lib, mode)
        for r in recs:
            row.n_records += 1
            if r.compile_status == "failed":
                row.compile_failures += 1
            if r.is_input:
                row.n_input += 1
            if r.run_status == "exception":
                row.n_exceptions += 1
            edges |= r.covered_edges
            row.compile_ms += r.compile_ms
            row.run_ms += r.wall_ms
        all_edges |= {(lib, e) for e in edges}
        row.n_edge = len(edges)
        u = usage.get(lib, TokenUsage())
        row.tokens_in, row.tokens_out = u.input_tokens, u.output_tokens
        row.cost = estimate_cost(u, price_table)
        row.n_api = apis.get(lib, 0)
        row.n_api_failed = failed_apis.get(lib, 0)
        row.n_edge_universe = universe.get(lib, 0)
        row.llm_ms = llm_ms.get(lib, 0)
        rows.append(row)

    overall = MetricsRow("overall", mode)
    for row in rows:
        for name in (
            "n_api", "n_records", "n_input", "n_edge_universe", "compile_failures", "compile_ms",
            "run_ms", "llm_ms", "tokens_in", "tokens_out", "n_api_failed", "n_exceptions",
        ):
            setattr(overall, name, getattr(overall, name) + getattr(row, name))
    overall.n_edge = len(all_edges)
    overall.cost = estimate_cost(TokenUsage(overall.tokens_in, overall.tokens_out), price_table)
    return MetricsTable(rows, overall, mode)


def mode_report(table: MetricsTable, mode: str, calls_by_stage: Mapping[str, int] | None = None) -> dict:
    """Metrics tagged with the pipeline mode, plus the per-stage prompt counts."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    for row in table.rows + [table.overall]:
        row.mode = mode
    table.mode = mode
    out = {"mode": mode, "metrics": table.to_dict(timings=False)}
    if calls_by_stage is not None:
        out["calls_by_stage"] = dict(sorted(calls_by_stage.items()))
    return out


# -- rendering ---------------------------------------------------------------------------


_TEXT_COLUMNS = (
    ("Library", lambda r: r.library),
    ("#API", lambda r: str(r.n_api)),
    ("#Input", lambda r: str(r.n_input)),
    ("#Edge", lambda r: str(r.n_edge)),
    ("#Edge/#Input", lambda r: _fmt(r.edge_per_input, 3)),
    ("Coverage", lambda r: _fmt(r.coverage, 3)),
    ("#API Failed", lambda r: f"{r.n_api_failed} / {r.n_api}"),
    ("#Invalid Input", lambda r: _pct(r.invalid_input_ratio)),
    ("#Token In", lambda r: str(r.tokens_in)),
    ("#Token Out", lambda r: str(r.tokens_out)),
    ("#Cost", lambda r: f"{r.cost:.7f}"),
    ("Compile ms", lambda r: str(r.compile_ms)),
    ("Run ms", lambda r: str(r.run_ms)),
    ("LLM ms", lambda r: str(r.llm_ms)),
)


def _fmt(value: float | None, digits: int) -> str:
    return UNDEFINED if value is None else f"{value:.{digits}f}"


def _pct(value: float | None) -> str:
    return UNDEFINED if value is None else f"{value * 100:.2f}%"


def render_text(table: MetricsTable, triage: TriageReport | None = None) -> str:
    rows = table.rows + [table.overall]
    cells = [[name for name, _ in _TEXT_COLUMNS]] + [[f(r) for _, f in _TEXT_COLUMNS] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(_TEXT_COLUMNS))]
    lines = [f"Mode: {table.mode}"]
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if j == 0 else c.rjust(w) for j, (c, w) in enumerate(zip(row, widths))))
        if i == 0 or i == len(cells) - 2:
            lines.append("  ".join("-" * w for w in widths))
    if triage is not None:
        d = triage.to_dict()["counts"]
        lines.append("")
        lines.append(
            "Exceptions: captured {captured} -> doc-declared {rule1_doc_declared} -> "
            "signature-declared {rule2_signature_declared} -> kept {kept} ({unique_kept} unique)".format(**d)
        )
        for fqn, n in triage.per_type_counts.items():
            lines.append(f"  {fqn}: {n}")
    return "\n".join(lines) + "\n"


def render_csv(table: MetricsTable) -> str:
    buf = io.StringIO()
    rows = [r.to_dict(timings=True) for r in table.rows + [table.overall]]
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def dumps_json(data: object) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
