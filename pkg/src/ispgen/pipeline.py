"""End-to-end orchestration: extract, partition, select, instantiate, execute, report."""

from __future__ import annotations

import json
import logging
import shutil
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from . import api_model
from .api_model import ApiModel, MethodUnderTest
from .executor import DEFAULT_TIMEOUT_S, ExecutionRecord, LibraryBuild, execute, instrument
from .frontend import (
    Diagnostic,
    LibrarySource,
    SelectionReport,
    collect_callee_sources,
    extract_api_model,
    iter_kept,
    select_methods,
)
from .instantiator import DriverSource, TemplateError, baseline_generate, instantiate, load_template
from .llm_gateway import GatewayConfig, GatewayError, LLMGateway, PriceTable, TokenUsage, usage_to_dict
from .partitioner import PartitionSpec, empty_spec, partition
from .selector import InstantiationPlan, PlanFailure, plan_instantiation
from .tdg import DEFAULT_DEPTH_BOUND, build_tdg
from .triage import (
    MODES,
    TriageReport,
    compute_metrics,
    declared_sets,
    dumps_json,
    filter_exceptions,
    library_of,
    mode_report,
    render_csv,
    render_text,
)

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    source_root: str
    out_dir: str
    mode: str = "full"
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    depth_bound: int = DEFAULT_DEPTH_BOUND
    timeout_s: float = DEFAULT_TIMEOUT_S
    workers: int = 1
    price_table: PriceTable = field(default_factory=PriceTable)
    template_path: str | None = None
    csv: bool = False

    def __post_init__(self) -> None:
        self.mode = self.mode.replace("-", "_")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.depth_bound < 1:
            raise ValueError("depth_bound must be >= 1")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


def slug(method_id: str) -> str:
    return method_id.replace("::", "__").replace(":", "_")


@dataclass
class MethodResult:
    method_id: str
    partitions: int = 0
    drivers: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.drivers == 0


@dataclass
class RunResult:
    model: ApiModel
    selection: SelectionReport
    records: list[ExecutionRecord]
    triage: TriageReport
    report: dict
    calls_by_stage: dict[str, int]
    internal_errors: list[str]
    build: LibraryBuild | None
    out_dir: Path
    network_requests: int = 0

    @property
    def ok(self) -> bool:
        return not self.internal_errors


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def extract(source_root: str | Path, out_dir: str | Path | None = None) -> tuple[ApiModel, SelectionReport, list[Diagnostic]]:
    diagnostics: list[Diagnostic] = []
    model = extract_api_model(source_root, diagnostics)
    selection = select_methods(model)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        api_model.store(model, out / "model.json")
        _write(out / "selection.json", dumps_json(selection.to_dict()))
        _write(out / "diagnostics.txt", "".join(f"{d}\n" for d in diagnostics))
    return model, selection, diagnostics


class _Generator:
    def __init__(self, config: RunConfig, model: ApiModel, gateway: LLMGateway, library: LibrarySource):
        self.config = config
        self.model = model
        self.gateway = gateway
        self.library = library
        self.template = load_template(config.template_path)
        self.internal_errors: list[str] = []
        self.drivers: list[tuple[DriverSource, Path, str]] = []
        self.results: dict[str, MethodResult] = {}
        self.tdg = None

    def run(self, methods: list[MethodUnderTest]) -> None:
        if self.config.mode != "baseline":
            self.tdg = build_tdg(self.model, self.config.depth_bound, methods)
        for m in methods:
            result = MethodResult(m.method_id)
            self.results[m.method_id] = result
            try:
                self._method(m, result)
            except (GatewayError, TemplateError) as exc:
                msg = f"{m.method_id}: {type(exc).__name__}: {exc}"
                log.error(msg)
                self.internal_errors.append(msg)
                result.failures.append(msg)

    def _dir(self, method: MethodUnderTest, index: int) -> Path:
        return Path(self.config.out_dir) / "drivers" / slug(method.method_id) / str(index)

    def _keep(self, method: MethodUnderTest, driver: DriverSource, result: MethodResult) -> None:
        work = self._dir(method, driver.partition_index)
        _write(work / "driver.json", dumps_json(driver.to_dict()))
        self.drivers.append((driver, work, library_of(method.method_id)))
        result.drivers += 1

    def _method(self, m: MethodUnderTest, result: MethodResult) -> None:
        mode = self.config.mode
        if mode == "baseline":
            outcome = baseline_generate(m, self.gateway, self.template)
            result.partitions = 1
            if outcome.driver is None:
                result.failures.append(f"baseline: {outcome.error}")
            else:
                self._keep(m, outcome.driver, result)
            return

        if mode == "no_isp":
            specs = [empty_spec(m)]
        else:
            callees: list[str] = []
            if mode == "cg":
                callees = collect_callee_sources(m, self.library)
            p = partition(m, self.gateway, "with_callees" if mode == "cg" else "plain", callees)
            _write(
                Path(self.config.out_dir) / "drivers" / slug(m.method_id) / "partitions.json",
                dumps_json(p.to_dict()),
            )
            if p.failed:
                result.failures.append(f"partitioning: {p.error}")
                return
            specs = p.specs
        result.partitions = len(specs)
        for spec in specs:
            self._partition(m, spec, result)

    def _partition(self, m: MethodUnderTest, spec: PartitionSpec, result: MethodResult) -> None:
        work = self._dir(m, spec.index)
        _write(work / "spec.json", dumps_json(spec.to_dict()))
        plan: InstantiationPlan | None = None
        if self.config.mode != "no_tda":
            assert self.tdg is not None
            try:
                plan = plan_instantiation(m, spec, self.tdg, self.model, self.gateway)
            except PlanFailure as exc:
                result.failures.append(f"partition {spec.index}: plan failure: {exc}")
                return
            _write(work / "plan.json", dumps_json(plan.to_dict()))
        outcome = instantiate(m, spec, plan, self.gateway, self.template)
        _write(work / "instantiation.json", dumps_json(outcome.to_dict()))
        if outcome.driver is None:
            result.failures.append(f"partition {spec.index}: {outcome.error}")
            return
        self._keep(m, outcome.driver, result)


def run_pipeline(config: RunConfig, gateway: LLMGateway | None = None) -> RunResult:
    """Run every stage for the configured mode and write all artifacts under ``out_dir``."""
    out = Path(config.out_dir)
    for stale in ("drivers", "build"):
        if (out / stale).exists():
            shutil.rmtree(out / stale)
    model, selection, diagnostics = extract(config.source_root, out)
    gateway = gateway or LLMGateway(config.gateway)
    methods = list(iter_kept(model, selection))
    library = LibrarySource(config.source_root)

    gen = _Generator(config, model, gateway, library)
    gen.run(methods)

    build = instrument(config.source_root, methods, out / "build")
    build.write_edge_table(out / "edge_table.json")
    records = execute(gen.drivers, build, config.timeout_s, config.workers)

    failed_apis: dict[str, int] = {}
    for r in gen.results.values():
        if r.failed:
            lib = library_of(r.method_id)
            failed_apis[lib] = failed_apis.get(lib, 0) + 1
    state = {
        "mode": config.mode,
        "methods": {mid: asdict(r) for mid, r in sorted(gen.results.items())},
        "failed_apis": dict(sorted(failed_apis.items())),
        "calls_by_stage": gateway.calls_by_stage(),
        "internal_errors": gen.internal_errors,
        "instrumentation_diagnostics": build.diagnostics,
        "edge_table": build.edge_table_dict(),
        "price_table": asdict(config.price_table),
    }
    _write(out / "run.json", dumps_json(state))
    _write(out / "usage.json", dumps_json(usage_to_dict(gateway.usage)))
    _write(out / "records.json", dumps_json([r.to_dict() for r in records]))

    triage, report = write_reports(out, model, selection, records, state, gateway_usage(gateway), csv=config.csv)
    requests = getattr(gateway.transport, "requests", 0)
    _write(out / "network.json", dumps_json({"gateway_mode": gateway.config.mode, "network_requests": requests}))
    return RunResult(
        model, selection, records, triage, report, gateway.calls_by_stage(), gen.internal_errors, build, out, requests
    )


def gateway_usage(gateway: LLMGateway) -> list[dict]:
    return usage_to_dict(gateway.usage)


def write_reports(
    out: Path,
    model: ApiModel,
    selection: SelectionReport,
    records: list[ExecutionRecord],
    state: dict[str, Any],
    usage_entries: list[dict],
    csv: bool = False,
) -> tuple[TriageReport, dict]:
    """Compute triage and metrics and write report.json, report.txt, triage.json, timing.json."""
    usage: dict[str, TokenUsage] = {}
    llm_ms: dict[str, int] = {}
    for e in usage_entries:
        meta = dict(tuple(pair) for pair in e.get("meta", ()))
        lib = library_of(meta.get("method", "")) if meta.get("method") else ""
        usage[lib] = usage.get(lib, TokenUsage()) + TokenUsage(int(e["input_tokens"]), int(e["output_tokens"]))
        llm_ms[lib] = llm_ms.get(lib, 0) + int(e.get("latency_ms", 0))
    apis: dict[str, int] = {}
    for mid in selection.kept:
        lib = library_of(mid)
        apis[lib] = apis.get(lib, 0) + 1
    universe: dict[str, int] = {}
    for mid, edges in state.get("edge_table", {}).items():
        lib = library_of(mid)
        universe[lib] = universe.get(lib, 0) + len(edges)

    pt = state.get("price_table") or {}
    price_table = PriceTable(**pt) if pt else PriceTable()
    table = compute_metrics(
        records,
        usage,
        apis,
        failed_apis=state.get("failed_apis", {}),
        universe=universe,
        llm_ms=llm_ms,
        price_table=price_table,
        mode=state["mode"],
    )
    events = [r.exception for r in records if r.exception is not None]
    triage = filter_exceptions(events, declared_sets(model), model)

    report = mode_report(table, state["mode"], state.get("calls_by_stage"))
    report["triage"] = triage.to_dict()["counts"]
    report["exception_types"] = triage.per_type_counts
    report["api_failed"] = {
        mid: m["failures"] for mid, m in state.get("methods", {}).items() if m.get("drivers", 0) == 0
    }
    report["internal_errors"] = list(state.get("internal_errors", []))
    report["records"] = [r.to_dict(timings=False) for r in records]

    _write(out / "report.json", dumps_json(report))
    _write(out / "triage.json", dumps_json(triage.to_dict()))
    _write(out / "report.txt", render_text(table, triage))
    _write(out / "timing.json", dumps_json(table.to_dict(timings=True)))
    if csv:
        _write(out / "metrics.csv", render_csv(table))
    return triage, report


def report_from_dir(out_dir: str | Path, csv: bool = False) -> tuple[TriageReport, dict]:
    """Recompute reports from the artifacts of an earlier run."""
    out = Path(out_dir)
    missing = [n for n in ("model.json", "selection.json", "records.json", "run.json") if not (out / n).exists()]
    if missing:
        raise FileNotFoundError(f"{out} lacks {', '.join(missing)}")
    model = api_model.load(out / "model.json")
    selection = SelectionReport.from_dict(json.loads((out / "selection.json").read_text(encoding="utf-8")))
    records = [ExecutionRecord.from_dict(d) for d in json.loads((out / "records.json").read_text(encoding="utf-8"))]
    state = json.loads((out / "run.json").read_text(encoding="utf-8"))
    usage_path = out / "usage.json"
    usage_entries = json.loads(usage_path.read_text(encoding="utf-8")) if usage_path.exists() else []
    return write_reports(out, model, selection, records, state, usage_entries, csv=csv)


def replay_config(config: RunConfig, cache_dir: str) -> RunConfig:
    return replace(config, gateway=replace(config.gateway, mode="replay", cache_dir=cache_dir, stub_path=None))
