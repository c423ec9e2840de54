"""Instrument the library, compile drivers against it, and run them in child processes.

Coverage is gathered by rewriting the selected methods' syntax trees so that
each branch site reports which arm it took, then writing the result as a
sourceless ``.pyc`` next to nothing: the ``.py`` file is removed from the
build copy, so the instrumented bytecode is what the driver imports while
line numbers stay those of the original source.
"""

from __future__ import annotations

import ast
import builtins
import importlib.util
import json
import logging
import marshal
import os
import shutil
import signal
import subprocess
import sys
import symtable
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .api_model import MethodUnderTest
from .instantiator import DriverSource
from .sites import BranchSite, branch_sites

log = logging.getLogger(__name__)

RUNTIME_MODULE = "_ispgen_cov"
COVERAGE_ENV = "ISPGEN_COVERAGE_OUT"
REPORT_MARKER = "ISPGEN-EXCEPTION "
DEFAULT_TIMEOUT_S = 10.0

_RUNTIME_SOURCE = '''\
import atexit
import json
import os

_hits = set()


def cond(site, value):
    _hits.add((site, "true" if value else "false"))
    return value


def hit(site, arm):
    _hits.add((site, arm))


def iterate(site, iterable):
    for item in iterable:
        _hits.add((site, "true"))
        yield item
    _hits.add((site, "false"))


def _dump():
    path = os.environ.get("ISPGEN_COVERAGE_OUT")
    if path:
        with open(path, "w") as fh:
            json.dump(sorted(site + ":" + arm for site, arm in _hits), fh)


atexit.register(_dump)
'''

# Setup-phase errors that a static compiler would have reported.
_UNRESOLVED = {"NameError", "UnboundLocalError", "ImportError", "ModuleNotFoundError", "SyntaxError"}
_SIGNATURE_MISMATCH = {"TypeError", "AttributeError"}


# -- identities -----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class EdgeId:
    owner_fqn: str
    method: str
    ordinal: int
    arm: str

    @property
    def site_key(self) -> str:
        return f"{self.owner_fqn}::{self.method}#{self.ordinal}"

    @property
    def key(self) -> str:
        return f"{self.site_key}:{self.arm}"

    @property
    def method_id(self) -> str:
        return f"{self.owner_fqn}::{self.method}"

    @classmethod
    def parse(cls, key: str) -> "EdgeId":
        site, arm = key.rsplit(":", 1)
        mid, ordinal = site.rsplit("#", 1)
        owner, method = mid.split("::", 1)
        return cls(owner, method, int(ordinal), arm)


def edges_for(owner_fqn: str, method: str, sites: Sequence[BranchSite]) -> list[EdgeId]:
    return [EdgeId(owner_fqn, method, s.ordinal, arm) for s in sites for arm in s.arms]


@dataclass(frozen=True)
class ExceptionEvent:
    exception_fqn: str
    message: str
    top_frame: tuple[str, str, int]  # (owner, function, line)
    inside_library: bool
    method_id: str = ""
    partition_index: int = 0
    phase: str = "call"

    def __post_init__(self) -> None:
        if not self.exception_fqn:
            raise ValueError("exception_fqn must be non-empty")

    def to_dict(self) -> dict:
        return {
            "exception_fqn": self.exception_fqn,
            "message": self.message,
            "top_frame": list(self.top_frame),
            "inside_library": self.inside_library,
            "method_id": self.method_id,
            "partition_index": self.partition_index,
            "phase": self.phase,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExceptionEvent":
        owner, func, line = d["top_frame"]
        return cls(
            d["exception_fqn"],
            d.get("message", ""),
            (owner, func, int(line)),
            bool(d["inside_library"]),
            d.get("method_id", ""),
            int(d.get("partition_index", 0)),
            d.get("phase", "call"),
        )


@dataclass
class ExecutionRecord:
    method_id: str
    partition_index: int
    compile_status: str  # ok | failed
    diagnostics: list[str] = field(default_factory=list)
    run_status: str | None = None  # ok | exception | timeout | crash; None when not run
    exception: ExceptionEvent | None = None
    covered_edges: frozenset[str] = frozenset()
    wall_ms: int = 0
    compile_ms: int = 0
    library: str = ""

    def __post_init__(self) -> None:
        if self.compile_status not in ("ok", "failed"):
            raise ValueError(f"bad compile_status {self.compile_status!r}")
        if self.compile_status == "failed" and self.covered_edges:
            raise ValueError("a driver that failed to compile covers nothing")
        if self.wall_ms < 0 or self.compile_ms < 0:
            raise ValueError("durations must be non-negative")

    @property
    def is_input(self) -> bool:
        return self.compile_status == "ok" and self.run_status != "crash"

    def to_dict(self, timings: bool = True) -> dict:
        d = {
            "method_id": self.method_id,
            "partition_index": self.partition_index,
            "library": self.library,
            "compile_status": self.compile_status,
            "diagnostics": list(self.diagnostics),
            "run_status": self.run_status,
            "exception": self.exception.to_dict() if self.exception else None,
            "covered_edges": sorted(self.covered_edges),
        }
        if timings:
            d["wall_ms"] = self.wall_ms
            d["compile_ms"] = self.compile_ms
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExecutionRecord":
        return cls(
            method_id=d["method_id"],
            partition_index=int(d["partition_index"]),
            compile_status=d["compile_status"],
            diagnostics=list(d.get("diagnostics", [])),
            run_status=d.get("run_status"),
            exception=ExceptionEvent.from_dict(d["exception"]) if d.get("exception") else None,
            covered_edges=frozenset(d.get("covered_edges", [])),
            wall_ms=int(d.get("wall_ms", 0)),
            compile_ms=int(d.get("compile_ms", 0)),
            library=d.get("library", ""),
        )


# -- instrumentation --------------------------------------------------------------


def _runtime_call(func: str, *args: ast.expr) -> ast.Call:
    return ast.Call(
        func=ast.Attribute(value=ast.Name(RUNTIME_MODULE, ast.Load()), attr=func, ctx=ast.Load()),
        args=list(args),
        keywords=[],
    )


class _Instrumenter(ast.NodeTransformer):
    def __init__(self, site_prefix: str, sites: Sequence[BranchSite]):
        self.prefix = site_prefix
        self.by_node: dict[int, list[BranchSite]] = {}
        self.comp_ifs: dict[int, BranchSite] = {}
        for s in sites:
            if s.kind == "comp_if":
                self.comp_ifs[id(s.node)] = s
            else:
                self.by_node.setdefault(id(s.node), []).append(s)

    def _key(self, site: BranchSite) -> ast.Constant:
        return ast.Constant(f"{self.prefix}#{site.ordinal}")

    def _cond(self, site: BranchSite, expr: ast.expr) -> ast.expr:
        return ast.copy_location(_runtime_call("cond", self._key(site), expr), expr)

    def _hit(self, site: BranchSite, arm: str, like: ast.AST) -> ast.stmt:
        stmt = ast.Expr(_runtime_call("hit", self._key(site), ast.Constant(arm)))
        return ast.copy_location(stmt, like)

    def generic_visit(self, node: ast.AST) -> ast.AST:
        original_ifs = list(node.ifs) if isinstance(node, ast.comprehension) else []
        node = super().generic_visit(node)
        for site in self.by_node.get(id(node), ()):
            kind = site.kind
            if kind in ("if", "ifexp", "while"):
                node.test = self._cond(site, node.test)  # type: ignore[attr-defined]
            elif kind == "for":
                node.body.insert(0, self._hit(site, "true", node.body[0]))  # type: ignore[attr-defined]
                node.orelse.insert(0, self._hit(site, "false", node))  # type: ignore[attr-defined]
            elif kind == "boolop":
                values = node.values  # type: ignore[attr-defined]
                values[site.operand] = self._cond(site, values[site.operand])
            elif kind == "comp_for":
                it = node.iter  # type: ignore[attr-defined]
                node.iter = ast.copy_location(_runtime_call("iterate", self._key(site), it), it)  # type: ignore[attr-defined]
            elif kind in ("case", "except"):
                body = node.body  # type: ignore[attr-defined]
                body.insert(0, self._hit(site, "taken", body[0]))
        for i, cond in enumerate(original_ifs):
            site = self.comp_ifs.get(id(cond))
            if site is not None:
                node.ifs[i] = self._cond(site, node.ifs[i])  # type: ignore[attr-defined]
        return node


def _find_function(tree: ast.Module, qual: Sequence[str]) -> ast.FunctionDef | ast.AsyncFunctionDef | None:
    body = tree.body
    node: ast.AST | None = None
    for i, part in enumerate(qual):
        last = i == len(qual) - 1
        found = None
        for item in body:
            if last and isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)) and item.name == part:
                found = item
            elif not last and isinstance(item, ast.ClassDef) and item.name == part:
                found = item
        if found is None:
            return None
        node = found
        body = found.body  # type: ignore[attr-defined]
    return node  # type: ignore[return-value]


def _future_end(tree: ast.Module) -> int:
    i = 0
    body = tree.body
    if body and isinstance(body[0], ast.Expr) and isinstance(body[0].value, ast.Constant) and isinstance(body[0].value.value, str):
        i = 1
    while i < len(body) and isinstance(body[i], ast.ImportFrom) and body[i].module == "__future__":
        i += 1
    return i


def _write_sourceless(code, path: Path, source_size: int) -> None:
    data = bytearray(importlib.util.MAGIC_NUMBER)
    data += (0).to_bytes(4, "little")
    data += int(time.time()).to_bytes(4, "little")
    data += (source_size & 0xFFFFFFFF).to_bytes(4, "little")
    data += marshal.dumps(code)
    path.write_bytes(bytes(data))


@dataclass
class _FrameIndex:
    """Maps (code name, first line) in one module back to its qualified name."""

    defs: dict[tuple[str, int], str]

    @classmethod
    def of(cls, tree: ast.Module) -> "_FrameIndex":
        defs: dict[tuple[str, int], str] = {}

        def walk(body, prefix: str) -> None:
            for node in body:
                if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                    qual = f"{prefix}{node.name}"
                    lines = {node.lineno} | {d.lineno for d in node.decorator_list}
                    for line in lines:
                        defs[(node.name, line)] = qual
                    inner = f"{qual}." if isinstance(node, ast.ClassDef) else f"{qual}.<locals>."
                    walk(node.body, inner)
                elif hasattr(node, "body") and isinstance(getattr(node, "body"), list):
                    walk(node.body, prefix)
                    for extra in ("orelse", "finalbody", "handlers"):
                        walk(getattr(node, extra, []) or [], prefix)

        walk(tree.body, "")
        return cls(defs)


@dataclass
class LibraryBuild:
    root: Path  # build directory
    lib_root: Path  # import root inside the build (on the driver's sys.path)
    edge_table: dict[str, tuple[EdgeId, ...]]
    diagnostics: list[str] = field(default_factory=list)
    frame_index: dict[str, _FrameIndex] = field(default_factory=dict)

    @property
    def runtime_file(self) -> Path:
        return self.lib_root / f"{RUNTIME_MODULE}.py"

    def universe(self, method_ids: Iterable[str] | None = None) -> set[str]:
        ids = self.edge_table.keys() if method_ids is None else method_ids
        return {e.key for mid in ids for e in self.edge_table.get(mid, ())}

    def edge_table_dict(self) -> dict[str, list[str]]:
        return {mid: [e.key for e in edges] for mid, edges in sorted(self.edge_table.items())}

    def write_edge_table(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.edge_table_dict(), indent=2) + "\n", encoding="utf-8")

    def module_of(self, filename: str) -> str | None:
        try:
            rel = Path(filename).resolve().relative_to(self.lib_root.resolve())
        except ValueError:
            return None
        if rel.name == f"{RUNTIME_MODULE}.py":
            return None
        parts = list(rel.with_suffix("").parts)
        if parts and parts[-1] == "__init__":
            parts.pop()
        return ".".join(parts) if parts else None

    def resolve_frame(self, filename: str, co_name: str, firstlineno: int, lineno: int) -> tuple[str, str, int] | None:
        """(owner, function, line) for a library frame, else None."""
        module = self.module_of(filename)
        if module is None:
            return None
        index = self.frame_index.get(module)
        qual = index.defs.get((co_name, firstlineno)) if index else None
        if qual is None:
            return (module, co_name, lineno)
        owner, _, func = qual.rpartition(".")
        return (f"{module}.{owner}" if owner else module, func, lineno)


def instrument(
    source_root: str | Path,
    methods: Iterable[MethodUnderTest],
    build_dir: str | Path,
    import_root: str | Path | None = None,
) -> LibraryBuild:
    """Copy the library into ``build_dir`` and instrument the given methods.

    Returns the build with its edge table: every branch site of every
    instrumented method contributes one edge per arm. A method that cannot be
    found or rewritten is dropped from the table with a diagnostic.
    """
    source_root = Path(source_root)
    build_dir = Path(build_dir)
    lib_root = build_dir / "lib"
    if lib_root.exists():
        shutil.rmtree(lib_root)
    ignore = shutil.ignore_patterns("__pycache__", "*.pyc")
    if (source_root / "__init__.py").exists():
        shutil.copytree(source_root, lib_root / source_root.name, ignore=ignore)
    else:
        shutil.copytree(source_root, lib_root, ignore=ignore)
    (lib_root / f"{RUNTIME_MODULE}.py").write_text(_RUNTIME_SOURCE, encoding="utf-8")

    build = LibraryBuild(build_dir, lib_root, {})
    by_module: dict[str, list[MethodUnderTest]] = {}
    for m in methods:
        by_module.setdefault(m.module, []).append(m)

    for path in sorted(lib_root.rglob("*.py")):
        module = build.module_of(str(path))
        if module is None:
            continue
        try:
            tree = ast.parse(path.read_text(encoding="utf-8"), filename=str(path))
        except SyntaxError:
            continue
        build.frame_index[module] = _FrameIndex.of(tree)

    for module, group in sorted(by_module.items()):
        parts = module.split(".")
        path = lib_root.joinpath(*parts).with_suffix(".py")
        if not path.exists():
            path = lib_root.joinpath(*parts, "__init__.py")
        if not path.exists():
            for m in group:
                build.diagnostics.append(f"{m.method_id}: module file not found, method excluded")
            continue
        source = path.read_text(encoding="utf-8")
        tree = ast.parse(source, filename=str(path))
        done = 0
        for m in group:
            owner_parts = m.owner_fqn[len(module) + 1 :].split(".") if m.owner_fqn != module else []
            func = _find_function(tree, [*owner_parts, m.name])
            if func is None:
                build.diagnostics.append(f"{m.method_id}: definition not found, method excluded")
                continue
            sites = branch_sites(func)
            try:
                _Instrumenter(m.method_id, sites).visit(func)
            except Exception as exc:  # pragma: no cover - defensive
                build.diagnostics.append(f"{m.method_id}: instrumentation failed ({exc}), method excluded")
                continue
            build.edge_table[m.method_id] = tuple(edges_for(m.owner_fqn, m.name, sites))
            done += 1
        if not done:
            continue
        tree.body.insert(_future_end(tree), ast.Import(names=[ast.alias(name=RUNTIME_MODULE)]))
        ast.fix_missing_locations(tree)
        code = compile(tree, str(path), "exec", dont_inherit=True)
        _write_sourceless(code, path.with_suffix(".pyc"), len(source.encode("utf-8")))
        path.unlink()
    return build


# -- compile ----------------------------------------------------------------------


@dataclass
class Artifact:
    driver: DriverSource
    path: Path
    build: LibraryBuild
    compile_ms: int
    library: str = ""


@dataclass
class CompileFailure:
    driver: DriverSource
    diagnostics: list[str]
    compile_ms: int
    library: str = ""

    def record(self) -> ExecutionRecord:
        return ExecutionRecord(
            self.driver.method_id,
            self.driver.partition_index,
            "failed",
            list(self.diagnostics),
            compile_ms=self.compile_ms,
            library=self.library,
        )


def _undefined_names(text: str, filename: str) -> list[str]:
    table = symtable.symtable(text, filename, "exec")
    module_names = {s.get_name() for s in table.get_symbols() if s.is_assigned() or s.is_imported()}
    main = next((c for c in table.get_children() if c.get_name() == "main"), None)
    if main is None:
        return ["driver has no main() function"]
    missing: list[str] = []

    def check(scope: symtable.SymbolTable) -> None:
        for sym in scope.get_symbols():
            name = sym.get_name()
            if sym.is_referenced() and sym.is_global() and name not in module_names and not hasattr(builtins, name):
                missing.append(name)
        for child in scope.get_children():
            check(child)

    check(main)
    return sorted(set(missing))


def _module_available(module: str, lib_root: Path) -> bool:
    parts = module.split(".")
    local = lib_root.joinpath(*parts)
    if local.with_suffix(".py").exists() or local.with_suffix(".pyc").exists() or local.is_dir():
        return True
    if (lib_root / parts[0]).exists() or (lib_root / f"{parts[0]}.py").exists():
        return False  # a library module that does not exist
    try:
        return importlib.util.find_spec(parts[0]) is not None
    except (ImportError, ValueError):
        return False


def _import_problems(tree: ast.Module, lib_root: Path) -> list[str]:
    problems = []
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                if not _module_available(alias.name, lib_root):
                    problems.append(f"line {node.lineno}: cannot resolve module {alias.name!r}")
        elif isinstance(node, ast.ImportFrom):
            if node.level:
                problems.append(f"line {node.lineno}: relative import in a driver")
            elif node.module and not _module_available(node.module, lib_root):
                problems.append(f"line {node.lineno}: cannot resolve module {node.module!r}")
    return problems


def compile_driver(
    driver: DriverSource, build: LibraryBuild, work_dir: str | Path, library: str = ""
) -> Artifact | CompileFailure:
    """Write the driver and check it statically; the Python stand-in for compilation.

    Checks syntax, unresolved names, unresolvable imports, and the
    value-slot lint carried on the driver.
    """
    start = time.perf_counter()
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    path = work_dir / "driver.py"
    path.write_text(driver.entry_point_text, encoding="utf-8")
    diagnostics = list(driver.lint)
    try:
        tree = ast.parse(driver.entry_point_text, filename=str(path))
        compile(tree, str(path), "exec", dont_inherit=True)
    except SyntaxError as exc:
        diagnostics.append(f"line {exc.lineno}: syntax error: {exc.msg}")
    else:
        diagnostics += [f"undefined name {n!r}" for n in _undefined_names(driver.entry_point_text, str(path))]
        diagnostics += _import_problems(tree, build.lib_root)
    elapsed = int((time.perf_counter() - start) * 1000)
    if diagnostics:
        return CompileFailure(driver, diagnostics, elapsed, library)
    return Artifact(driver, path, build, elapsed, library)


# -- run --------------------------------------------------------------------------

_live: set[subprocess.Popen] = set()
_live_lock = threading.Lock()


def kill_all() -> None:
    """Kill every running driver process group (used on cancel)."""
    with _live_lock:
        procs = list(_live)
    for proc in procs:
        _kill(proc)


def _kill(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def _parse_report(stderr: str) -> dict | None:
    for line in reversed(stderr.splitlines()):
        if line.startswith(REPORT_MARKER):
            try:
                return json.loads(line[len(REPORT_MARKER) :])
            except json.JSONDecodeError:
                return None
    return None


def _event(report: dict, artifact: Artifact) -> ExceptionEvent:
    build = artifact.build
    top: tuple[str, str, int] | None = None
    for filename, co_name, first, line in reversed(report.get("frames", [])):
        top = build.resolve_frame(filename, co_name, int(first), int(line))
        if top is not None:
            break
    inside = top is not None
    if top is None:
        frames = report.get("frames") or [["<driver>", "main", 0, 0]]
        _, co_name, _, line = frames[-1]
        top = ("<driver>", co_name, int(line))
    return ExceptionEvent(
        exception_fqn=report.get("type") or "<unknown>",
        message=report.get("message", ""),
        top_frame=top,
        inside_library=inside,
        method_id=artifact.driver.method_id,
        partition_index=artifact.driver.partition_index,
        phase=report.get("phase", "call"),
    )


def _is_static_error(report: dict, driver_path: Path) -> bool:
    kind = report.get("type", "")
    if kind in _UNRESOLVED:
        return True
    frames = report.get("frames") or []
    if kind in _SIGNATURE_MISMATCH and frames:
        return Path(frames[-1][0]).resolve() == driver_path.resolve()
    return False


def run(artifact: Artifact, timeout_s: float = DEFAULT_TIMEOUT_S) -> ExecutionRecord:
    """Run one driver in a fresh process and classify the outcome."""
    driver = artifact.driver
    work = artifact.path.parent
    cov_path = work / "coverage.json"
    if cov_path.exists():
        cov_path.unlink()
    env = {
        k: v for k, v in os.environ.items() if not k.startswith("PYTHON") and k != COVERAGE_ENV
    }
    env.update(
        PYTHONPATH=str(artifact.build.lib_root),
        PYTHONHASHSEED="0",
        PYTHONDONTWRITEBYTECODE="1",
        **{COVERAGE_ENV: str(cov_path)},
    )
    record = ExecutionRecord(
        driver.method_id, driver.partition_index, "ok", compile_ms=artifact.compile_ms, library=artifact.library
    )
    start = time.perf_counter()
    try:
        proc = subprocess.Popen(
            [sys.executable, "-s", "-B", str(artifact.path)],
            cwd=str(work),
            env=env,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            start_new_session=True,
        )
    except OSError as exc:
        record.run_status = "crash"
        record.diagnostics.append(f"could not start driver: {exc}")
        return record
    with _live_lock:
        _live.add(proc)
    try:
        try:
            stdout, stderr = proc.communicate(timeout=timeout_s)
        except subprocess.TimeoutExpired:
            _kill(proc)
            proc.communicate()
            record.run_status = "timeout"
            record.wall_ms = max(int((time.perf_counter() - start) * 1000), int(timeout_s * 1000))
            return record
    finally:
        with _live_lock:
            _live.discard(proc)
    record.wall_ms = int((time.perf_counter() - start) * 1000)
    report = _parse_report(stderr)
    if report is not None and report.get("phase") == "setup" and _is_static_error(report, artifact.path):
        record.compile_status = "failed"
        record.diagnostics.append(f"unresolved at setup: {report.get('type')}: {report.get('message', '')}")
        return record
    try:
        hits = json.loads(cov_path.read_text(encoding="utf-8")) if cov_path.exists() else []
    except (OSError, json.JSONDecodeError) as exc:
        record.run_status = "crash"
        record.diagnostics.append(f"unreadable coverage map: {exc}")
        return record
    record.covered_edges = frozenset(hits)
    if proc.returncode == 0 and "OK" in stdout.splitlines():
        record.run_status = "ok"
    elif proc.returncode in (1, 3) and report is not None:
        record.run_status = "exception"
        record.exception = _event(report, artifact)
    else:
        record.run_status = "crash"
        tail = stderr.strip().splitlines()[-1:] if stderr.strip() else []
        record.diagnostics.append(f"exit code {proc.returncode}" + (f": {tail[0]}" if tail else ""))
    return record


def execute(
    drivers: Sequence[tuple[DriverSource, Path, str]],
    build: LibraryBuild,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    workers: int = 1,
) -> list[ExecutionRecord]:
    """Compile and run (driver, work_dir, library) triples on up to ``workers`` threads."""
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def one(item: tuple[DriverSource, Path, str]) -> ExecutionRecord:
        driver, work_dir, library = item
        result = compile_driver(driver, build, work_dir, library)
        if isinstance(result, CompileFailure):
            return result.record()
        return run(result, timeout_s)

    if workers == 1:
        records = [one(d) for d in drivers]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, drivers))
    return sorted(records, key=lambda r: (r.method_id, r.partition_index))


def merge_coverage(records: Iterable[ExecutionRecord]) -> frozenset[str]:
    out: set[str] = set()
    for r in records:
        out |= r.covered_edges
    return frozenset(out)
