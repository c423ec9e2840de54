"""Command line entry point: ``ispgen extract|test|replay|report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .executor import kill_all
from .llm_gateway import GatewayConfig, PriceTable
from .pipeline import RunConfig, extract, replay_config, report_from_dir, run_pipeline

log = logging.getLogger("ispgen")

# config key -> (type, flag dest)
_KEYS: dict[str, type] = {
    "source_root": str,
    "out": str,
    "mode": str,
    "gateway": str,
    "timeout": float,
    "workers": int,
    "depth_bound": int,
    "stub": str,
    "cache": str,
    "endpoint": str,
    "model": str,
    "rpm": int,
    "template": str,
    "price_in": float,
    "price_out": float,
    "csv": bool,
}


class UsageError(Exception):
    pass


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a JSON object or ``key=value`` lines (``#`` starts a comment)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{n}: expected key=value")
            raw[key.strip()] = value.strip()
    out: dict[str, Any] = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise UsageError(f"unknown config key {key!r}")
        kind = _KEYS[key]
        if kind is bool and isinstance(value, str):
            value = value.lower() in ("1", "true", "yes", "on")
        out[key] = kind(value)
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ispgen", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="extract the API model and method selection")
    ex.add_argument("source_root", nargs="?")
    ex.add_argument("--out")
    ex.add_argument("--config")

    for name, help_text in (("test", "run the full pipeline"), ("replay", "rerun from recorded prompts")):
        t = sub.add_parser(name, help=help_text)
        t.add_argument("source_root", nargs="?")
        t.add_argument("--config")
        t.add_argument("--out")
        t.add_argument("--mode", choices=["full", "no-tda", "no-isp", "baseline", "cg"])
        if name == "test":
            t.add_argument("--gateway", choices=["live", "record", "replay", "stub"])
            t.add_argument("--stub", help="scripted responses file for stub/record modes")
            t.add_argument("--endpoint")
            t.add_argument("--model")
            t.add_argument("--rpm", type=int)
        t.add_argument("--cache", help="prompt cache directory for record/replay")
        t.add_argument("--timeout", type=float)
        t.add_argument("--workers", type=int)
        t.add_argument("--depth-bound", dest="depth_bound", type=int)
        t.add_argument("--template")
        t.add_argument("--price-in", dest="price_in", type=float)
        t.add_argument("--price-out", dest="price_out", type=float)
        t.add_argument("--csv", action="store_true", default=None)

    r = sub.add_parser("report", help="recompute metrics and triage from a run directory")
    r.add_argument("records_dir")
    r.add_argument("--csv", action="store_true")
    return p


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    settings = load_config(args.config) if getattr(args, "config", None) else {}
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _run_config(s: dict[str, Any], command: str) -> RunConfig:
    for key in ("source_root", "out"):
        if not s.get(key):
            raise UsageError(f"{command} needs {key.replace('_', ' ')} (flag or config key {key!r})")
    mode = s.get("gateway", "stub")
    if command == "replay":
        if not s.get("cache"):
            raise UsageError("replay needs --cache")
        mode = "replay"
    gw_kwargs: dict[str, Any] = {"mode": mode, "cache_dir": s.get("cache"), "stub_path": s.get("stub")}
    for key, field_name in (("endpoint", "endpoint"), ("model", "model"), ("rpm", "requests_per_minute")):
        if key in s:
            gw_kwargs[field_name] = s[key]
    try:
        gateway = GatewayConfig(**gw_kwargs)
        price = PriceTable(s.get("price_in", 0.5), s.get("price_out", 1.5))
        config = RunConfig(
            source_root=s["source_root"],
            out_dir=s["out"],
            mode=s.get("mode", "full"),
            gateway=gateway,
            depth_bound=s.get("depth_bound", 5),
            timeout_s=s.get("timeout", 10.0),
            workers=s.get("workers", 1),
            price_table=price,
            template_path=s.get("template"),
            csv=bool(s.get("csv", False)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if command == "replay":
        config = replay_config(config, s["cache"])
    return config


def cmd_extract(source_root: str, out: str | None) -> int:
    model, selection, diagnostics = extract(source_root, out)
    for d in diagnostics:
        log.warning("%s", d)
    print(f"{len(model.types)} types, {len(model.methods)} methods, {len(selection.kept)} kept")
    return 0


def cmd_test(config: RunConfig) -> int:
    result = run_pipeline(config)
    sys.stdout.write((Path(config.out_dir) / "report.txt").read_text(encoding="utf-8"))
    for err in result.internal_errors:
        log.error("%s", err)
    return 0 if result.ok else 1


def cmd_replay(config: RunConfig, cache_dir: str | None = None) -> int:
    if cache_dir is not None:
        config = replay_config(config, cache_dir)
    return cmd_test(config)


def cmd_report(records_dir: str, csv: bool = False) -> int:
    report_from_dir(records_dir, csv=csv)
    sys.stdout.write((Path(records_dir) / "report.txt").read_text(encoding="utf-8"))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args.records_dir, args.csv)
        settings = _settings(args)
        if args.command == "extract":
            if not settings.get("source_root"):
                raise UsageError("extract needs a source root")
            return cmd_extract(settings["source_root"], settings.get("out"))
        return cmd_test(_run_config(settings, args.command))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ispgen: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"ispgen: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        kill_all()
        print("ispgen: cancelled", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
