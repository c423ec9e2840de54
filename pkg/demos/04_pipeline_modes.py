"""Run the whole pipeline in every mode, then record once and replay."""

import json
import tempfile
from pathlib import Path

from ispgen import fixture_corpus, fixture_stubs
from ispgen.llm_gateway import GatewayConfig
from ispgen.pipeline import RunConfig, replay_config, run_pipeline

corpus = str(fixture_corpus())
out = Path(tempfile.mkdtemp())
stub = GatewayConfig(mode="stub", stub_path=str(fixture_stubs()))

for mode in ("full", "no_tda", "no_isp", "baseline", "cg"):
    result = run_pipeline(RunConfig(corpus, str(out / mode), mode=mode, gateway=stub))
    overall = result.report["metrics"]["overall"]
    print(f"{mode:9s} prompts={result.calls_by_stage}  inputs={overall['n_input']}  edges={overall['n_edge']}"
          f"  invalid={overall['invalid_input_ratio']}  kept exceptions={result.report['triage']['kept']}")

print((out / "full" / "report.txt").read_text())

# Record every prompt and answer, then rerun offline from the cache
cache = out / "cache"
record = RunConfig(corpus, str(out / "rec"), gateway=GatewayConfig(mode="record", stub_path=str(fixture_stubs()),
                                                                   cache_dir=str(cache)))
run_pipeline(record)
replayed = run_pipeline(replay_config(RunConfig(corpus, str(out / "rep")), str(cache)))
same = (out / "rec" / "report.json").read_bytes() == (out / "rep" / "report.json").read_bytes()
print("replay identical:", same, " network requests:", replayed.network_requests)
print(json.dumps(replayed.report["exception_types"]))
