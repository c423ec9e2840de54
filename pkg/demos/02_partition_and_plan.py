"""Partition an input space, then choose constructors for every argument."""

from ispgen import fixture_corpus, fixture_stubs
from ispgen.frontend import extract_api_model
from ispgen.llm_gateway import GatewayConfig, LLMGateway, StubResponses
from ispgen.partitioner import build_isp_prompt, partition
from ispgen.selector import plan_instantiation
from ispgen.instantiator import build_oi_prompt, render_constructor_lines
from ispgen.tdg import build_tdg

model = extract_api_model(fixture_corpus())
pow_ = model.method("apfloat.apcomplex_math::pow")

# Scripted responses stand in for a live model; swap in mode="live" with an API key
gateway = LLMGateway(GatewayConfig(mode="stub"), stub=StubResponses.load(fixture_stubs()))

print(build_isp_prompt(pow_).user_text)
outcome = partition(pow_, gateway)
for spec in outcome.specs:
    print(f"({spec.index}) {spec.describe()}")

# Top-down: one selection per reference-typed slot that has a real choice
tdg = build_tdg(model)
plan = plan_instantiation(pow_, outcome.specs[0], tdg, model, gateway)
print("\n".join(render_constructor_lines(plan)))
print("value slots:", [n.name for n in plan.primitive_slots()])
print("selection prompts:", plan.gateway_calls)

# Bottom-up: the instantiation request handed to the model
print(build_oi_prompt(plan, outcome.specs[0], pow_).user_text)
print(gateway.calls_by_stage())
