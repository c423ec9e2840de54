"""Extract an API model from a source tree and pick the methods worth testing."""

from ispgen import fixture_corpus
from ispgen.frontend import extract_api_model, select_methods
from ispgen.tdg import build_tdg, dependency_text, reachable_types

corpus = fixture_corpus()
diagnostics = []
model = extract_api_model(corpus, diagnostics)
print(f"{len(model.types)} types, {len(model.methods)} methods, {len(diagnostics)} diagnostics")

# Methods with no branch, on abstract owners, or inherited from object are dropped
selection = select_methods(model)
for key, ids in selection.to_dict().items():
    print(f"{key:28s} {len(ids)}")
for mid in selection.kept:
    m = model.method(mid)
    print(f"  {mid}  sites={m.branch_point_count}  doc={sorted(m.doc_declared_exceptions)}"
          f"  sig={sorted(m.signature_declared_exceptions)}")

# The type graph behind pow(z: Apcomplex, w: Apcomplex)
tdg = build_tdg(model)
print(reachable_types(tdg, ["apfloat.core.Apcomplex"]).types)
print(dependency_text(tdg, model, "apfloat.core.Apcomplex"))
