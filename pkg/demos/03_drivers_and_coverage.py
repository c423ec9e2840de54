"""Emit drivers, run them against an instrumented copy of the library, read the edges."""

import tempfile
from pathlib import Path

from ispgen import fixture_corpus
from ispgen.executor import execute, instrument
from ispgen.frontend import extract_api_model, iter_kept, select_methods
from ispgen.instantiator import emit_driver

corpus = fixture_corpus()
model = extract_api_model(corpus)
methods = list(iter_kept(model, select_methods(model)))
work = Path(tempfile.mkdtemp())
build = instrument(corpus, methods, work / "build")
print("edges of pow:", build.edge_table_dict()["apfloat.apcomplex_math::pow"])

pow_ = model.method("apfloat.apcomplex_math::pow")
imports = ["from apfloat import Apcomplex, Apfloat"]
cases = {
    1: ["z = Apcomplex(Apfloat(1.0), Apfloat(0.0))", "w = Apcomplex(Apfloat(2.0), Apfloat(0.0))"],
    2: ["z = Apcomplex(Apfloat(-1.0), Apfloat(0.5))", "w = Apcomplex(Apfloat(2.0), Apfloat(0.0))"],
    3: ["z = Apcomplex(Apfloat(0.0), Apfloat(0.0))", "w = Apcomplex(Apfloat(0.0), Apfloat(0.0))"],
    4: ["z = Apcomplex(Apfloat(undefined), Apfloat(0.0))", "w = z"],  # does not compile
}
drivers = [(emit_driver(pow_, imports, body, partition_index=i), work / str(i), "apfloat") for i, body in cases.items()]
print(drivers[0][0].entry_point_text)

mod_pow = model.method("modmath.double_mod_math.DoubleModMath::mod_pow")
drivers.append((
    emit_driver(mod_pow, ["from modmath.double_mod_math import DoubleModMath"],
                ["receiver = DoubleModMath(2.0)", "a = 3.0", "n = -1e6"]),
    work / "mod_pow", "modmath",
))

for r in execute(drivers, build, timeout_s=10, workers=2):
    event = r.exception
    print(r.method_id, r.partition_index, r.compile_status, r.run_status, sorted(r.covered_edges),
          (event.exception_fqn, event.top_frame, event.inside_library) if event else "", r.diagnostics[:1])
