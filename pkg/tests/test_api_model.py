from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ispgen import api_model
from ispgen.api_model import (
    ApiModel,
    ConstructorDescriptor,
    MethodUnderTest,
    ModelParseError,
    ModelValidationError,
    ParameterDescriptor,
    TypeDescriptor,
    element_type,
    is_array,
    validate,
)

DATA = Path(__file__).parent / "data"


def _ctor(owner, *params):
    ps = tuple(ParameterDescriptor(n, t) for n, t in params)
    text = f"{owner.rsplit('.', 1)[-1]}({', '.join(p.render() for p in ps)})"
    return ConstructorDescriptor(owner, ps, text)


def test_dangling_constructor_reference_is_named():
    t = TypeDescriptor("lib.A", constructors=(_ctor("lib.A", ("x", "lib.X")),))
    violations = validate(ApiModel("lib", types={"lib.A": t}))
    assert len(violations) == 1
    assert "'lib.X'" in violations[0]


def test_empty_model_is_valid():
    assert validate(ApiModel("empty")) == []


def test_pow_fixture_model_is_valid(model):
    assert validate(model) == []


def test_other_violations_are_reported():
    prim = TypeDescriptor("lib.P", kind="primitive", constructors=(_ctor("lib.P"),))
    bad_kind = TypeDescriptor("lib.Q", kind="struct", supertypes=("lib.Missing",))
    dup = TypeDescriptor("lib.R", constructors=(_ctor("lib.R"), _ctor("lib.R")))
    m = MethodUnderTest(
        "lib.Nope", "f", (ParameterDescriptor("a", "int"), ParameterDescriptor("a", "int")), " ", False, "lib"
    )
    violations = validate(
        ApiModel("lib", types={"lib.P": prim, "lib.Q": bad_kind, "lib.R": dup}, methods=(m, m))
    )
    text = "\n".join(violations)
    for needle in ("primitive type 'lib.P'", "unknown kind 'struct'", "unknown supertype 'lib.Missing'",
                   "declared twice", "empty source", "unknown owner", "duplicate parameter", "listed twice"):
        assert needle in text


def test_store_load_round_trip(model, tmp_path):
    path = tmp_path / "model.json"
    api_model.store(model, path)
    assert api_model.load(path) == model


def test_load_truncated_file_reports_position(tmp_path):
    text = (DATA / "pow_model.json").read_text()
    path = tmp_path / "cut.json"
    path.write_text(text[: len(text) // 2])
    with pytest.raises(ModelParseError) as info:
        api_model.load(path)
    assert info.value.line > 1


def test_load_invalid_model_raises_validation_error(tmp_path):
    t = TypeDescriptor("lib.A", constructors=(_ctor("lib.A", ("x", "lib.X")),))
    path = tmp_path / "bad.json"
    api_model.store(ApiModel("lib", types={"lib.A": t}), path)
    with pytest.raises(ModelValidationError) as info:
        api_model.load(path)
    assert "lib.X" in str(info.value)
    assert api_model.load(path, check=False).types["lib.A"] == t


def test_committed_pow_model_counts():
    m = api_model.load(DATA / "pow_model.json")
    reference = [t for t in m.types.values() if t.kind == "reference" and not t.external]
    assert len(reference) == 2
    assert sum(len(t.constructors) for t in reference) >= 4
    assert set(api_model.to_dict(m)) == {"library", "version", "types", "methods"}


def test_array_helpers():
    assert is_array("list[int]") and is_array("tuple[str, ...]")
    assert not is_array("int")
    assert element_type("list[lib.A]") == "lib.A"
    assert element_type("tuple[int, str]") == "object"
    assert element_type("tuple[int, ...]") == "int"


def test_is_subtype_is_reflexive_and_transitive(model):
    assert model.is_subtype("apfloat.core.Apfloat", "apfloat.core.Apfloat")
    assert model.is_subtype("apfloat.core.Apfloat", "numbers.Number")
    assert not model.is_subtype("apfloat.core.Apcomplex", "apfloat.core.Apfloat")


# -- generated models -----------------------------------------------------------------

_names = st.text("abcdefgh", min_size=1, max_size=6)
_prims = st.sampled_from(sorted(api_model.PRIMITIVE_TYPES))


@st.composite
def models(draw):
    n = draw(st.integers(0, 5))
    fqns = [f"lib.T{i}" for i in range(n)]
    param_types = st.sampled_from(fqns + ["int", "str", "list[int]"]) if fqns else _prims

    def params(prefix):
        k = draw(st.integers(0, 3))
        return tuple(
            ParameterDescriptor(f"{prefix}{j}", draw(param_types), draw(st.booleans()), draw(st.booleans()))
            for j in range(k)
        )

    types = {}
    for i, fqn in enumerate(fqns):
        supers = tuple(sorted(set(draw(st.lists(st.sampled_from(fqns[:i]), max_size=2))))) if i else ()
        ctors = []
        for j in range(draw(st.integers(0, 3))):
            ps = params("p")
            ctors.append(ConstructorDescriptor(fqn, ps, f"T{i}#{j}", draw(st.sampled_from(["public", "non-public"]))))
        kind = draw(st.sampled_from(["reference", "abstract", "interface-like"]))
        excerpt = draw(st.none() | st.text(max_size=20))
        types[fqn] = TypeDescriptor(fqn, kind, supers, tuple(ctors), excerpt)
    methods = []
    for i in range(draw(st.integers(0, 4))):
        owner = draw(st.sampled_from(fqns)) if fqns and draw(st.booleans()) else "lib"
        methods.append(
            MethodUnderTest(
                owner,
                f"m{i}",
                params("a"),
                draw(st.text(min_size=1, max_size=40).filter(str.strip)),
                draw(st.booleans()),
                "lib",
                frozenset(draw(st.lists(_names, max_size=2))),
                frozenset(draw(st.lists(_names, max_size=2))),
                draw(st.integers(0, 9)),
            )
        )
    return ApiModel(draw(_names), draw(_names), types, tuple(methods))


@settings(max_examples=100, deadline=None)
@given(models())
def test_generated_models_round_trip(m):
    assert validate(m) == []
    assert api_model.loads(api_model.dumps(m)) == m


@settings(max_examples=100, deadline=None)
@given(models(), st.text(max_size=8))
def test_validate_is_total(m, junk):
    broken = TypeDescriptor("", kind=junk, supertypes=(junk,))
    types = dict(m.types)
    types[junk or "x"] = broken
    assert isinstance(validate(ApiModel(m.library_name, types=types, methods=m.methods)), list)
