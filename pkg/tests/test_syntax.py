import datetime

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttiq import format_term, format_type, load_schema, parse_schema, parse_term, parse_type
from ttiq.core import (
    STRING,
    CtorApp,
    DateLit,
    DepSum,
    Enumerated,
    Named,
    NumLit,
    Pair,
    Primitive,
    PropEmbed,
    Record,
    RecordTerm,
    Select,
    StrLit,
    SymApp,
    Var,
)
from ttiq.errors import CyclicDefinitionError, ParseError, SchemaError, UnknownTypeError

from .generators import gen_any_term, gen_any_type


def test_record_type():
    assert parse_type("name: string * date_of_birth: date") == Record(
        (("name", STRING), ("date_of_birth", Primitive("date")))
    )


def test_enumeration():
    assert parse_type("{'Male','Female','Unknown'}") == Enumerated(("Male", "Female", "Unknown"))


def test_dependent_sum_with_proposition():
    expected = DepSum(
        "x", Named("Human"), PropEmbed(SymApp("==", (Select(Var("x"), "gender"), StrLit("Male"))))
    )
    assert parse_type("exists x: Human. x.gender == 'Male'") == expected


def test_terms():
    assert parse_term("hasChild(x, y)") == CtorApp("hasChild", (Var("x"), Var("y")))
    assert parse_term('(name = "Ann", date_of_birth = 1990-01-02)') == RecordTerm(
        (("name", StrLit("Ann")), ("date_of_birth", DateLit(datetime.date(1990, 1, 2))))
    )
    assert parse_term("(w, (r, (p, true)))") == Pair(Var("w"), Pair(Var("r"), Pair(Var("p"), parse_term("true"))))


def test_symbol_application_needs_declared_symbol():
    assert isinstance(parse_term("len(x)", symbols={"len"}), SymApp)
    assert isinstance(parse_term("len(x)"), CtorApp)


def test_format_literals():
    assert format_term(NumLit(12)) == "12"
    assert format_term(StrLit('a"b')) == '"a\\"b"'
    assert parse_term(format_term(StrLit("tab\there\n"))) == StrLit("tab\there\n")


def test_duplicate_labels_rejected():
    with pytest.raises(ParseError):
        parse_type("a: string * a: num")
    with pytest.raises(ParseError):
        parse_term("(a = 1, a = 2)")


def test_error_positions():
    with pytest.raises(ParseError) as info:
        parse_type("name: string *\n  : num")
    assert info.value.line == 2
    assert info.value.column == 3


def test_invalid_date():
    with pytest.raises(ParseError):
        parse_term("2021-02-30")


def test_schema_loading(poi_schema):
    assert "Mother" in poi_schema
    assert poi_schema.resolve(Named("A")) == parse_type("name: string * date_of_birth: date")
    assert poi_schema.resolve(Named("Person")) == poi_schema.resolve(Named("Human"))


def test_schema_round_trip_of_displayed_types(poi_schema):
    for name in ("A", "B", "C", "Man", "Woman", "Mother"):
        t = poi_schema.types[name]
        assert parse_type(format_type(t), schema=poi_schema) == t


def test_schema_cycles_rejected():
    with pytest.raises(CyclicDefinitionError):
        parse_schema("type X = X ;")
    with pytest.raises(CyclicDefinitionError):
        parse_schema("type X = a: Y ; type Y = b: X ;")


def test_schema_unknown_reference():
    with pytest.raises((UnknownTypeError, SchemaError)):
        parse_schema("type X = a: Missing ;")


def test_load_schema_file(tmp_path):
    path = tmp_path / "s.ttiq"
    path.write_text("# comment\ntype T = n: num ;\nfn f : string -> num ;\n")
    schema = load_schema(path)
    assert schema.resolve(Named("T")) == parse_type("n: num")
    assert "f" in schema.symbols()


@settings(max_examples=300, deadline=None)
@given(st.randoms(use_true_random=False))
def test_type_round_trip(rng):
    t = gen_any_type(rng)
    assert parse_type(format_type(t), symbols={"len", "f"}) == t


@settings(max_examples=300, deadline=None)
@given(st.randoms(use_true_random=False))
def test_term_round_trip(rng):
    t = gen_any_term(rng)
    assert parse_term(format_term(t), symbols={"len", "f"}) == t


@given(st.dates())
def test_dates_round_trip(d):
    assert parse_term(format_term(DateLit(d))) == DateLit(d)
