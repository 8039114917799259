import functools
import http.server
import sys
import threading
from pathlib import Path

import pytest

from ttiq import AnalyticManifest, DataSource, DataSpace, check_membership, parse_query, parse_term, parse_type
from ttiq.core import Named
from ttiq.dataspace import BoundedQuery, InstanceQuery, format_query
from ttiq.errors import (
    AnalyticError,
    DataspaceError,
    ParseError,
    PostconditionViolated,
    PreconditionViolated,
    UnknownTypeError,
)

from . import poi


def names(result):
    return [row.term.get("name").value for row in result.rows]


def test_parse_query():
    assert parse_query("SELECT ?x FROM ?x a A") == InstanceQuery("A")
    q = parse_query('SELECT ?x FROM ?x a A WHERE ?x.name == "Ann"')
    assert format_query(q) == 'SELECT ?x FROM ?x a A WHERE ?x.name == "Ann"'
    assert parse_query("SELECT ?X FROM ?X <= A") == BoundedQuery("A")
    with pytest.raises(ParseError):
        parse_query("SELECT ?x FROM ?y a A")
    with pytest.raises(ParseError):
        parse_query("SELECT ?x FROM ?x a A WHERE ?y.name == 'a'")


def test_registration_reports(poi_dir):
    space = DataSpace.create(poi_dir / "s.json", poi_dir / "poi.ttiq", poi_dir / "poi.tax")
    first = space.register_source(DataSource("A1", "A", "a.terms"))
    assert first.relations == []
    second = space.register_source(DataSource("B1", "B", "b.terms"))
    assert [(r.sub, r.sup) for r in second.relations] == [("B", "A")]
    third = space.register_source(DataSource("C1", "C", "c.terms"))
    assert ("C", "A") in [(r.sub, r.sup) for r in third.relations]
    assert "C <= A" in str(third)


def test_registration_errors(poi_space):
    with pytest.raises(DataspaceError):
        poi_space.register_source(DataSource("A1", "A", "a.terms"))
    with pytest.raises(UnknownTypeError):
        poi_space.register_source(DataSource("Z", "Nope", "a.terms"))
    with pytest.raises(DataspaceError):
        poi_space.register_source(DataSource("Z", "A", "missing.terms"))


def test_plan(poi_space):
    plan = poi_space.plan(poi.QUERY)
    assert plan.sources() == ["A1", "B1", "C1"]
    assert [e.proof.rule for e in plan] == ["IDENTITY", "SYN-REC", "SEM-REC"]


def test_plan_excludes_unrelated(poi_space):
    assert poi_space.plan("SELECT ?x FROM ?x a Woman").sources() == []


def test_empty_space(poi_dir):
    space = DataSpace.create(poi_dir / "s.json", poi_dir / "poi.ttiq")
    assert len(space.plan(poi.QUERY)) == 0
    assert space.execute(poi.QUERY).rows == []


def test_execute(poi_space):
    result = poi_space.execute(poi.QUERY)
    assert names(result) == ["Ann", "Bob", "Cy", "Di", "Ed", "Flo"]
    assert [row.source for row in result.rows] == ["A1", "A1", "B1", "B1", "C1", "C1"]
    for row in result.rows:
        assert check_membership(None, row.term, Named("A"), schema=poi_space.schema)
        assert row.term.labels == ("name", "date_of_birth")
    assert not result.failures and not result.malformed


def test_condition_on_five_rows(tmp_path):
    root = poi.write_files(tmp_path)
    (root / "five.terms").write_text("\n".join([
        '(name = "Ann", date_of_birth = 1990-01-02)',
        '(name = "Bob", date_of_birth = 1985-07-12)',
        '(name = "Ann", date_of_birth = 1970-01-01)',
        '(name = "ann", date_of_birth = 1971-01-01)',
        '(name = "Annie", date_of_birth = 1972-01-01)',
    ]) + "\n")
    space = poi.build_space(root, [("F", "A", "five.terms")])
    result = space.execute('SELECT ?x FROM ?x a A WHERE ?x.name == "Ann"')
    assert [row.term.get("date_of_birth").value.year for row in result.rows] == [1990, 1970]


def test_malformed_rows_skipped(tmp_path):
    root = poi.write_files(tmp_path)
    (root / "bad.terms").write_text('(name = "Ok", date_of_birth = 2000-01-01)\n(name = \n(name = 3, date_of_birth = 2000-01-01)\n')
    space = poi.build_space(root, [("X", "A", "bad.terms")])
    result = space.execute(poi.QUERY)
    assert names(result) == ["Ok"]
    assert [(m[0], m[1]) for m in result.malformed] == [("X", 2), ("X", 3)]


def test_dedupe(tmp_path):
    root = poi.write_files(tmp_path)
    space = poi.build_space(root, [("A1", "A", "a.terms"), ("A2", "A", "a.terms")])
    assert len(space.execute(poi.QUERY).rows) == 4
    assert len(space.execute(poi.QUERY, dedupe=True).rows) == 2


def test_transport_failure_is_partial(poi_space):
    Path(poi_space.base_dir, "b.terms").unlink()
    result = poi_space.execute(poi.QUERY)
    assert names(result) == ["Ann", "Bob", "Ed", "Flo"]
    assert [f[0] for f in result.failures] == ["B1"]


def test_selection(tmp_path):
    root = poi.write_files(tmp_path)
    space = poi.build_space(root, [("P1", "P", "p.terms")])
    q = "SELECT ?x FROM ?x a Q"
    assert len(space.proofs("P", "Q")) == 2
    assert space.execute(q).terms == [parse_term('(c = "left")')]
    space.select_coercion("P1", "Q", 1)
    assert space.plan(q).entries[0].proof_index == 1
    assert space.execute(q).terms == [parse_term('(c = "right")')]
    with pytest.raises(DataspaceError):
        space.select_coercion("P1", "Q", 5)
    reloaded = DataSpace.load(root / "ttiq-space.json")
    assert reloaded.execute(q).terms == [parse_term('(c = "right")')]


def test_single_proof_selection_is_noop(poi_space):
    before = poi_space.execute(poi.QUERY).terms
    poi_space.select_coercion("B1", "A", 0)
    assert poi_space.execute(poi.QUERY).terms == before


def test_bounded_query(poi_space):
    assert poi_space.execute("SELECT ?X FROM ?X <= A").type_names == ["A", "B", "C"]
    assert poi_space.execute("SELECT ?X FROM ?X <= A WHERE ?X == 'C'").type_names == ["C"]
    assert poi_space.execute("SELECT ?X FROM ?X <= B").type_names == ["B", "C"]


def test_stability(poi_space):
    before = poi_space.execute(poi.QUERY).terms
    poi_space.register_source(DataSource("D1", "D", "d.terms"))
    after = poi_space.execute(poi.QUERY).terms
    assert set(before) < set(after)
    assert after[: len(before)] == before


def test_state_round_trip(poi_space):
    again = DataSpace.load(poi_space.state_path)
    assert again.to_state() == poi_space.to_state()
    assert again.execute(poi.QUERY).terms == poi_space.execute(poi.QUERY).terms


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "s.json"
    path.write_text("{not json")
    with pytest.raises(DataspaceError):
        DataSpace.load(path)


ECHO = "import sys\nsys.stdout.write(sys.stdin.read())\n"
CONST = "import sys\nsys.stdin.read()\nprint('(name = \"Zed\", date_of_birth = 2000-01-01)')\n"
CRASH = "import sys\nsys.exit(3)\n"


def manifest(space, name, script, interface, bindings=()):
    path = Path(space.base_dir, name + ".py")
    path.write_text(script)
    return AnalyticManifest(name, parse_type(interface, symbols=space.symbols), (sys.executable, str(path)), bindings)


def test_identity_analytic(poi_space):
    poi_space.register_analytic(manifest(poi_space, "echo", ECHO, "forall x: A. (true -> exists y: A. true)"))
    t = parse_term('(name = "Ann", date_of_birth = 1990-01-02)')
    assert poi_space.invoke_analytic("echo", t) == t
    assert "echo" in DataSpace.load(poi_space.state_path).analytics


def test_postcondition_rejection(poi_space):
    iface = "forall x: A. (true -> exists y: A. y.name == x.name)"
    poi_space.register_analytic(manifest(poi_space, "const", CONST, iface))
    with pytest.raises(PostconditionViolated):
        poi_space.invoke_analytic("const", parse_term('(name = "Ann", date_of_birth = 1990-01-02)'))


def test_precondition_rejection(poi_space):
    iface = 'forall x: A. (x.name == "Ann" -> exists y: A. true)'
    poi_space.register_analytic(manifest(poi_space, "only_ann", ECHO, iface))
    with pytest.raises(PreconditionViolated):
        poi_space.invoke_analytic("only_ann", parse_term('(name = "Bob", date_of_birth = 1990-01-02)'))
    with pytest.raises(PreconditionViolated):
        poi_space.invoke_analytic("only_ann", parse_term('(name = "Ann")'))


def test_failing_analytic(poi_space):
    poi_space.register_analytic(manifest(poi_space, "crash", CRASH, "forall x: A. (true -> exists y: A. true)"))
    with pytest.raises(AnalyticError):
        poi_space.invoke_analytic("crash", parse_term('(name = "Ann", date_of_birth = 1990-01-02)'))


def test_bounded_analytic_interface(poi_space):
    iface = "forall X <= A. forall x: X. (true -> exists y: X. y = x)"
    m = manifest(poi_space, "echo_b", ECHO, iface, (("X", "B"),))
    poi_space.register_analytic(m)
    t = parse_term('(name = "Cy", date_of_birth = 1970-03-04, ethnicity = "E1")')
    assert poi_space.invoke_analytic("echo_b", t) == t
    with pytest.raises(DataspaceError):
        poi_space.register_analytic(manifest(poi_space, "bad", ECHO, iface, (("X", "Woman"),)))
    with pytest.raises(DataspaceError):
        poi_space.register_analytic(manifest(poi_space, "unbound", ECHO, iface))


@pytest.fixture
def http_root(tmp_path):
    root = poi.write_files(tmp_path / "served")

    class Quiet(http.server.SimpleHTTPRequestHandler):
        def log_message(self, *args):
            pass

    handler = functools.partial(Quiet, directory=str(root))
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield root, f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def test_http_sources(http_root):
    root, base = http_root
    space = poi.build_space(root, [("A1", "A", f"{base}/a.terms"), ("C1", "C", f"{base}/c.terms"),
                                   ("Gone", "B", f"{base}/missing.terms")])
    result = space.execute(poi.QUERY)
    assert names(result) == ["Ann", "Bob", "Ed", "Flo"]
    assert [f[0] for f in result.failures] == ["Gone"]
