"""Command line interface.

Exit codes: 0 success, 1 refuted or false, 2 input error, 3 prover limit
exhausted, 4 transport or analytic failure.
"""

from __future__ import annotations

import os
import shlex
import sys
from pathlib import Path

import click

from .coercion import DEFAULT_PAD_WIDTH, extract, format_coercion, summarize
from .core import Schema
from .dataspace import AnalyticManifest, DataSource, DataSpace, parse_query
from .errors import DataspaceError, DepthExhausted, TTIQError
from .interp import Interpreter
from .prover import ProverLimits, enumerate_proofs, format_proof, prove
from .syntax import format_term, format_type, load_schema, parse_term, parse_type
from .taxonomy import Taxonomy, load_taxonomy

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_LIMIT, EXIT_TRANSPORT = 0, 1, 2, 3, 4


class Context:
    def __init__(self, state: str, schema: str | None, taxonomy: str | None):
        self.state_path = Path(state)
        self.schema_file = schema
        self.taxonomy_file = taxonomy
        self._space: DataSpace | None = None

    def space(self) -> DataSpace:
        if self._space is None:
            if not self.state_path.exists():
                raise DataspaceError(f"no dataspace at {self.state_path}; run 'ttiq init SCHEMA' first")
            self._space = DataSpace.load(self.state_path)
        return self._space

    def schema(self) -> Schema:
        if self.schema_file:
            return load_schema(self.schema_file)
        if self.state_path.exists():
            return self.space().schema
        return Schema()

    def taxonomy(self) -> Taxonomy:
        if self.taxonomy_file:
            return load_taxonomy(self.taxonomy_file)
        if self.state_path.exists():
            return self.space().taxonomy
        return Taxonomy()

    def interpreter(self) -> Interpreter:
        if self.state_path.exists() and not self.schema_file:
            return self.space().interpreter
        return Interpreter(schema=self.schema())

    def symbols(self) -> frozenset[str]:
        return self.schema().symbols() | self.interpreter().reg.names()


pass_ctx = click.make_pass_decorator(Context)


@click.group()
@click.option("--state", default=lambda: os.environ.get("TTIQ_STATE", "ttiq-space.json"),
              show_default="ttiq-space.json or $TTIQ_STATE", help="Dataspace state file.")
@click.option("--schema", "schema_file", type=click.Path(exists=True, dir_okay=False),
              help="Schema file (overrides the dataspace's).")
@click.option("--taxonomy", "taxonomy_file", type=click.Path(exists=True, dir_okay=False),
              help="Taxonomy file (overrides the dataspace's).")
@click.pass_context
def cli(ctx, state, schema_file, taxonomy_file):
    """TTIQ subtyping, coercion and dataspace tool."""
    ctx.obj = Context(state, schema_file, taxonomy_file)


@cli.command()
@click.argument("schema", type=click.Path(exists=True, dir_okay=False))
@click.option("--taxonomy", "taxonomy_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--max-depth", default=64, show_default=True)
@click.option("--max-proofs", default=16, show_default=True)
@click.option("--pad-width", default=DEFAULT_PAD_WIDTH, show_default=True)
@pass_ctx
def init(obj: Context, schema, taxonomy_file, max_depth, max_proofs, pad_width):
    """Create a dataspace state file bound to SCHEMA."""
    DataSpace.create(obj.state_path, schema, taxonomy_file,
                     limits=ProverLimits(max_depth, max_proofs), pad_width=pad_width)
    click.echo(f"created {obj.state_path}")


@cli.command("parse")
@click.argument("text")
@click.option("--term", "as_term", is_flag=True, help="Parse a term instead of a type.")
@pass_ctx
def parse_cmd(obj: Context, text, as_term):
    """Parse TEXT and print it back in canonical form."""
    if as_term:
        click.echo(format_term(parse_term(text, obj.symbols())))
    else:
        click.echo(format_type(parse_type(text, obj.schema())))


def _bindings(obj: Context, pairs) -> dict:
    out = {}
    for pair in pairs:
        name, sep, text = pair.partition("=")
        if not sep:
            raise click.BadParameter(f"expected NAME=TERM, got {pair!r}", param_hint="--bind")
        out[name.strip()] = parse_term(text, obj.symbols())
    return out


@cli.command("eval")
@click.argument("text")
@click.option("--bind", "binds", multiple=True, metavar="NAME=TERM")
@pass_ctx
def eval_cmd(obj: Context, text, binds):
    """Evaluate a term."""
    interp = obj.interpreter()
    term = parse_term(text, obj.symbols())
    click.echo(format_term(interp.eval(term, _bindings(obj, binds))))


@cli.command()
@click.argument("term")
@click.argument("type_text", metavar="TYPE")
@click.option("--explain", is_flag=True, help="Print the membership trace.")
@pass_ctx
def check(obj: Context, term, type_text, explain):
    """Check that TERM inhabits TYPE."""
    interp = obj.interpreter()
    t = interp.eval(parse_term(term, obj.symbols()))
    result = interp.check(t, parse_type(type_text, obj.schema()))
    if explain:
        click.echo("\n".join(result.trace))
    click.echo("true" if result.ok else "false")
    return EXIT_OK if result.ok else EXIT_FALSE


def _limits(obj: Context, max_depth, enumerate_n) -> ProverLimits:
    base = obj.space().limits if obj.state_path.exists() else ProverLimits()
    return ProverLimits(max_depth or base.max_depth, enumerate_n or base.max_proofs)


@cli.command()
@click.argument("sub")
@click.argument("sup")
@click.option("--explain", is_flag=True, help="Print the proof tree.")
@click.option("--enumerate", "enumerate_n", type=int, default=None, metavar="N", help="List up to N proofs.")
@click.option("--max-depth", type=int, default=None)
@pass_ctx
def subtype(obj: Context, sub, sup, explain, enumerate_n, max_depth):
    """Prove SUB <= SUP."""
    schema, tax = obj.schema(), obj.taxonomy()
    s, p = parse_type(sub, schema), parse_type(sup, schema)
    limits = _limits(obj, max_depth, enumerate_n)
    if enumerate_n:
        proofs = enumerate_proofs(schema.env, s, p, tax, limits, schema)
        for i, proof in enumerate(proofs):
            click.echo(f"[{i}] {summarize(extract(proof, schema=schema))}")
            if explain:
                click.echo(format_proof(proof, schema))
        click.echo(f"{len(proofs)} proof(s)")
        return EXIT_OK if proofs else EXIT_FALSE
    proof = prove(schema.env, s, p, tax, limits, schema)
    if proof is None:
        click.echo("refuted")
        return EXIT_FALSE
    click.echo(format_proof(proof, schema) if explain else f"proved by {proof.rule}")
    return EXIT_OK


@cli.group()
def coerce():
    """Extract or apply the coercion of a subtype proof."""


def _coercion(obj: Context, sub, sup, index, pad_width):
    schema, tax = obj.schema(), obj.taxonomy()
    s, p = parse_type(sub, schema), parse_type(sup, schema)
    limits = _limits(obj, None, max(index + 1, 1))
    proofs = enumerate_proofs(schema.env, s, p, tax, limits, schema)
    if not proofs:
        # rerun prove so depth exhaustion is reported as such
        prove(schema.env, s, p, tax, limits, schema)
        return None
    if index >= len(proofs):
        raise DataspaceError(f"proof index {index} out of range 0..{len(proofs) - 1}")
    return extract(proofs[index], pad_width, schema)


@coerce.command("extract")
@click.argument("sub")
@click.argument("sup")
@click.option("--pad-width", default=DEFAULT_PAD_WIDTH, show_default=True)
@click.option("--index", default=0, show_default=True, help="Which enumerated proof to use.")
@pass_ctx
def coerce_extract(obj: Context, sub, sup, pad_width, index):
    k = _coercion(obj, sub, sup, index, pad_width)
    if k is None:
        click.echo("refuted")
        return EXIT_FALSE
    click.echo(format_coercion(k))


@coerce.command("apply")
@click.argument("sub")
@click.argument("sup")
@click.argument("term")
@click.option("--pad-width", default=DEFAULT_PAD_WIDTH, show_default=True)
@click.option("--index", default=0, show_default=True)
@pass_ctx
def coerce_apply(obj: Context, sub, sup, term, pad_width, index):
    k = _coercion(obj, sub, sup, index, pad_width)
    if k is None:
        click.echo("refuted")
        return EXIT_FALSE
    interp = obj.interpreter()
    t = interp.eval(parse_term(term, obj.symbols()))
    membership = interp.check(t, k.source)
    if not membership.ok:
        click.echo("\n".join(membership.trace), err=True)
        raise DataspaceError(f"{format_term(t)} is not a {format_type(k.source)}")
    click.echo(format_term(k.apply(t)))


@cli.group()
def source():
    """Register and list data sources."""


@source.command("register")
@click.argument("name")
@click.argument("type_name", metavar="TYPE")
@click.argument("transport")
@pass_ctx
def source_register(obj: Context, name, type_name, transport):
    """Register NAME holding terms of TYPE at TRANSPORT (file path or http URL)."""
    space = obj.space()
    if not transport.startswith(("http://", "https://")):
        transport = str(Path(transport).resolve())
    click.echo(str(space.register_source(DataSource(name, type_name, transport))))


@source.command("list")
@pass_ctx
def source_list(obj: Context):
    for src in sorted(obj.space().sources.values(), key=lambda s: s.name):
        click.echo(f"{src.name}\t{src.schema_type}\t{src.transport}")


@cli.command()
@click.argument("text")
@click.option("--dedupe", is_flag=True, help="Drop structurally equal rows.")
@click.option("--plan", "show_plan", is_flag=True, help="Print the plan before the rows.")
@pass_ctx
def query(obj: Context, text, dedupe, show_plan):
    """Run a SELECT query against the dataspace."""
    space = obj.space()
    q = parse_query(text, space.symbols)
    if show_plan:
        for entry in space.plan(q):
            click.echo(f"# plan {entry.source.name}: proof {entry.proof_index} {summarize(entry.coercion)}")
    result = space.execute(q, dedupe=dedupe)
    for name in result.type_names:
        click.echo(name)
    for row in result.rows:
        click.echo(f"{format_term(row.term)}\t# source={row.source} proof={row.proof_index} coercion={row.coercion}")
    for src, line, why in result.malformed:
        click.echo(f"skipped {src}:{line}: {why}", err=True)
    for src, why in result.failures:
        click.echo(f"failed {src}: {why}", err=True)
    return EXIT_TRANSPORT if result.failures else EXIT_OK


@cli.command("select-coercion")
@click.argument("source_name", metavar="SOURCE")
@click.argument("target")
@click.argument("index", type=int, required=False)
@pass_ctx
def select_coercion(obj: Context, source_name, target, index):
    """Choose which proof (and so which coercion) SOURCE uses for TARGET.

    Without INDEX, list the alternatives.
    """
    space = obj.space()
    if source_name not in space.sources:
        raise DataspaceError(f"unknown source {source_name!r}")
    if index is None:
        current = space.selections.get((source_name, target), 0)
        proofs = space.proofs(space.sources[source_name].schema_type, target)
        for i, proof in enumerate(proofs):
            mark = "*" if i == current else " "
            click.echo(f"{mark}[{i}] {summarize(extract(proof, space.pad_width, space.schema))}")
        return EXIT_OK if proofs else EXIT_FALSE
    proof = space.select_coercion(source_name, target, index)
    click.echo(f"{source_name} -> {target}: using proof {index} "
               f"{summarize(extract(proof, space.pad_width, space.schema))}")


@cli.group()
def analytic():
    """Register and run external analytics."""


@analytic.command("register")
@click.argument("name")
@click.option("--interface", required=True, help="Interface type, e.g. 'forall x: T. (pre -> exists y: U. post)'.")
@click.option("--bind", "binds", multiple=True, metavar="VAR=TYPE", help="Bind a type variable to a schema type.")
@click.option("--command", "command", required=True, help="Command line to run (shell-style quoting).")
@pass_ctx
def analytic_register(obj: Context, name, interface, binds, command):
    space = obj.space()
    bindings = []
    for b in binds:
        var, sep, ty = b.partition("=")
        if not sep:
            raise click.BadParameter(f"expected VAR=TYPE, got {b!r}", param_hint="--bind")
        bindings.append((var.strip(), ty.strip()))
    iface = parse_type(interface, symbols=space.symbols)
    space.register_analytic(AnalyticManifest(name, iface, tuple(shlex.split(command)), tuple(sorted(bindings))))
    click.echo(f"registered analytic {name}")


@analytic.command("run")
@click.argument("name")
@click.argument("term")
@pass_ctx
def analytic_run(obj: Context, name, term):
    space = obj.space()
    click.echo(format_term(space.invoke_analytic(name, parse_term(term, space.symbols))))


@cli.group()
def taxonomy():
    """Load or show the label/constructor taxonomy."""


@taxonomy.command("load")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@pass_ctx
def taxonomy_load(obj: Context, path):
    tax = load_taxonomy(path)
    space = obj.space()
    space.set_taxonomy(tax, os.path.relpath(Path(path).resolve(), space.base_dir))
    click.echo(f"loaded {len(tax.label_edges)} label and {len(tax.ctor_edges)} ctor edges")


@taxonomy.command("show")
@pass_ctx
def taxonomy_show(obj: Context):
    click.echo(obj.taxonomy().dumps(), nl=False)


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="ttiq", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_INPUT
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except DepthExhausted as exc:
        click.echo(f"limit exhausted: {exc}", err=True)
        return EXIT_LIMIT
    except TTIQError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
