"""Middle tier: source registration, query planning and execution, analytics.

Subsumption between registered schema types is proved once, when a source is
registered, and cached. Queries then only read the cache, fetch terms from
the planned sources, and push each term through the selected coercion.
"""

from __future__ import annotations

import json
import logging
import os
import re
import subprocess
import threading
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .coercion import DEFAULT_PAD_WIDTH, Coercion, extract, summarize
from .core import (
    TRUE,
    Arrow,
    BoolLit,
    BoundedProd,
    BoundedSum,
    DepProd,
    DepSum,
    Named,
    PropEmbed,
    Schema,
    StrLit,
    Term,
    TypeExpr,
    free_vars,
    substitute_named,
)
from .errors import (
    AnalyticError,
    DataspaceError,
    EvalError,
    ParseError,
    PostconditionViolated,
    PreconditionViolated,
    TransportError,
    UnknownTypeError,
)
from .interp import Interpreter, SymbolRegistry, default_registry
from .prover import ProofTree, ProverLimits, enumerate_proofs
from .syntax import format_term, format_type, is_identifier, load_schema, parse_term, parse_type
from .taxonomy import Taxonomy, load_taxonomy

log = logging.getLogger(__name__)

STATE_VERSION = 1


@dataclass(frozen=True)
class DataSource:
    name: str
    schema_type: str
    transport: str
    format: str = "term-per-line"

    @property
    def is_http(self) -> bool:
        return self.transport.startswith(("http://", "https://"))


@dataclass(frozen=True)
class InstanceQuery:
    """``SELECT ?x FROM ?x a T [WHERE cond]``: all terms of type T."""

    target: str
    var: str = "?x"
    condition: Term | None = None


@dataclass(frozen=True)
class BoundedQuery:
    """``SELECT ?X FROM ?X <= T [WHERE cond]``: registered types below T."""

    bound: str
    type_var: str = "?X"
    condition: Term | None = None

    @property
    def target(self) -> str:
        return self.bound


Query = Union[InstanceQuery, BoundedQuery]

_QUERY_RE = re.compile(
    r"""^\s*SELECT\s+(?P<sel>\?\w+)\s+FROM\s+(?P<var>\?\w+)\s+
        (?:(?P<a>a)|(?P<le><=))\s+(?P<type>[A-Za-z_]\w*)
        (?:\s+WHERE\s+(?P<cond>.+?))?\s*$""",
    re.VERBOSE | re.DOTALL,
)


def parse_query(text: str, symbols=()) -> Query:
    m = _QUERY_RE.match(text)
    if m is None:
        raise ParseError("expected 'SELECT ?x FROM ?x a Type [WHERE term]' or 'SELECT ?X FROM ?X <= Type [WHERE term]'")
    if m["sel"] != m["var"]:
        raise ParseError(f"selected variable {m['sel']} is not the FROM variable {m['var']}")
    var = m["var"]
    condition = parse_term(m["cond"], symbols) if m["cond"] else None
    if condition is not None:
        extra = free_vars(condition) - {var}
        if extra:
            raise ParseError(f"condition mentions variables other than {var}: {', '.join(sorted(extra))}")
    if m["a"]:
        return InstanceQuery(m["type"], var, condition)
    return BoundedQuery(m["type"], var, condition)


def format_query(q: Query) -> str:
    if isinstance(q, InstanceQuery):
        text = f"SELECT {q.var} FROM {q.var} a {q.target}"
    else:
        text = f"SELECT {q.type_var} FROM {q.type_var} <= {q.bound}"
    if q.condition is not None:
        text += " WHERE " + format_term(q.condition)
    return text


@dataclass(frozen=True)
class PlanEntry:
    source: DataSource
    proof: ProofTree
    proof_index: int
    coercion: Coercion


@dataclass(frozen=True)
class QueryPlan:
    target: str
    entries: tuple[PlanEntry, ...] = ()

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def sources(self) -> list[str]:
        return [e.source.name for e in self.entries]


@dataclass(frozen=True)
class Row:
    term: Term
    source: str
    proof_index: int
    coercion: str


@dataclass
class QueryResult:
    rows: list[Row] = field(default_factory=list)
    type_names: list[str] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)
    malformed: list[tuple[str, int, str]] = field(default_factory=list)

    @property
    def terms(self) -> list[Term]:
        return [row.term for row in self.rows]


@dataclass(frozen=True)
class Relation:
    sub: str
    sup: str
    proofs: int


@dataclass
class RegistrationReport:
    source: str
    relations: list[Relation] = field(default_factory=list)

    def __str__(self) -> str:
        if not self.relations:
            return f"registered {self.source}; no relations to existing types"
        lines = [f"registered {self.source}"]
        lines += [f"  {r.sub} <= {r.sup}  ({r.proofs} proof{'s' if r.proofs != 1 else ''})" for r in self.relations]
        return "\n".join(lines)


@dataclass(frozen=True)
class AnalyticManifest:
    """An external procedure with a typed pre/postcondition interface.

    ``interface`` has the shape
    ``forall X <= U. forall x: T. (pre -> exists Y <= V. forall y: T2. post)``
    (both bounded prefixes optional, and the output may also be written
    ``exists y: T2. post``). ``bindings`` fixes each type variable to a
    schema type; no instantiation search is done.
    """

    name: str
    interface: TypeExpr
    command: tuple[str, ...]
    bindings: tuple[tuple[str, str], ...] = ()

    def parts(self):
        t = self.interface
        bounds: list[tuple[str, TypeExpr]] = []
        while isinstance(t, BoundedProd):
            bounds.append((t.type_var, t.bound))
            t = t.body
        if not isinstance(t, DepProd):
            raise DataspaceError(f"analytic {self.name}: interface must quantify its input with 'forall x: T.'")
        in_var, in_type, body = t.var, t.domain, t.body
        if not isinstance(body, Arrow):
            raise DataspaceError(f"analytic {self.name}: expected 'precondition -> output' after the input binder")
        pre, out = body.antecedent, body.consequent
        while isinstance(out, BoundedSum):
            bounds.append((out.type_var, out.bound))
            out = out.body
        if not isinstance(out, (DepProd, DepSum)):
            raise DataspaceError(f"analytic {self.name}: output must bind a variable, e.g. 'exists y: T. post'")
        out_var, out_type, post = out.var, out.domain, out.body
        for what, prop in (("precondition", pre), ("postcondition", post)):
            if not isinstance(prop, PropEmbed):
                raise DataspaceError(f"analytic {self.name}: {what} must be a proposition term")
        mapping = {var: Named(name) for var, name in self.bindings}
        return {
            "bounds": bounds,
            "in_var": in_var,
            "in_type": substitute_named(in_type, mapping),
            "pre": pre.term,
            "out_var": out_var,
            "out_type": substitute_named(out_type, mapping),
            "post": post.term,
        }


class DataSpace:
    """A registry of typed data sources that answers queries across them."""

    def __init__(
        self,
        schema: Schema,
        taxonomy: Taxonomy | None = None,
        registry: SymbolRegistry | None = None,
        limits: ProverLimits | None = None,
        pad_width: int = DEFAULT_PAD_WIDTH,
        base_dir: str | Path | None = None,
    ):
        self.schema = schema
        self.taxonomy = taxonomy or Taxonomy()
        self.registry = registry if registry is not None else default_registry()
        self.limits = limits or ProverLimits()
        self.pad_width = pad_width
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.sources: dict[str, DataSource] = {}
        self.selections: dict[tuple[str, str], int] = {}
        self.analytics: dict[str, AnalyticManifest] = {}
        self.schema_path: str | None = None
        self.taxonomy_path: str | None = None
        self.state_path: Path | None = None
        self._proof_cache: dict[tuple[str, str], list[ProofTree]] = {}
        self._lock = threading.RLock()

    @property
    def interpreter(self) -> Interpreter:
        return Interpreter(self.registry, self.schema)

    @property
    def symbols(self) -> frozenset[str]:
        return self.schema.symbols() | self.registry.names()

    def registered_types(self) -> list[str]:
        return sorted({src.schema_type for src in self.sources.values()})

    def _require_type(self, name: str) -> None:
        if name not in self.schema:
            raise UnknownTypeError(f"unknown type name {name!r}")

    def proofs(self, sub: str, sup: str) -> list[ProofTree]:
        """Cached enumeration of proofs of ``sub <= sup`` between schema type names."""
        key = (sub, sup)
        with self._lock:
            cached = self._proof_cache.get(key)
        if cached is None:
            self._require_type(sub)
            self._require_type(sup)
            cached = enumerate_proofs(self.schema.env, Named(sub), Named(sup), self.taxonomy, self.limits, self.schema)
            with self._lock:
                self._proof_cache[key] = cached
        return cached

    def set_taxonomy(self, taxonomy: Taxonomy, path: str | None = None) -> None:
        with self._lock:
            self.taxonomy = taxonomy
            self.taxonomy_path = path
            self._proof_cache.clear()
            self._autosave()

    # -- registration -------------------------------------------------------

    def _transport_path(self, src: DataSource) -> Path:
        p = Path(src.transport)
        return p if p.is_absolute() else self.base_dir / p

    def register_source(self, src: DataSource) -> RegistrationReport:
        if not is_identifier(src.name):
            raise DataspaceError(f"source name {src.name!r} is not an identifier")
        self._require_type(src.schema_type)
        if src.format != "term-per-line":
            raise DataspaceError(f"unsupported source format {src.format!r}")
        if src.is_http:
            parsed = urllib.parse.urlparse(src.transport)
            if not parsed.netloc:
                raise DataspaceError(f"malformed URL {src.transport!r}")
        elif not self._transport_path(src).is_file():
            raise DataspaceError(f"source file {src.transport!r} does not exist")
        with self._lock:
            if src.name in self.sources:
                raise DataspaceError(f"source {src.name!r} is already registered")
            report = RegistrationReport(src.name)
            for other in self.registered_types():
                if other == src.schema_type:
                    continue
                for sub, sup in ((src.schema_type, other), (other, src.schema_type)):
                    found = self.proofs(sub, sup)
                    if found:
                        report.relations.append(Relation(sub, sup, len(found)))
            self.sources[src.name] = src
            log.info("registered source %s of type %s", src.name, src.schema_type)
            self._autosave()
        return report

    # -- planning and execution ----------------------------------------------

    def plan(self, q: Query | str) -> QueryPlan:
        if isinstance(q, str):
            q = parse_query(q, self.symbols)
        target = q.target
        self._require_type(target)
        entries = []
        for name in sorted(self.sources):
            src = self.sources[name]
            found = self.proofs(src.schema_type, target)
            if not found:
                continue
            index = self.selections.get((name, target), 0)
            if index >= len(found):
                index = 0
            proof = found[index]
            entries.append(PlanEntry(src, proof, index, extract(proof, self.pad_width, self.schema)))
        return QueryPlan(target, tuple(entries))

    def fetch(self, src: DataSource) -> str:
        try:
            if src.is_http:
                with urllib.request.urlopen(src.transport, timeout=10) as resp:
                    return resp.read().decode("utf-8")
            return self._transport_path(src).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise TransportError(f"{src.name}: {exc}") from exc

    def _source_rows(self, entry: PlanEntry, q: InstanceQuery, interp: Interpreter):
        """Fetch, check, coerce and filter one source. Returns (rows, malformed)."""
        src = entry.source
        text = self.fetch(src)
        rows: list[Row] = []
        malformed: list[tuple[str, int, str]] = []
        src_type = Named(src.schema_type)
        target = Named(q.target)
        summary = summarize(entry.coercion)
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                term = parse_term(stripped, self.symbols)
            except ParseError as exc:
                malformed.append((src.name, lineno, str(exc)))
                continue
            if not interp.member(term, src_type):
                malformed.append((src.name, lineno, f"not a {src.schema_type}"))
                continue
            coerced = entry.coercion.apply(term)
            if not interp.member(coerced, target):
                raise DataspaceError(f"coercion for {src.name} produced {format_term(coerced)}, not a {q.target}")
            if q.condition is not None:
                verdict = interp.eval(q.condition, {q.var: coerced})
                if not isinstance(verdict, BoolLit):
                    raise EvalError(f"condition evaluated to non-boolean {format_term(verdict)}")
                if not verdict.value:
                    continue
            rows.append(Row(coerced, src.name, entry.proof_index, summary))
        return rows, malformed

    def execute(self, q: Query | str, dedupe: bool = False) -> QueryResult:
        if isinstance(q, str):
            q = parse_query(q, self.symbols)
        if isinstance(q, BoundedQuery):
            return self._execute_bounded(q)
        plan = self.plan(q)
        interp = self.interpreter
        result = QueryResult()
        if not plan.entries:
            return result
        with ThreadPoolExecutor(max_workers=min(8, len(plan.entries))) as pool:
            futures = [pool.submit(self._source_rows, entry, q, interp) for entry in plan.entries]
            # merged in plan order (source name), whatever order fetches finish in
            for entry, fut in zip(plan.entries, futures):
                try:
                    rows, malformed = fut.result()
                except TransportError as exc:
                    result.failures.append((entry.source.name, str(exc)))
                    continue
                result.rows.extend(rows)
                result.malformed.extend(malformed)
        if dedupe:
            seen = set()
            unique = []
            for row in result.rows:
                if row.term not in seen:
                    seen.add(row.term)
                    unique.append(row)
            result.rows = unique
        return result

    def _execute_bounded(self, q: BoundedQuery) -> QueryResult:
        self._require_type(q.bound)
        interp = self.interpreter
        result = QueryResult()
        for name in self.registered_types():
            if not self.proofs(name, q.bound):
                continue
            if q.condition is not None:
                # the type variable stands for the type's name as a string
                if interp.eval(q.condition, {q.type_var: StrLit(name)}) != TRUE:
                    continue
            result.type_names.append(name)
        return result

    # -- coercion selection -------------------------------------------------

    def select_coercion(self, source: str, target: str, index: int) -> ProofTree:
        with self._lock:
            if source not in self.sources:
                raise DataspaceError(f"unknown source {source!r}")
            found = self.proofs(self.sources[source].schema_type, target)
            if not found:
                raise DataspaceError(f"{self.sources[source].schema_type} <= {target} has no proofs")
            if not 0 <= index < len(found):
                raise DataspaceError(f"proof index {index} out of range 0..{len(found) - 1}")
            self.selections[(source, target)] = index
            self._autosave()
            return found[index]

    # -- analytics ----------------------------------------------------------

    def register_analytic(self, manifest: AnalyticManifest) -> None:
        parts = manifest.parts()
        bound_vars = {var for var, _ in parts["bounds"]}
        given = dict(manifest.bindings)
        missing = bound_vars - set(given)
        if missing:
            raise DataspaceError(f"analytic {manifest.name}: unbound type variables {', '.join(sorted(missing))}")
        unused = set(given) - bound_vars
        if unused:
            raise DataspaceError(f"analytic {manifest.name}: no type variable named {', '.join(sorted(unused))}")
        for var, bound in parts["bounds"]:
            concrete = given[var]
            self._require_type(concrete)
            bound = substitute_named(bound, {v: Named(n) for v, n in given.items()})
            if not enumerate_proofs(self.schema.env, Named(concrete), bound, self.taxonomy, self.limits, self.schema):
                raise DataspaceError(f"analytic {manifest.name}: {concrete} is not a subtype of {format_type(bound)}")
        self.schema.check_references(parts["in_type"])
        self.schema.check_references(parts["out_type"])
        if not manifest.command:
            raise DataspaceError(f"analytic {manifest.name}: empty command")
        with self._lock:
            if manifest.name in self.analytics:
                raise DataspaceError(f"analytic {manifest.name!r} is already registered")
            self.analytics[manifest.name] = manifest
            self._autosave()

    def invoke_analytic(self, name: str, term: Term, timeout: float = 60.0) -> Term:
        if name not in self.analytics:
            raise DataspaceError(f"unknown analytic {name!r}")
        manifest = self.analytics[name]
        parts = manifest.parts()
        interp = self.interpreter
        in_env = {parts["in_var"]: term}
        if not interp.member(term, parts["in_type"]):
            raise PreconditionViolated(f"{format_term(term)} is not a {format_type(parts['in_type'])}")
        if interp.eval(parts["pre"], in_env) != TRUE:
            raise PreconditionViolated(f"precondition {format_term(parts['pre'])} is false for {format_term(term)}")
        try:
            proc = subprocess.run(
                list(manifest.command),
                input=format_term(term) + "\n",
                capture_output=True,
                text=True,
                timeout=timeout,
                cwd=self.base_dir,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise AnalyticError(f"analytic {name} failed to run: {exc}") from exc
        if proc.returncode != 0:
            raise AnalyticError(f"analytic {name} exited with status {proc.returncode}: {proc.stderr.strip()}")
        try:
            output = parse_term(proc.stdout.strip(), self.symbols)
        except ParseError as exc:
            raise PostconditionViolated(f"analytic {name} produced unparseable output: {exc}") from exc
        if not interp.member(output, parts["out_type"]):
            raise PostconditionViolated(f"{format_term(output)} is not a {format_type(parts['out_type'])}")
        out_env = dict(in_env)
        out_env[parts["out_var"]] = output
        if interp.eval(parts["post"], out_env) != TRUE:
            raise PostconditionViolated(f"postcondition {format_term(parts['post'])} is false for {format_term(output)}")
        return output

    # -- persistence --------------------------------------------------------

    def to_state(self) -> dict:
        return {
            "version": STATE_VERSION,
            "schema": self.schema_path,
            "taxonomy": self.taxonomy_path,
            "limits": {"max_depth": self.limits.max_depth, "max_proofs": self.limits.max_proofs},
            "pad_width": self.pad_width,
            "sources": [
                {"name": s.name, "type": s.schema_type, "transport": s.transport, "format": s.format}
                for s in sorted(self.sources.values(), key=lambda s: s.name)
            ],
            "selections": [
                {"source": src, "target": tgt, "index": idx} for (src, tgt), idx in sorted(self.selections.items())
            ],
            "analytics": [
                {
                    "name": a.name,
                    "interface": format_type(a.interface),
                    "bindings": dict(a.bindings),
                    "command": list(a.command),
                }
                for a in sorted(self.analytics.values(), key=lambda a: a.name)
            ],
        }

    def save(self, path: str | Path | None = None) -> None:
        path = Path(path) if path is not None else self.state_path
        if path is None:
            raise DataspaceError("no state file to save to")
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.to_state(), indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, path)
        self.state_path = path

    def _autosave(self) -> None:
        if self.state_path is not None:
            self.save()

    @classmethod
    def create(cls, state_path: str | Path, schema_path: str | Path, taxonomy_path: str | Path | None = None, **kwargs) -> "DataSpace":
        state_path = Path(state_path)
        base = state_path.resolve().parent
        schema_file = Path(schema_path).resolve()
        taxonomy = load_taxonomy(Path(taxonomy_path).resolve()) if taxonomy_path else Taxonomy()
        space = cls(load_schema(schema_file), taxonomy, base_dir=base, **kwargs)
        space.schema_path = _relative(schema_file, base)
        space.taxonomy_path = _relative(Path(taxonomy_path).resolve(), base) if taxonomy_path else None
        space.save(state_path)
        return space

    @classmethod
    def load(cls, state_path: str | Path, registry: SymbolRegistry | None = None) -> "DataSpace":
        state_path = Path(state_path)
        try:
            state = json.loads(state_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataspaceError(f"cannot read dataspace state {state_path}: {exc}") from exc
        base = state_path.resolve().parent
        if not state.get("schema"):
            raise DataspaceError("dataspace state names no schema file")
        schema = load_schema(base / state["schema"])
        taxonomy = load_taxonomy(base / state["taxonomy"]) if state.get("taxonomy") else Taxonomy()
        limits = ProverLimits(**state.get("limits", {}))
        space = cls(schema, taxonomy, registry, limits, state.get("pad_width", DEFAULT_PAD_WIDTH), base_dir=base)
        space.schema_path = state["schema"]
        space.taxonomy_path = state.get("taxonomy")
        for s in state.get("sources", []):
            src = DataSource(s["name"], s["type"], s["transport"], s.get("format", "term-per-line"))
            space.sources[src.name] = src
        for sel in state.get("selections", []):
            space.selections[(sel["source"], sel["target"])] = sel["index"]
        for a in state.get("analytics", []):
            interface = parse_type(a["interface"], symbols=space.symbols)
            space.analytics[a["name"]] = AnalyticManifest(
                a["name"], interface, tuple(a["command"]), tuple(sorted(a.get("bindings", {}).items()))
            )
        space.state_path = state_path
        return space


def _relative(path: Path, base: Path) -> str:
    try:
        return os.path.relpath(path, base)
    except ValueError:
        return str(path)
