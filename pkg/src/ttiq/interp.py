"""External interpreter: symbol registry, term evaluation and type membership."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence

from .core import (
    BOOL,
    EMPTY_SCHEMA,
    LITERALS,
    STRING,
    Arrow,
    BoolLit,
    Concrete,
    CtorApp,
    DateLit,
    DepSum,
    Enumerated,
    Environment,
    NumLit,
    Pair,
    Primitive,
    PropEmbed,
    Record,
    RecordTerm,
    Schema,
    Select,
    Signature,
    StrLit,
    SymApp,
    Term,
    TypeExpr,
    UriLit,
    Var,
    signature_parts,
)
from .errors import EvalError, TypeFormError
from .syntax import format_term, format_type
from .taxonomy import Taxonomy

Procedure = Callable[[Sequence[Term]], Term]

# Structural equality on arbitrary terms. It is a core form rather than a
# registry entry because no monomorphic signature can describe it.
TERM_EQUALITY = "="


@dataclass(frozen=True)
class Symbol:
    name: str
    signature: TypeExpr
    procedure: Procedure = field(compare=False)

    @property
    def params(self) -> tuple[TypeExpr, ...]:
        return signature_parts(self.signature)[0]

    @property
    def result(self) -> TypeExpr:
        return signature_parts(self.signature)[1]


@dataclass(frozen=True)
class SymbolRegistry:
    symbols: Mapping[str, Symbol] = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return name in self.symbols

    def __getitem__(self, name: str) -> Symbol:
        return self.symbols[name]

    def names(self) -> frozenset[str]:
        return frozenset(self.symbols)

    def register(self, name: str, signature: TypeExpr, procedure: Procedure) -> "SymbolRegistry":
        return register_symbol(self, name, signature, procedure)


def register_symbol(reg: SymbolRegistry, name: str, signature: TypeExpr, procedure: Procedure) -> SymbolRegistry:
    if name in reg.symbols or name == TERM_EQUALITY:
        raise EvalError(f"symbol {name!r} is already registered")
    if not isinstance(signature, (Arrow, Signature)):
        raise TypeFormError(f"signature of {name} must have the form T1 * ... * Tn -> P")
    _, result = signature_parts(signature)
    if not isinstance(result, Primitive):
        raise TypeFormError(f"symbol {name} must return a primitive type, not {format_type(result)}")
    symbols = dict(reg.symbols)
    symbols[name] = Symbol(name, signature, procedure)
    return SymbolRegistry(symbols)


def _string_equality(args: Sequence[Term]) -> Term:
    return BoolLit(args[0].value == args[1].value)


def default_registry() -> SymbolRegistry:
    return register_symbol(SymbolRegistry(), "==", Signature((STRING, STRING), BOOL), _string_equality)


class Membership(NamedTuple):
    """Outcome of a membership check; truthy when the term inhabits the type."""

    ok: bool
    trace: list[str]

    def __bool__(self) -> bool:
        return self.ok


class Interpreter:
    """Evaluation and membership against one registry/schema snapshot."""

    def __init__(self, reg: SymbolRegistry | None = None, schema: Schema | None = None):
        self.reg = reg if reg is not None else default_registry()
        self.schema = schema or EMPTY_SCHEMA

    def eval(self, t: Term, bindings: Mapping[str, Term] | None = None) -> Term:
        bindings = bindings or {}
        if isinstance(t, LITERALS):
            return t
        if isinstance(t, Var):
            if t.name not in bindings:
                raise EvalError(f"unbound variable {t.name}")
            return bindings[t.name]
        if isinstance(t, RecordTerm):
            return RecordTerm(tuple((label, self.eval(v, bindings)) for label, v in t.fields))
        if isinstance(t, CtorApp):
            return CtorApp(t.ctor, tuple(self.eval(a, bindings) for a in t.args))
        if isinstance(t, Pair):
            return Pair(self.eval(t.first, bindings), self.eval(t.second, bindings))
        if isinstance(t, Select):
            target = self.eval(t.target, bindings)
            if not isinstance(target, RecordTerm):
                raise EvalError(f"cannot select .{t.label} from non-record {format_term(target)}")
            value = target.get(t.label)
            if value is None:
                raise EvalError(f"record {format_term(target)} has no field {t.label!r}")
            return value
        if isinstance(t, SymApp):
            args = tuple(self.eval(a, bindings) for a in t.args)
            if t.symbol == TERM_EQUALITY:
                if len(args) != 2:
                    raise EvalError("= takes exactly two arguments")
                return BoolLit(args[0] == args[1])
            return self._call(t.symbol, args)
        raise EvalError(f"cannot evaluate {t!r}")

    def _call(self, name: str, args: tuple[Term, ...]) -> Term:
        if name not in self.reg:
            raise EvalError(f"unknown symbol {name!r}")
        sym = self.reg[name]
        params = sym.params
        if len(params) != len(args):
            raise EvalError(f"{name} expects {len(params)} arguments, got {len(args)}")
        for i, (param, arg) in enumerate(zip(params, args)):
            if not self.member(arg, param):
                raise EvalError(f"argument {i + 1} of {name}: {format_term(arg)} is not a {format_type(param)}")
        result = sym.procedure(args)
        if not self.member(result, sym.result):
            raise EvalError(f"{name} returned {format_term(result)}, not a {format_type(sym.result)}")
        return result

    def member(self, t: Term, ty: TypeExpr) -> bool:
        return self.check(t, ty).ok

    def check(self, t: Term, ty: TypeExpr, bindings: Mapping[str, Term] | None = None) -> Membership:
        trace: list[str] = []
        ok = self._check(t, ty, dict(bindings or {}), trace, 0)
        return Membership(ok, trace)

    def _check(self, t: Term, ty: TypeExpr, bindings: dict, trace: list[str], depth: int) -> bool:
        pad = "  " * depth

        def note(ok: bool, why: str = "") -> bool:
            mark = "ok" if ok else "FAIL"
            trace.append(f"{pad}{format_term(t)} : {format_type(ty)}  {mark}{'  ' + why if why else ''}")
            return ok

        r = self.schema.resolve(ty)
        if isinstance(r, Primitive):
            lit = {"string": StrLit, "num": NumLit, "bool": BoolLit, "date": DateLit, "uri": UriLit}[r.kind]
            return note(isinstance(t, lit), "" if isinstance(t, lit) else f"expected a {r.kind} literal")
        if isinstance(r, Enumerated):
            ok = isinstance(t, StrLit) and t.value in r.values
            return note(ok, "" if ok else "not one of the enumerated values")
        if isinstance(r, Record):
            if not isinstance(t, RecordTerm):
                return note(False, "expected a record")
            if set(t.labels) != set(r.labels):
                return note(False, f"labels {sorted(t.labels)} differ from {sorted(r.labels)}")
            mark = len(trace)
            ok = all(self._check(t.get(label), fty, bindings, trace, depth + 1) for label, fty in r.fields)
            trace.insert(mark, f"{pad}{format_term(t)} : {format_type(ty)}  {'ok' if ok else 'FAIL'}")
            return ok
        if isinstance(r, Concrete):
            if not isinstance(t, CtorApp) or t.ctor != r.ctor:
                return note(False, f"expected an application of {r.ctor}")
            if len(t.args) != len(r.args):
                return note(False, "wrong number of constructor arguments")
            mark = len(trace)
            ok = all(self._check(a, aty, bindings, trace, depth + 1) for a, aty in zip(t.args, r.args))
            trace.insert(mark, f"{pad}{format_term(t)} : {format_type(ty)}  {'ok' if ok else 'FAIL'}")
            return ok
        if isinstance(r, DepSum):
            if not isinstance(t, Pair):
                return note(False, "expected a pair (witness, evidence)")
            mark = len(trace)
            ok = self._check(t.first, r.domain, bindings, trace, depth + 1)
            if ok:
                inner = dict(bindings)
                inner[r.var] = t.first
                ok = self._check(t.second, r.body, inner, trace, depth + 1)
            trace.insert(mark, f"{pad}{format_term(t)} : {format_type(ty)}  {'ok' if ok else 'FAIL'}")
            return ok
        if isinstance(r, PropEmbed):
            if t != BoolLit(True):
                return note(False, "evidence for a proposition must be true")
            value = self.eval(r.term, bindings)
            return note(value == BoolLit(True), f"evaluates to {format_term(value)}")
        return note(False, "unsupported type form")


def evaluate(
    t: Term,
    bindings: Mapping[str, Term] | None = None,
    reg: SymbolRegistry | None = None,
    schema: Schema | None = None,
) -> Term:
    return Interpreter(reg, schema).eval(t, bindings)


def check_membership(
    env: Environment | None,
    t: Term,
    ty: TypeExpr,
    reg: SymbolRegistry | None = None,
    tax: Taxonomy | None = None,
    schema: Schema | None = None,
) -> Membership:
    """Ground membership ``t : ty``; records need exactly the declared labels."""
    return Interpreter(reg, schema).check(t, ty)
