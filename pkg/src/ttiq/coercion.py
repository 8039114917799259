"""Executable coercions extracted from subtype proofs, and natural orderings.

A coercion tree mirrors the proof it came from node for node. ``apply`` runs
it on a ground term; ``natural_leq`` is the per-type order that every
coercion must preserve.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import (
    BOOL,
    EMPTY_SCHEMA,
    NUM,
    STRING,
    BoolLit,
    Concrete,
    CtorApp,
    DateLit,
    DepSum,
    Enumerated,
    NumLit,
    Pair,
    Primitive,
    Record,
    RecordTerm,
    Schema,
    StrLit,
    Term,
    TypeExpr,
    UriLit,
)
from .errors import CoercionError
from .prover import (
    BOOL_NUM,
    CONCRETE,
    EXISTS_FIRST,
    IDENTITY,
    SEM_REC,
    STR_PRIM,
    SYN_REC,
    ProofTree,
)
from .syntax import format_term, format_type

DEFAULT_PAD_WIDTH = 20


@dataclass(frozen=True, kw_only=True)
class Coercion:
    source: TypeExpr | None = None
    target: TypeExpr | None = None

    def __call__(self, t: Term) -> Term:
        return self.apply(t)

    def apply(self, t: Term) -> Term:
        raise NotImplementedError

    @property
    def children(self) -> tuple["Coercion", ...]:
        return ()

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


@dataclass(frozen=True, kw_only=True)
class IdentityC(Coercion):
    def apply(self, t: Term) -> Term:
        return t


@dataclass(frozen=True, kw_only=True)
class PrimToString(Coercion):
    """date, uri or bool rendered as a string whose lexicographic order matches."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("date", "uri", "bool"):
            raise CoercionError(f"no string rendering for primitive {self.kind}")
        if self.source is None:
            object.__setattr__(self, "source", Primitive(self.kind))
        if self.target is None:
            object.__setattr__(self, "target", STRING)

    def apply(self, t: Term) -> Term:
        if self.kind == "date" and isinstance(t, DateLit):
            return StrLit(t.value.isoformat())
        if self.kind == "uri" and isinstance(t, UriLit):
            return StrLit(t.value)
        if self.kind == "bool" and isinstance(t, BoolLit):
            return StrLit("true" if t.value else "false")
        raise CoercionError(f"expected a {self.kind} literal, got {format_term(t)}")


@dataclass(frozen=True, kw_only=True)
class NumToStringPadded(Coercion):
    """Non-negative integer as a zero-padded decimal of exactly ``width`` characters."""

    width: int = DEFAULT_PAD_WIDTH

    def __post_init__(self):
        if self.width < 1:
            raise CoercionError("pad width must be at least 1")
        if self.source is None:
            object.__setattr__(self, "source", NUM)
        if self.target is None:
            object.__setattr__(self, "target", STRING)

    def apply(self, t: Term) -> Term:
        if not isinstance(t, NumLit):
            raise CoercionError(f"expected a num literal, got {format_term(t)}")
        if t.value < 0:
            raise CoercionError(f"cannot pad negative number {t.value}")
        digits = str(t.value)
        if len(digits) > self.width:
            raise CoercionError(f"{t.value} has more than {self.width} digits")
        return StrLit(digits.rjust(self.width, "0"))


@dataclass(frozen=True, kw_only=True)
class BoolToNum(Coercion):
    def __post_init__(self):
        if self.source is None:
            object.__setattr__(self, "source", BOOL)
        if self.target is None:
            object.__setattr__(self, "target", NUM)

    def apply(self, t: Term) -> Term:
        if not isinstance(t, BoolLit):
            raise CoercionError(f"expected a bool literal, got {format_term(t)}")
        return NumLit(1 if t.value else 0)


@dataclass(frozen=True, kw_only=True)
class RecordC(Coercion):
    """Builds the target record field by field from matched source fields.

    ``fields[i] = (target_label, source_label)`` and ``field_coercions[i]``
    converts that field's value. Unmatched source fields are dropped.
    """

    matching: tuple[int, ...]
    fields: tuple[tuple[str, str], ...]
    field_coercions: tuple[Coercion, ...]

    @property
    def relabels(self) -> tuple[tuple[str, str], ...]:
        return tuple((src, tgt) for tgt, src in self.fields if src != tgt)

    @property
    def children(self) -> tuple[Coercion, ...]:
        return self.field_coercions

    def apply(self, t: Term) -> Term:
        if not isinstance(t, RecordTerm):
            raise CoercionError(f"expected a record, got {format_term(t)}")
        out = []
        for (target_label, source_label), k in zip(self.fields, self.field_coercions):
            value = t.get(source_label)
            if value is None:
                raise CoercionError(f"record {format_term(t)} has no field {source_label!r}")
            out.append((target_label, k.apply(value)))
        return RecordTerm(tuple(out))


@dataclass(frozen=True, kw_only=True)
class SumProject(Coercion):
    """Keeps the witness of a dependent pair and coerces it onward."""

    inner: Coercion

    @property
    def children(self) -> tuple[Coercion, ...]:
        return (self.inner,)

    def apply(self, t: Term) -> Term:
        if not isinstance(t, Pair):
            raise CoercionError(f"expected a dependent pair, got {format_term(t)}")
        return self.inner.apply(t.first)


@dataclass(frozen=True, kw_only=True)
class CtorMap(Coercion):
    from_ctor: str
    to_ctor: str
    arg_coercions: tuple[Coercion, ...]

    @property
    def children(self) -> tuple[Coercion, ...]:
        return self.arg_coercions

    def apply(self, t: Term) -> Term:
        if not isinstance(t, CtorApp) or t.ctor != self.from_ctor or len(t.args) != len(self.arg_coercions):
            raise CoercionError(
                f"expected {self.from_ctor}/{len(self.arg_coercions)} application, got {format_term(t)}"
            )
        return CtorApp(self.to_ctor, tuple(k.apply(a) for k, a in zip(self.arg_coercions, t.args)))


@dataclass(frozen=True, kw_only=True)
class Composed(Coercion):
    first: Coercion
    second: Coercion

    @property
    def children(self) -> tuple[Coercion, ...]:
        return (self.first, self.second)

    def apply(self, t: Term) -> Term:
        return self.second.apply(self.first.apply(t))


def extract(proof: ProofTree, pad_width: int = DEFAULT_PAD_WIDTH, schema: Schema | None = None) -> Coercion:
    """Translate a proof into its coercion, one coercion node per proof node."""
    schema = schema or EMPTY_SCHEMA
    ends = {"source": proof.sub, "target": proof.sup}
    rule = proof.rule
    if rule == IDENTITY:
        return IdentityC(**ends)
    if rule == STR_PRIM:
        s = schema.resolve(proof.sub)
        if s == NUM:
            width = proof.pad_width_hint or pad_width
            return NumToStringPadded(width=width, **ends)
        return PrimToString(kind=s.kind, **ends)
    if rule == BOOL_NUM:
        return BoolToNum(**ends)
    if rule in (SYN_REC, SEM_REC):
        s = schema.resolve(proof.sub)
        p = schema.resolve(proof.sup)
        fields = tuple((p.fields[i][0], s.fields[j][0]) for i, j in enumerate(proof.matching))
        children = tuple(extract(q, pad_width, schema) for q in proof.premises)
        return RecordC(matching=proof.matching, fields=fields, field_coercions=children, **ends)
    if rule == CONCRETE:
        s = schema.resolve(proof.sub)
        p = schema.resolve(proof.sup)
        children = tuple(extract(q, pad_width, schema) for q in proof.premises)
        return CtorMap(from_ctor=s.ctor, to_ctor=p.ctor, arg_coercions=children, **ends)
    if rule == EXISTS_FIRST:
        return SumProject(inner=extract(proof.premises[0], pad_width, schema), **ends)
    raise CoercionError(f"no coercion for rule {rule}")


def apply(k: Coercion, t: Term) -> Term:
    return k.apply(t)


def compose(k1: Coercion, k2: Coercion, schema: Schema | None = None) -> Coercion:
    """``k1`` then ``k2``; the seam types must agree when both are known."""
    if k1.target is not None and k2.source is not None:
        schema = schema or EMPTY_SCHEMA
        if schema.expand(k1.target) != schema.expand(k2.source):
            raise CoercionError(
                f"cannot compose: {format_type(k1.target)} does not match {format_type(k2.source)}"
            )
    return Composed(first=k1, second=k2, source=k1.source, target=k2.target)


# ---------------------------------------------------------------------------
# Serialization


def format_coercion(k: Coercion, indent: int = 0) -> str:
    pad = "  " * indent
    lines = [pad + _describe_node(k)]
    for child in k.children:
        lines.append(format_coercion(child, indent + 1))
    return "\n".join(lines)


def _describe_node(k: Coercion) -> str:
    if isinstance(k, IdentityC):
        return "IdentityC"
    if isinstance(k, PrimToString):
        return f"PrimToString {k.kind}"
    if isinstance(k, NumToStringPadded):
        return f"NumToStringPadded width={k.width}"
    if isinstance(k, BoolToNum):
        return "BoolToNum"
    if isinstance(k, RecordC):
        return "RecordC " + " ".join(f"{tgt}<-{src}" for tgt, src in k.fields)
    if isinstance(k, SumProject):
        return "SumProject"
    if isinstance(k, CtorMap):
        return f"CtorMap {k.from_ctor}->{k.to_ctor}"
    if isinstance(k, Composed):
        return "Composed"
    raise TypeError(k)


def summarize(k: Coercion) -> str:
    """One-line form used in query provenance."""
    if isinstance(k, IdentityC):
        return "id"
    if isinstance(k, PrimToString):
        return f"{k.kind}->string"
    if isinstance(k, NumToStringPadded):
        return f"num->string[{k.width}]"
    if isinstance(k, BoolToNum):
        return "bool->num"
    if isinstance(k, RecordC):
        parts = []
        for (tgt, src), child in zip(k.fields, k.field_coercions):
            label = tgt if tgt == src else f"{src}->{tgt}"
            inner = summarize(child)
            parts.append(label if inner == "id" else f"{label}:{inner}")
        return "{" + ", ".join(parts) + "}"
    if isinstance(k, SumProject):
        return f"first({summarize(k.inner)})"
    if isinstance(k, CtorMap):
        return f"{k.from_ctor}->{k.to_ctor}(" + ", ".join(summarize(c) for c in k.arg_coercions) + ")"
    if isinstance(k, Composed):
        return f"{summarize(k.first)};{summarize(k.second)}"
    raise TypeError(k)


# ---------------------------------------------------------------------------
# Natural partial orderings


class OrderResult(enum.Enum):
    LESS_OR_EQUAL = "LessOrEqual"
    GREATER_OR_EQUAL = "GreaterOrEqual"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"

    @property
    def is_leq(self) -> bool:
        return self in (OrderResult.LESS_OR_EQUAL, OrderResult.EQUAL)

    @property
    def is_geq(self) -> bool:
        return self in (OrderResult.GREATER_OR_EQUAL, OrderResult.EQUAL)


def _compare(a, b) -> OrderResult:
    if a == b:
        return OrderResult.EQUAL
    return OrderResult.LESS_OR_EQUAL if a < b else OrderResult.GREATER_OR_EQUAL


def _product(results) -> OrderResult:
    results = list(results)
    if all(r is OrderResult.EQUAL for r in results):
        return OrderResult.EQUAL
    if all(r.is_leq for r in results):
        return OrderResult.LESS_OR_EQUAL
    if all(r.is_geq for r in results):
        return OrderResult.GREATER_OR_EQUAL
    return OrderResult.INCOMPARABLE


_PRIM_LITERALS = {"string": StrLit, "num": NumLit, "bool": BoolLit, "date": DateLit, "uri": UriLit}


def natural_leq(t: TypeExpr, a: Term, b: Term, schema: Schema | None = None) -> OrderResult:
    """Compare two inhabitants of ``t`` under its natural partial ordering."""
    schema = schema or EMPTY_SCHEMA
    ty = schema.resolve(t)

    def wrong(term: Term):
        raise CoercionError(f"{format_term(term)} is not a term of type {format_type(t)}")

    if isinstance(ty, Primitive):
        lit = _PRIM_LITERALS[ty.kind]
        for x in (a, b):
            if not isinstance(x, lit):
                wrong(x)
        return _compare(a.value, b.value)
    if isinstance(ty, Enumerated):
        for x in (a, b):
            if not isinstance(x, StrLit) or x.value not in ty.values:
                wrong(x)
        return _compare(ty.values.index(a.value), ty.values.index(b.value))
    if isinstance(ty, Record):
        for x in (a, b):
            if not isinstance(x, RecordTerm) or set(x.labels) != set(ty.labels):
                wrong(x)
        return _product(natural_leq(fty, a.get(label), b.get(label), schema) for label, fty in ty.fields)
    if isinstance(ty, Concrete):
        for x in (a, b):
            if not isinstance(x, CtorApp) or len(x.args) != len(ty.args):
                wrong(x)
        if a.ctor != b.ctor:
            return OrderResult.INCOMPARABLE
        return _product(natural_leq(aty, x, y, schema) for aty, x, y in zip(ty.args, a.args, b.args))
    if isinstance(ty, DepSum):
        for x in (a, b):
            if not isinstance(x, Pair):
                wrong(x)
        return natural_leq(ty.domain, a.first, b.first, schema)
    raise CoercionError(f"no natural ordering defined for {format_type(t)}")
