"""Abstract syntax for TTIQ types and terms, environments and schemas.

All nodes are frozen dataclasses holding tuples, so they hash, compare
structurally and can be shared freely between threads.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from .errors import CyclicDefinitionError, TypeFormError, UnknownTypeError

PRIMITIVE_KINDS = ("string", "num", "bool", "uri", "date")


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class NumLit:
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise TypeFormError(f"num literal must be an integer, got {self.value!r}")


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class DateLit:
    value: datetime.date


@dataclass(frozen=True)
class UriLit:
    value: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class RecordTerm:
    fields: tuple[tuple[str, "Term"], ...]

    def __post_init__(self):
        _check_distinct([label for label, _ in self.fields], "record term")

    def get(self, label: str) -> "Term | None":
        for name, value in self.fields:
            if name == label:
                return value
        return None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.fields)


@dataclass(frozen=True)
class CtorApp:
    ctor: str
    args: tuple["Term", ...] = ()


@dataclass(frozen=True)
class Select:
    target: "Term"
    label: str


@dataclass(frozen=True)
class SymApp:
    symbol: str
    args: tuple["Term", ...] = ()


@dataclass(frozen=True)
class Pair:
    first: "Term"
    second: "Term"


Term = Union[StrLit, NumLit, BoolLit, DateLit, UriLit, Var, RecordTerm, CtorApp, Select, SymApp, Pair]
LITERALS = (StrLit, NumLit, BoolLit, DateLit, UriLit)

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def tuple_term(*items: Term) -> Term:
    """Right-nested pairs, so ``tuple_term(w, r, p, t)`` is ``(w, (r, (p, t)))``."""
    if len(items) < 2:
        raise TypeFormError("a tuple needs at least two components")
    result = items[-1]
    for item in reversed(items[:-1]):
        result = Pair(item, result)
    return result


def free_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    out: set[str] = set()
    for child in term_children(t):
        out |= free_vars(child)
    return out


def term_children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, RecordTerm):
        return tuple(v for _, v in t.fields)
    if isinstance(t, (CtorApp, SymApp)):
        return t.args
    if isinstance(t, Select):
        return (t.target,)
    if isinstance(t, Pair):
        return (t.first, t.second)
    return ()


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class Primitive:
    kind: str

    def __post_init__(self):
        if self.kind not in PRIMITIVE_KINDS:
            raise TypeFormError(f"unknown primitive type {self.kind!r}")


@dataclass(frozen=True)
class Enumerated:
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise TypeFormError("enumerated type must list at least one value")
        _check_distinct(self.values, "enumerated type")


@dataclass(frozen=True)
class Record:
    fields: tuple[tuple[str, "TypeExpr"], ...]

    def __post_init__(self):
        if not self.fields:
            raise TypeFormError("record type must have at least one field")
        _check_distinct([label for label, _ in self.fields], "record type")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.fields)


@dataclass(frozen=True)
class Concrete:
    ctor: str
    args: tuple["TypeExpr", ...]
    datatype: str = ""

    def __post_init__(self):
        if not self.args:
            raise TypeFormError(f"constructor {self.ctor} needs at least one argument type")
        if not self.datatype:
            object.__setattr__(self, "datatype", self.ctor)


@dataclass(frozen=True)
class DepSum:
    var: str
    domain: "TypeExpr"
    body: "TypeExpr"


@dataclass(frozen=True)
class DepProd:
    var: str
    domain: "TypeExpr"
    body: "TypeExpr"


@dataclass(frozen=True)
class BoundedSum:
    type_var: str
    bound: "TypeExpr"
    body: "TypeExpr"


@dataclass(frozen=True)
class BoundedProd:
    type_var: str
    bound: "TypeExpr"
    body: "TypeExpr"


@dataclass(frozen=True)
class Arrow:
    antecedent: "TypeExpr"
    consequent: "TypeExpr"


@dataclass(frozen=True)
class Signature:
    """Multi-argument signature ``T1 * ... * Tn -> R`` (n >= 2; one argument is an Arrow)."""

    params: tuple["TypeExpr", ...]
    result: "TypeExpr"

    def __post_init__(self):
        if len(self.params) < 2:
            raise TypeFormError("a signature has at least two parameters; use Arrow for one")


PROP_TERMS = (SymApp, BoolLit, Select)


@dataclass(frozen=True)
class PropEmbed:
    """A boolean-valued term standing in type position as a proposition."""

    term: Term

    def __post_init__(self):
        if not isinstance(self.term, PROP_TERMS):
            raise TypeFormError(
                f"only symbol applications, selections and booleans can be propositions, "
                f"got {type(self.term).__name__}"
            )


@dataclass(frozen=True)
class Named:
    name: str


TypeExpr = Union[
    Primitive, Enumerated, Record, Concrete, DepSum, DepProd, BoundedSum, BoundedProd,
    Arrow, Signature, PropEmbed, Named,
]

STRING = Primitive("string")
NUM = Primitive("num")
BOOL = Primitive("bool")
URI = Primitive("uri")
DATE = Primitive("date")

ATOMIC_TYPES = (Primitive, Enumerated, Named)


def type_children(t: TypeExpr) -> tuple[TypeExpr, ...]:
    if isinstance(t, Record):
        return tuple(ty for _, ty in t.fields)
    if isinstance(t, Concrete):
        return t.args
    if isinstance(t, (DepSum, DepProd)):
        return (t.domain, t.body)
    if isinstance(t, (BoundedSum, BoundedProd)):
        return (t.bound, t.body)
    if isinstance(t, Arrow):
        return (t.antecedent, t.consequent)
    if isinstance(t, Signature):
        return t.params + (t.result,)
    return ()


def named_refs(t: TypeExpr, bound: frozenset[str] = frozenset()) -> Iterator[str]:
    """Yield every Named reference in ``t`` not captured by a bounded quantifier."""
    if isinstance(t, Named):
        if t.name not in bound:
            yield t.name
        return
    if isinstance(t, (BoundedSum, BoundedProd)):
        yield from named_refs(t.bound, bound)
        yield from named_refs(t.body, bound | {t.type_var})
        return
    for child in type_children(t):
        yield from named_refs(child, bound)


def signature_parts(t: TypeExpr) -> tuple[tuple[TypeExpr, ...], TypeExpr]:
    if isinstance(t, Signature):
        return t.params, t.result
    if isinstance(t, Arrow):
        return (t.antecedent,), t.consequent
    raise TypeFormError("expected a signature of the form T1 * ... * Tn -> R")


def _check_distinct(items, what: str) -> None:
    seen = set()
    for item in items:
        if item in seen:
            raise TypeFormError(f"duplicate {'label' if 'record' in what else 'value'} {item!r} in {what}")
        seen.add(item)


# ---------------------------------------------------------------------------
# Environments and schemas

DECL_KINDS = ("variable", "function", "predicate", "ctor")


@dataclass(frozen=True)
class Declaration:
    name: str
    kind: str
    type: TypeExpr

    def __post_init__(self):
        if self.kind not in DECL_KINDS:
            raise TypeFormError(f"unknown declaration kind {self.kind!r}")
        if self.kind == "variable":
            return
        _, result = signature_parts(self.type)
        if self.kind == "function" and not isinstance(result, Primitive):
            raise TypeFormError(f"function {self.name} must return a primitive type")
        if self.kind == "predicate" and result != BOOL:
            raise TypeFormError(f"predicate {self.name} must return bool")
        if self.kind == "ctor" and not isinstance(result, Named):
            raise TypeFormError(f"constructor {self.name} must return a datatype name")


@dataclass(frozen=True)
class Environment:
    declarations: tuple[Declaration, ...] = ()

    def extend(self, decl: Declaration) -> "Environment":
        return Environment(self.declarations + (decl,))

    def lookup(self, name: str) -> Declaration | None:
        # later declarations shadow earlier ones
        for decl in reversed(self.declarations):
            if decl.name == name:
                return decl
        return None

    def symbols(self) -> frozenset[str]:
        return frozenset(d.name for d in self.declarations if d.kind in ("function", "predicate"))

    def __iter__(self):
        return iter(self.declarations)


@dataclass
class Schema:
    """Named type bindings plus the declarations loaded alongside them."""

    types: Mapping[str, TypeExpr] = field(default_factory=dict)
    env: Environment = field(default_factory=Environment)
    _expanded: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __contains__(self, name: str) -> bool:
        return name in self.types

    def symbols(self) -> frozenset[str]:
        return self.env.symbols()

    def resolve(self, t: TypeExpr) -> TypeExpr:
        return resolve(t, self)

    def expand(self, t: TypeExpr) -> TypeExpr:
        return expand(t, self)

    def check_acyclic(self) -> None:
        """Reject any cycle in the graph of Named references between definitions."""
        state: dict[str, int] = {}

        def visit(name: str, path: list[str]) -> None:
            mark = state.get(name)
            if mark == 2:
                return
            if mark == 1:
                cycle = path[path.index(name):] + [name]
                raise CyclicDefinitionError("cyclic type definition: " + " -> ".join(cycle))
            state[name] = 1
            for ref in named_refs(self.types[name]):
                if ref in self.types:
                    visit(ref, path + [name])
            state[name] = 2

        for name in self.types:
            visit(name, [])

    def check_references(self, t: TypeExpr, bound: frozenset[str] = frozenset()) -> None:
        for ref in named_refs(t, bound):
            if ref not in self.types:
                raise UnknownTypeError(f"unknown type name {ref!r}")


EMPTY_SCHEMA = Schema()


def resolve(t: TypeExpr, schema: Schema | None = None) -> TypeExpr:
    """Expand ``t`` one level: follow Named references until a structural head."""
    schema = schema or EMPTY_SCHEMA
    seen: list[str] = []
    while isinstance(t, Named):
        if t.name in seen:
            raise CyclicDefinitionError("cyclic type definition: " + " -> ".join(seen + [t.name]))
        if t.name not in schema.types:
            raise UnknownTypeError(f"unknown type name {t.name!r}")
        seen.append(t.name)
        t = schema.types[t.name]
    return t


def expand(t: TypeExpr, schema: Schema | None = None) -> TypeExpr:
    """Fully expand every Named reference (type variables of bounded quantifiers stay)."""
    schema = schema or EMPTY_SCHEMA
    cached = schema._expanded.get(t)
    if cached is None:
        cached = _expand(t, schema, frozenset(), ())
        schema._expanded[t] = cached
    return cached


def _expand(t: TypeExpr, schema: Schema, bound: frozenset[str], stack: tuple[str, ...]) -> TypeExpr:
    if isinstance(t, Named):
        if t.name in bound:
            return t
        if t.name in stack:
            raise CyclicDefinitionError("cyclic type definition: " + " -> ".join(stack + (t.name,)))
        if t.name not in schema.types:
            raise UnknownTypeError(f"unknown type name {t.name!r}")
        return _expand(schema.types[t.name], schema, bound, stack + (t.name,))

    def go(child: TypeExpr, extra: frozenset[str] = frozenset()) -> TypeExpr:
        return _expand(child, schema, bound | extra, stack)

    if isinstance(t, Record):
        return Record(tuple((label, go(ty)) for label, ty in t.fields))
    if isinstance(t, Concrete):
        return Concrete(t.ctor, tuple(go(a) for a in t.args), t.datatype)
    if isinstance(t, (DepSum, DepProd)):
        return type(t)(t.var, go(t.domain), go(t.body))
    if isinstance(t, (BoundedSum, BoundedProd)):
        return type(t)(t.type_var, go(t.bound), go(t.body, frozenset({t.type_var})))
    if isinstance(t, Arrow):
        return Arrow(go(t.antecedent), go(t.consequent))
    if isinstance(t, Signature):
        return Signature(tuple(go(p) for p in t.params), go(t.result))
    return t


def substitute_named(t: TypeExpr, mapping: Mapping[str, TypeExpr]) -> TypeExpr:
    """Replace free Named references by the types in ``mapping``."""
    if isinstance(t, Named):
        return mapping.get(t.name, t)
    if isinstance(t, (BoundedSum, BoundedProd)):
        inner = {k: v for k, v in mapping.items() if k != t.type_var}
        return type(t)(t.type_var, substitute_named(t.bound, mapping), substitute_named(t.body, inner))
    if isinstance(t, Record):
        return Record(tuple((label, substitute_named(ty, mapping)) for label, ty in t.fields))
    if isinstance(t, Concrete):
        return Concrete(t.ctor, tuple(substitute_named(a, mapping) for a in t.args), t.datatype)
    if isinstance(t, (DepSum, DepProd)):
        return type(t)(t.var, substitute_named(t.domain, mapping), substitute_named(t.body, mapping))
    if isinstance(t, Arrow):
        return Arrow(substitute_named(t.antecedent, mapping), substitute_named(t.consequent, mapping))
    if isinstance(t, Signature):
        return Signature(tuple(substitute_named(p, mapping) for p in t.params), substitute_named(t.result, mapping))
    return t
