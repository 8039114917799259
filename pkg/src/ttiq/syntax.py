"""Concrete ASCII syntax for TTIQ: tokenizer, recursive-descent parser, printer.

Notation summary::

    name: string * date_of_birth: date           record type
    {'Male', 'Female'}                           enumerated type
    hasChild of Woman * Person -> hasChild       concrete datatype
    exists x: Human. x.gender == 'Male'          dependent sum (forall for products)
    exists X <= A. true                          bounded quantifier
    T -> U,  T1 * T2 -> P                        arrow / signature

Terms: ``"s"``, ``12``, ``true``, ``1990-01-02``, ``<http://x>``, ``x``,
``(a = t, b = u)``, ``c(t, u)``, ``t.a``, ``f(t)``, ``(t, u)``, and the infix
symbols ``t == u`` (string equality) and ``t = u`` (term equality).
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .core import (
    PRIMITIVE_KINDS,
    PROP_TERMS,
    Arrow,
    BoolLit,
    BoundedProd,
    BoundedSum,
    Concrete,
    CtorApp,
    DateLit,
    Declaration,
    DepProd,
    DepSum,
    Enumerated,
    Environment,
    Named,
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
)
from .errors import ParseError, TypeFormError

OPERATORS = ("==", "=")
KEYWORDS = frozenset({"exists", "forall", "of", "true", "false", *PRIMITIVE_KINDS})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<date>\d{4}-\d{2}-\d{2}(?![\w-]))
  | (?P<number>-?\d+(?![\w]))
  | (?P<op>->|<=|==)
  | (?P<uri><[A-Za-z][A-Za-z0-9+.\-]*:[^>\s]*>)
  | (?P<word>\??[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(){},:;*.=])
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", '"': '"', "'": "'"}
_IDENT_RE = re.compile(r"\??[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unescape(tok: Token) -> str:
    body = tok.text[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"unknown escape \\{nxt}", tok.line, tok.column + i + 1)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class Parser:
    """Recursive-descent parser over a token list; supports backtracking by position."""

    def __init__(self, source: str, symbols: Iterable[str] = ()):
        self.tokens = tokenize(source)
        self.pos = 0
        self.symbols = frozenset(symbols)

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "punct") and self.tok.text == text

    def at_word(self, text: str | None = None) -> bool:
        return self.tok.kind == "word" and (text is None or self.tok.text == text)

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def expect_word(self, text: str) -> Token:
        if not self.at_word(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def ident(self, what: str = "identifier", allow_keywords: bool = False) -> str:
        tok = self.tok
        if tok.kind != "word" or (tok.text in KEYWORDS and not allow_keywords):
            self.fail(f"expected {what}")
        return self.advance().text

    def fail(self, message: str):
        tok = self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.column)

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")

    # -- types --------------------------------------------------------------

    def type_expr(self) -> TypeExpr:
        if (self.at_word("exists") or self.at_word("forall")) and not self._at_field():
            return self.quantified()
        prop = self._try_prop()
        if prop is not None:
            if self.at("->"):
                self.advance()
                return Arrow(prop, self.type_expr())
            return prop
        return self.product()

    def quantified(self) -> TypeExpr:
        quant = self.advance().text
        var = self.ident("bound variable")
        if self.at("<="):
            self.advance()
            bound = self.unary()
            self.expect(".")
            body = self.type_expr()
            return (BoundedSum if quant == "exists" else BoundedProd)(var, bound, body)
        self.expect(":")
        domain = self.unary()
        self.expect(".")
        body = self.type_expr()
        return (DepSum if quant == "exists" else DepProd)(var, domain, body)

    def _try_prop(self) -> PropEmbed | None:
        start = self.pos
        try:
            term = self.term()
        except ParseError:
            self.pos = start
            return None
        if isinstance(term, PROP_TERMS) and not self.at("*"):
            return PropEmbed(term)
        self.pos = start
        return None

    def _at_field(self) -> bool:
        return self.tok.kind == "word" and self.peek().kind == "punct" and self.peek().text == ":"

    def product(self) -> TypeExpr:
        if self._at_field():
            fields = [self.field()]
            while self.at("*"):
                self.advance()
                if not self._at_field():
                    self.fail("expected record field 'label: type'")
                fields.append(self.field())
            rec = self._build(Record, tuple(fields))
            if self.at("->"):
                self.advance()
                return Arrow(rec, self.type_expr())
            return rec
        first = self.unary()
        if self.at("*"):
            params = [first]
            while self.at("*"):
                self.advance()
                params.append(self.unary())
            self.expect("->")
            return Signature(tuple(params), self.type_expr())
        if self.at("->"):
            self.advance()
            return Arrow(first, self.type_expr())
        return first

    def field(self) -> tuple[str, TypeExpr]:
        label = self.ident("field label", allow_keywords=True)
        self.expect(":")
        return label, self.unary()

    def unary(self) -> TypeExpr:
        tok = self.tok
        if tok.kind == "word" and tok.text in PRIMITIVE_KINDS:
            self.advance()
            return Primitive(tok.text)
        if self.at("{"):
            return self.enumerated()
        if self.at("("):
            self.advance()
            inner = self.type_expr()
            self.expect(")")
            return inner
        if tok.kind == "word" and tok.text not in KEYWORDS:
            name = self.advance().text
            if self.at_word("of"):
                return self.concrete(name)
            return Named(name)
        self.fail("expected a type")

    def enumerated(self) -> Enumerated:
        start = self.expect("{")
        values = []
        while True:
            if self.tok.kind != "string":
                self.fail("expected string literal in enumerated type")
            values.append(_unescape(self.advance()))
            if self.at(","):
                self.advance()
                continue
            break
        self.expect("}")
        return self._build(Enumerated, tuple(values), at=start)

    def concrete(self, ctor: str) -> Concrete:
        self.expect_word("of")
        args = [self.unary()]
        while self.at("*"):
            self.advance()
            args.append(self.unary())
        datatype = ctor
        if self.at("->"):
            self.advance()
            datatype = self.ident("datatype name")
        return Concrete(ctor, tuple(args), datatype)

    def _build(self, cls, payload, at: Token | None = None):
        try:
            return cls(payload)
        except TypeFormError as exc:
            tok = at or self.tok
            raise ParseError(str(exc), tok.line, tok.column) from None

    # -- terms --------------------------------------------------------------

    def term(self) -> Term:
        left = self.postfix()
        if self.at("==") or self.at("="):
            op = self.advance().text
            right = self.postfix()
            return SymApp(op, (left, right))
        return left

    def postfix(self) -> Term:
        t = self.atom()
        while self.at(".") and self.peek().kind == "word":
            self.advance()
            t = Select(t, self.advance().text)
        return t

    def atom(self) -> Term:
        tok = self.tok
        if tok.kind == "string":
            self.advance()
            return StrLit(_unescape(tok))
        if tok.kind == "number":
            self.advance()
            return NumLit(int(tok.text))
        if tok.kind == "date":
            self.advance()
            try:
                return DateLit(datetime.date.fromisoformat(tok.text))
            except ValueError:
                raise ParseError(f"malformed date literal {tok.text}", tok.line, tok.column) from None
        if tok.kind == "uri":
            self.advance()
            return UriLit(tok.text[1:-1])
        if self.at_word("true") or self.at_word("false"):
            self.advance()
            return BoolLit(tok.text == "true")
        if (tok.kind == "op" and tok.text == "==") or (tok.kind == "punct" and tok.text == "="):
            if self.peek().text == "(":
                self.advance()
                return SymApp(tok.text, self.arguments())
        if tok.kind == "word" and tok.text not in KEYWORDS:
            self.advance()
            if self.at("("):
                args = self.arguments()
                if tok.text in self.symbols:
                    return SymApp(tok.text, args)
                return CtorApp(tok.text, args)
            return Var(tok.text)
        if self.at("("):
            return self.parenthesized()
        self.fail("expected a term")

    def arguments(self) -> tuple[Term, ...]:
        self.expect("(")
        args: list[Term] = []
        if not self.at(")"):
            args.append(self.term())
            while self.at(","):
                self.advance()
                args.append(self.term())
        self.expect(")")
        return tuple(args)

    def parenthesized(self) -> Term:
        start = self.expect("(")
        if self.tok.kind == "word" and self.peek().kind == "punct" and self.peek().text == "=":
            fields = [self.record_field()]
            while self.at(","):
                self.advance()
                fields.append(self.record_field())
            self.expect(")")
            try:
                return RecordTerm(tuple(fields))
            except TypeFormError as exc:
                raise ParseError(str(exc), start.line, start.column) from None
        first = self.term()
        if self.at(","):
            self.advance()
            second = self.term()
            self.expect(")")
            return Pair(first, second)
        self.expect(")")
        return first

    def record_field(self) -> tuple[str, Term]:
        label = self.ident("field label", allow_keywords=True)
        self.expect("=")
        return label, self.term()

    # -- schema files -------------------------------------------------------

    def signature(self) -> TypeExpr:
        params = [self.unary()]
        while self.at("*"):
            self.advance()
            params.append(self.unary())
        self.expect("->")
        result = self.unary()
        if len(params) == 1:
            return Arrow(params[0], result)
        return Signature(tuple(params), result)

    def schema_statements(self):
        while self.tok.kind != "eof":
            tok = self.tok
            keyword = self.ident("declaration keyword", allow_keywords=True)
            if keyword == "type":
                name = self.ident("type name")
                self.expect("=")
                yield tok, ("type", name, self.type_expr())
            elif keyword == "ctor":
                name = self.ident("constructor name")
                self.expect_word("of")
                sig = self.signature()
                params, result = (sig.params, sig.result) if isinstance(sig, Signature) else ((sig.antecedent,), sig.consequent)
                if not isinstance(result, Named):
                    raise ParseError("constructor result must be a datatype name", tok.line, tok.column)
                yield tok, ("ctor", name, Concrete(name, params, result.name))
            elif keyword in ("fn", "pred"):
                name = self.ident("symbol name")
                self.expect(":")
                yield tok, (keyword, name, self.signature())
            else:
                raise ParseError(f"unknown declaration {keyword!r}", tok.line, tok.column)
            self.expect(";")


def _symbols_of(schema: Schema | None, symbols: Iterable[str] | None) -> frozenset[str]:
    out = set(symbols or ())
    if schema is not None:
        out |= schema.symbols()
    return frozenset(out)


def parse_type(source: str, schema: Schema | None = None, symbols: Iterable[str] | None = None) -> TypeExpr:
    """Parse a type; when ``schema`` is given, Named references are checked against it."""
    parser = Parser(source, _symbols_of(schema, symbols))
    t = parser.type_expr()
    parser.expect_eof()
    if schema is not None:
        schema.check_references(t)
    return t


def parse_term(source: str, symbols: Iterable[str] = (), schema: Schema | None = None) -> Term:
    """Parse a term. ``name(args)`` is a symbol application when ``name`` is a known symbol."""
    parser = Parser(source, _symbols_of(schema, symbols))
    t = parser.term()
    parser.expect_eof()
    return t


def parse_schema(source: str) -> Schema:
    parser = Parser(source)
    types: dict[str, TypeExpr] = {}
    decls: list[Declaration] = []
    statements = list(parser.schema_statements())
    symbols = frozenset(name for _, (kind, name, _) in statements if kind in ("fn", "pred"))
    if symbols:
        # reparse so symbol applications inside type bodies are recognised
        parser = Parser(source, symbols)
        statements = list(parser.schema_statements())
    for tok, (kind, name, payload) in statements:
        if kind == "type":
            if name in types:
                raise ParseError(f"duplicate type name {name!r}", tok.line, tok.column)
            types[name] = payload
        elif kind == "ctor":
            params = payload.args
            sig = Arrow(params[0], Named(payload.datatype)) if len(params) == 1 else Signature(params, Named(payload.datatype))
            decls.append(Declaration(name, "ctor", sig))
            if name in types:
                raise ParseError(f"constructor {name!r} clashes with a type name", tok.line, tok.column)
            types[name] = payload
        else:
            try:
                decls.append(Declaration(name, "function" if kind == "fn" else "predicate", payload))
            except TypeFormError as exc:
                raise ParseError(str(exc), tok.line, tok.column) from None
    schema = Schema(types, Environment(tuple(decls)))
    for name, t in types.items():
        schema.check_references(t)
    for decl in decls:
        params, result = (decl.type.params, decl.type.result) if isinstance(decl.type, Signature) else ((decl.type.antecedent,), decl.type.consequent)
        for p in params:
            schema.check_references(p)
    schema.check_acyclic()
    return schema


def load_schema(path: str | Path) -> Schema:
    return parse_schema(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Printing


def quote(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in ('"', "\\"):
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def format_type(t: TypeExpr) -> str:
    return _fmt_type(t, nested=False)


def _fmt_type(t: TypeExpr, nested: bool) -> str:
    if isinstance(t, Primitive):
        return t.kind
    if isinstance(t, Named):
        return t.name
    if isinstance(t, Enumerated):
        return "{" + ", ".join(quote(v) for v in t.values) + "}"
    if nested:
        return "(" + _fmt_type(t, nested=False) + ")"
    if isinstance(t, Record):
        return " * ".join(f"{label}: {_fmt_type(ty, True)}" for label, ty in t.fields)
    if isinstance(t, Concrete):
        args = " * ".join(_fmt_type(a, True) for a in t.args)
        return f"{t.ctor} of {args} -> {t.datatype}"
    if isinstance(t, (DepSum, DepProd)):
        quant = "exists" if isinstance(t, DepSum) else "forall"
        return f"{quant} {t.var}: {_fmt_type(t.domain, True)}. {_fmt_type(t.body, False)}"
    if isinstance(t, (BoundedSum, BoundedProd)):
        quant = "exists" if isinstance(t, BoundedSum) else "forall"
        return f"{quant} {t.type_var} <= {_fmt_type(t.bound, True)}. {_fmt_type(t.body, False)}"
    if isinstance(t, Arrow):
        return f"{_fmt_type(t.antecedent, True)} -> {_fmt_type(t.consequent, False)}"
    if isinstance(t, Signature):
        params = " * ".join(_fmt_type(p, True) for p in t.params)
        return f"{params} -> {_fmt_type(t.result, False)}"
    if isinstance(t, PropEmbed):
        return format_term(t.term)
    raise TypeError(f"not a type: {t!r}")


def format_term(t: Term) -> str:
    return _fmt_term(t, top=True)


def _fmt_term(t: Term, top: bool = False) -> str:
    if isinstance(t, StrLit):
        return quote(t.value)
    if isinstance(t, NumLit):
        return str(t.value)
    if isinstance(t, BoolLit):
        return "true" if t.value else "false"
    if isinstance(t, DateLit):
        return t.value.isoformat()
    if isinstance(t, UriLit):
        return f"<{t.value}>"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, RecordTerm):
        return "(" + ", ".join(f"{label} = {_fmt_term(v)}" for label, v in t.fields) + ")"
    if isinstance(t, CtorApp):
        return t.ctor + "(" + ", ".join(_fmt_term(a) for a in t.args) + ")"
    if isinstance(t, Select):
        return f"{_fmt_term(t.target)}.{t.label}"
    if isinstance(t, SymApp):
        if top and t.symbol in OPERATORS and len(t.args) == 2:
            return f"{_fmt_term(t.args[0])} {t.symbol} {_fmt_term(t.args[1])}"
        return t.symbol + "(" + ", ".join(_fmt_term(a) for a in t.args) + ")"
    if isinstance(t, Pair):
        return f"({_fmt_term(t.first)}, {_fmt_term(t.second)})"
    raise TypeError(f"not a term: {t!r}")


def format_schema(schema: Schema) -> str:
    lines = []
    ctors = {d.name for d in schema.env if d.kind == "ctor"}
    for name, t in schema.types.items():
        if name in ctors and isinstance(t, Concrete):
            args = " * ".join(_fmt_type(a, True) for a in t.args)
            lines.append(f"ctor {name} of {args} -> {t.datatype} ;")
        else:
            lines.append(f"type {name} = {format_type(t)} ;")
    for d in schema.env:
        if d.kind in ("function", "predicate"):
            kw = "fn" if d.kind == "function" else "pred"
            lines.append(f"{kw} {d.name} : {format_type(d.type)} ;")
    return "\n".join(lines) + "\n"


def is_identifier(text: str) -> bool:
    return bool(_IDENT_RE.match(text)) and text not in KEYWORDS
