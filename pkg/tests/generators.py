"""Random generators for types, inhabitants and supertypes.

Everything is driven by a ``random.Random`` so the acceptance suite can count
exactly how many cases it ran, and the property tests can hand hypothesis'
``st.randoms()`` in for shrinking and replay.
"""

from __future__ import annotations

import datetime
import random
import string

from ttiq.core import (
    BOOL,
    NUM,
    PRIMITIVE_KINDS,
    STRING,
    TRUE,
    Arrow,
    BoolLit,
    BoundedProd,
    BoundedSum,
    Concrete,
    CtorApp,
    DateLit,
    DepProd,
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
    Signature,
    StrLit,
    SymApp,
    UriLit,
    Var,
)
from ttiq.taxonomy import Taxonomy

LABELS = ["a", "b", "c", "d", "name", "dob", "code"]
CTORS = ["k", "m", "n"]
IDENTS = ["x", "y", "w", "foo", "A", "Bar", "date_of_birth", "r2", "_t"]
SYMBOLS = ["len", "f"]
ENUM_WORDS = ["Male", "Female", "Unknown", "red", "green", "blue"]
TEXT_CHARS = string.ascii_letters + string.digits + " _-'\"\\\n\té€中"


def rand_text(rng: random.Random, max_len: int = 6) -> str:
    return "".join(rng.choice(TEXT_CHARS) for _ in range(rng.randint(0, max_len)))


def rand_date(rng: random.Random) -> datetime.date:
    return datetime.date.fromordinal(rng.randint(1, datetime.date(9999, 12, 31).toordinal()))


# ---------------------------------------------------------------------------
# Inhabitable types and their terms


def gen_type(rng: random.Random, depth: int = 2):
    """A type with ground inhabitants: primitives, enums, records, concretes, sums."""
    kinds = ["prim", "prim", "enum"]
    if depth > 0:
        kinds += ["record", "record", "concrete", "sum"]
    kind = rng.choice(kinds)
    if kind == "prim":
        return Primitive(rng.choice(PRIMITIVE_KINDS))
    if kind == "enum":
        return Enumerated(tuple(rng.sample(ENUM_WORDS, rng.randint(1, 4))))
    if kind == "record":
        labels = rng.sample(LABELS, rng.randint(1, 4))
        return Record(tuple((label, gen_type(rng, depth - 1)) for label in labels))
    if kind == "concrete":
        return Concrete(rng.choice(CTORS), tuple(gen_type(rng, depth - 1) for _ in range(rng.randint(1, 3))))
    return DepSum(rng.choice(["x", "y", "w"]), gen_type(rng, depth - 1), PropEmbed(TRUE))


def gen_term(rng: random.Random, t):
    """A term inhabiting ``t`` (as produced by gen_type)."""
    if isinstance(t, Primitive):
        if t.kind == "string":
            return StrLit(rand_text(rng))
        if t.kind == "num":
            return NumLit(rng.randint(0, 10**6))
        if t.kind == "bool":
            return BoolLit(rng.random() < 0.5)
        if t.kind == "date":
            return DateLit(rand_date(rng))
        return UriLit("http://ex.org/" + "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(0, 5))))
    if isinstance(t, Enumerated):
        return StrLit(rng.choice(t.values))
    if isinstance(t, Record):
        fields = [(label, gen_term(rng, ty)) for label, ty in t.fields]
        rng.shuffle(fields)
        return RecordTerm(tuple(fields))
    if isinstance(t, Concrete):
        return CtorApp(t.ctor, tuple(gen_term(rng, a) for a in t.args))
    if isinstance(t, DepSum):
        return Pair(gen_term(rng, t.domain), TRUE)
    raise TypeError(t)


def bump(rng: random.Random, t, term):
    """A term of ``t`` that is at or above ``term`` in the natural order."""
    if isinstance(t, Primitive):
        if t.kind == "string":
            return StrLit(term.value + rand_text(rng, 3))
        if t.kind == "num":
            return NumLit(term.value + rng.randint(0, 1000))
        if t.kind == "bool":
            return BoolLit(term.value or rng.random() < 0.5)
        if t.kind == "date":
            room = datetime.date(9999, 12, 31).toordinal() - term.value.toordinal()
            return DateLit(datetime.date.fromordinal(term.value.toordinal() + rng.randint(0, min(room, 4000))))
        return UriLit(term.value + "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(0, 3))))
    if isinstance(t, Enumerated):
        i = t.values.index(term.value)
        return StrLit(t.values[rng.randint(i, len(t.values) - 1)])
    if isinstance(t, Record):
        return RecordTerm(tuple((label, bump(rng, ty, term.get(label))) for label, ty in t.fields))
    if isinstance(t, Concrete):
        return CtorApp(term.ctor, tuple(bump(rng, a, x) for a, x in zip(t.args, term.args)))
    if isinstance(t, DepSum):
        return Pair(bump(rng, t.domain, term.first), term.second)
    raise TypeError(t)


class Weakener:
    """Builds a provable supertype of a generated type, growing a taxonomy as it goes.

    ``drop``/``relabel``/``rename`` control how aggressive the record and
    constructor steps are, so callers can target one coercion kind.
    """

    def __init__(self, rng: random.Random, drop=True, relabel=True, rename=True, prims=True, project=True):
        self.rng = rng
        self.tax = Taxonomy()
        self.drop, self.relabel, self.rename, self.prims, self.project = drop, relabel, rename, prims, project

    def __call__(self, t):
        rng = self.rng
        if isinstance(t, Primitive):
            if not self.prims:
                return t
            options = [t]
            if t != STRING:
                options.append(STRING)
            if t == BOOL:
                options.append(NUM)
            return rng.choice(options)
        if isinstance(t, Enumerated):
            return t
        if isinstance(t, Record):
            fields = list(t.fields)
            if self.drop and len(fields) > 1:
                fields = rng.sample(fields, rng.randint(1, len(fields)))
            rng.shuffle(fields)
            out = []
            for label, ty in fields:
                if self.relabel and rng.random() < 0.5:
                    upper = label + "_up"
                    self.tax = self.tax.add_label_edge(label, upper)
                    label = upper
                out.append((label, self(ty)))
            return Record(tuple(out))
        if isinstance(t, Concrete):
            ctor = t.ctor
            if self.rename and rng.random() < 0.5:
                ctor = t.ctor + "_up"
                self.tax = self.tax.add_ctor_edge(t.ctor, ctor)
            return Concrete(ctor, tuple(self(a) for a in t.args))
        if isinstance(t, DepSum):
            if self.project and rng.random() < 0.7:
                return self(t.domain)
            return t
        raise TypeError(t)


# ---------------------------------------------------------------------------
# Arbitrary syntax trees (for parser/printer round trips)


def gen_ident(rng: random.Random) -> str:
    return rng.choice(IDENTS)


def gen_any_term(rng: random.Random, depth: int = 3):
    leaf = [
        lambda: StrLit(rand_text(rng)),
        lambda: NumLit(rng.randint(-10**30, 10**30)),
        lambda: BoolLit(rng.random() < 0.5),
        lambda: DateLit(rand_date(rng)),
        lambda: UriLit("urn:" + "".join(rng.choice(string.ascii_lowercase + "/:#") for _ in range(rng.randint(0, 8)))),
        lambda: Var(rng.choice(IDENTS + ["?x", "?X"])),
    ]
    if depth <= 0:
        return rng.choice(leaf)()

    def sub():
        return gen_any_term(rng, depth - 1)

    compound = [
        lambda: RecordTerm(tuple((label, sub()) for label in rng.sample(LABELS + ["date", "of"], rng.randint(1, 3)))),
        lambda: CtorApp(rng.choice(CTORS + ["hasChild"]), tuple(sub() for _ in range(rng.randint(0, 3)))),
        lambda: Select(sub(), rng.choice(LABELS + ["gender", "string"])),
        lambda: SymApp(rng.choice(["==", "="]), (sub(), sub())),
        lambda: SymApp(rng.choice(SYMBOLS), tuple(sub() for _ in range(rng.randint(0, 2)))),
        lambda: Pair(sub(), sub()),
    ]
    return rng.choice(leaf + compound)()


def gen_prop_term(rng: random.Random, depth: int = 2):
    choice = rng.randrange(3)
    if choice == 0:
        return BoolLit(rng.random() < 0.5)
    if choice == 1:
        return Select(gen_any_term(rng, depth), rng.choice(LABELS))
    return SymApp(rng.choice(["==", "=", "len"]), (gen_any_term(rng, depth), gen_any_term(rng, depth)))


def gen_any_type(rng: random.Random, depth: int = 3):
    leaf = [
        lambda: Primitive(rng.choice(PRIMITIVE_KINDS)),
        lambda: Enumerated(tuple(dict.fromkeys(rand_text(rng) for _ in range(rng.randint(1, 3))))),
        lambda: Named(rng.choice(IDENTS)),
    ]
    if depth <= 0:
        return rng.choice(leaf)()

    def sub():
        return gen_any_type(rng, depth - 1)

    compound = [
        lambda: Record(tuple((label, sub()) for label in rng.sample(LABELS + ["date", "exists"], rng.randint(1, 3)))),
        lambda: Concrete(rng.choice(CTORS), tuple(sub() for _ in range(rng.randint(1, 3))), rng.choice(CTORS + ["hasChild"])),
        lambda: DepSum(gen_ident(rng), sub(), sub()),
        lambda: DepProd(gen_ident(rng), sub(), sub()),
        lambda: BoundedSum(gen_ident(rng), sub(), sub()),
        lambda: BoundedProd(gen_ident(rng), sub(), sub()),
        lambda: Arrow(sub(), sub()),
        lambda: Signature(tuple(sub() for _ in range(rng.randint(2, 3))), sub()),
        lambda: PropEmbed(gen_prop_term(rng, depth - 1)),
    ]
    return rng.choice(leaf + compound)()
