"""Depth-bounded, syntax-directed proof search for subtype judgments.

Rules are tried in a fixed order and every rule is generative, so the first
proof and the order of alternative proofs are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    BOOL,
    EMPTY_SCHEMA,
    NUM,
    STRING,
    Concrete,
    DepSum,
    Environment,
    Primitive,
    Record,
    Schema,
    TypeExpr,
)
from .errors import DepthExhausted, SchemaError, TypeFormError
from .syntax import format_type
from .taxonomy import Taxonomy

IDENTITY = "IDENTITY"
STR_PRIM = "STR-PRIM"
BOOL_NUM = "BOOL-NUM"
SYN_REC = "SYN-REC"
SEM_REC = "SEM-REC"
CONCRETE = "CONCRETE"
EXISTS_FIRST = "EXISTS-FIRST"

RULE_ORDER = (IDENTITY, STR_PRIM, BOOL_NUM, SYN_REC, SEM_REC, CONCRETE, EXISTS_FIRST)


@dataclass(frozen=True)
class SubtypeJudgment:
    sub: TypeExpr
    sup: TypeExpr
    env: Environment = field(default_factory=Environment, compare=False)

    def __str__(self) -> str:
        return f"{format_type(self.sub)} <= {format_type(self.sup)}"


@dataclass(frozen=True)
class ProofTree:
    """One rule instance concluding ``sub <= sup``.

    For record rules ``matching[i]`` is the index of the subtype field that
    supplies supertype field ``i``; ``premises[i]`` proves that field pair.
    """

    rule: str
    sub: TypeExpr
    sup: TypeExpr
    premises: tuple["ProofTree", ...] = ()
    matching: tuple[int, ...] | None = None
    pad_width_hint: int | None = None

    @property
    def conclusion(self) -> SubtypeJudgment:
        return SubtypeJudgment(self.sub, self.sup)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def walk(self) -> Iterator["ProofTree"]:
        yield self
        for p in self.premises:
            yield from p.walk()


@dataclass(frozen=True)
class ProverLimits:
    max_depth: int = 64
    max_proofs: int = 16

    def __post_init__(self):
        if self.max_depth < 1 or self.max_proofs < 1:
            raise TypeFormError("prover limits must be positive")


class _Search:
    def __init__(self, schema: Schema, tax: Taxonomy, limits: ProverLimits):
        self.schema = schema
        self.tax = tax
        self.limits = limits
        self.exhausted = False
        self._memo: dict[tuple, list[ProofTree]] = {}

    def bounded(self, sub: TypeExpr, sup: TypeExpr, depth: int) -> list[ProofTree]:
        key = (sub, sup, depth)
        if key not in self._memo:
            self._memo[key] = list(itertools.islice(self.proofs(sub, sup, depth), self.limits.max_proofs))
        return self._memo[key]

    def proofs(self, sub: TypeExpr, sup: TypeExpr, depth: int = 0) -> Iterator[ProofTree]:
        if depth >= self.limits.max_depth:
            self.exhausted = True
            return
        schema = self.schema
        s = schema.resolve(sub)
        p = schema.resolve(sup)

        if schema.expand(sub) == schema.expand(sup):
            yield ProofTree(IDENTITY, sub, sup)
        if isinstance(s, Primitive) and s != STRING and p == STRING:
            yield ProofTree(STR_PRIM, sub, sup)
        if s == BOOL and p == NUM:
            yield ProofTree(BOOL_NUM, sub, sup)
        if isinstance(s, Record) and isinstance(p, Record):
            yield from self._records(SYN_REC, sub, sup, s, p, depth)
            yield from self._records(SEM_REC, sub, sup, s, p, depth)
        if isinstance(s, Concrete) and isinstance(p, Concrete):
            if len(s.args) == len(p.args) and self.tax.ctor_leq(s.ctor, p.ctor):
                options = [self.bounded(a, b, depth + 1) for a, b in zip(s.args, p.args)]
                for premises in itertools.product(*options):
                    yield ProofTree(CONCRETE, sub, sup, tuple(premises))
        if isinstance(s, DepSum):
            for inner in self.proofs(s.domain, sup, depth + 1):
                yield ProofTree(EXISTS_FIRST, sub, sup, (inner,))

    def _labels_ok(self, rule: str, a: str, b: str) -> bool:
        return a == b if rule == SYN_REC else self.tax.label_leq(a, b)

    def _records(self, rule, sub, sup, s: Record, p: Record, depth) -> Iterator[ProofTree]:
        for matching in self._matchings(rule, s, p, depth):
            if rule == SEM_REC and all(s.fields[j][0] == p.fields[i][0] for i, j in enumerate(matching)):
                continue  # identical labels throughout: that derivation is SYN-REC's
            options = [self.bounded(s.fields[j][1], p.fields[i][1], depth + 1) for i, j in enumerate(matching)]
            for premises in itertools.product(*options):
                yield ProofTree(rule, sub, sup, tuple(premises), tuple(matching))

    def _matchings(self, rule, s: Record, p: Record, depth) -> Iterator[list[int]]:
        """Injective maps sup-field -> sub-field, lexicographic in sub-field index."""
        if len(p.fields) > len(s.fields):
            return
        candidates = []
        for label, ty in p.fields:
            viable = [
                j for j, (sub_label, sub_ty) in enumerate(s.fields)
                if self._labels_ok(rule, sub_label, label) and self.bounded(sub_ty, ty, depth + 1)
            ]
            if not viable:
                return
            candidates.append(viable)

        def extend(i: int, used: list[int]) -> Iterator[list[int]]:
            if i == len(candidates):
                yield list(used)
                return
            for j in candidates[i]:
                if j not in used:
                    used.append(j)
                    yield from extend(i + 1, used)
                    used.pop()

        yield from extend(0, [])


def enumerate_proofs(
    env: Environment | None,
    sub: TypeExpr,
    sup: TypeExpr,
    tax: Taxonomy | None = None,
    limits: ProverLimits | None = None,
    schema: Schema | None = None,
) -> list[ProofTree]:
    """Up to ``limits.max_proofs`` distinct derivations of ``sub <= sup``, in rule order."""
    search = _Search(schema or EMPTY_SCHEMA, tax or Taxonomy(), limits or ProverLimits())
    out: list[ProofTree] = []
    seen: set[ProofTree] = set()
    for proof in search.proofs(sub, sup):
        if proof not in seen:
            seen.add(proof)
            out.append(proof)
            if len(out) >= search.limits.max_proofs:
                break
    return out


def prove(
    env: Environment | None,
    sub: TypeExpr,
    sup: TypeExpr,
    tax: Taxonomy | None = None,
    limits: ProverLimits | None = None,
    schema: Schema | None = None,
) -> ProofTree | None:
    """Return the first proof of ``sub <= sup``, or None if refuted within the bound.

    Raises DepthExhausted when no proof was found but some branch hit the
    depth limit, since then the answer is unknown rather than negative.
    """
    search = _Search(schema or EMPTY_SCHEMA, tax or Taxonomy(), limits or ProverLimits())
    for proof in search.proofs(sub, sup):
        return proof
    if search.exhausted:
        raise DepthExhausted(
            f"no proof of {format_type(sub)} <= {format_type(sup)} within depth {search.limits.max_depth}"
        )
    return None


def check_rule(node: ProofTree, tax: Taxonomy | None = None, schema: Schema | None = None) -> bool:
    """Independent checker: every node must be a correct instance of its rule."""
    tax = tax or Taxonomy()
    schema = schema or EMPTY_SCHEMA
    try:
        return all(_check_node(n, tax, schema) for n in node.walk())
    except SchemaError:
        return False


def _check_node(node: ProofTree, tax: Taxonomy, schema: Schema) -> bool:
    s = schema.resolve(node.sub)
    p = schema.resolve(node.sup)
    rule = node.rule
    if rule in (IDENTITY, STR_PRIM, BOOL_NUM):
        if node.premises or node.matching is not None:
            return False
        if rule == IDENTITY:
            return schema.expand(node.sub) == schema.expand(node.sup)
        if rule == STR_PRIM:
            return isinstance(s, Primitive) and s != STRING and p == STRING
        return s == BOOL and p == NUM
    if rule in (SYN_REC, SEM_REC):
        if not (isinstance(s, Record) and isinstance(p, Record)):
            return False
        m = node.matching
        if m is None or len(m) != len(p.fields) or len(node.premises) != len(p.fields):
            return False
        if len(set(m)) != len(m) or any(not 0 <= j < len(s.fields) for j in m):
            return False
        for i, j in enumerate(m):
            sub_label, sub_ty = s.fields[j]
            sup_label, sup_ty = p.fields[i]
            if rule == SYN_REC and sub_label != sup_label:
                return False
            if rule == SEM_REC and not tax.label_leq(sub_label, sup_label):
                return False
            premise = node.premises[i]
            if premise.sub != sub_ty or premise.sup != sup_ty:
                return False
        return True
    if rule == CONCRETE:
        if not (isinstance(s, Concrete) and isinstance(p, Concrete)):
            return False
        if node.matching is not None or len(s.args) != len(p.args) or len(node.premises) != len(p.args):
            return False
        if not tax.ctor_leq(s.ctor, p.ctor):
            return False
        return all(q.sub == a and q.sup == b for q, a, b in zip(node.premises, s.args, p.args))
    if rule == EXISTS_FIRST:
        if not isinstance(s, DepSum) or node.matching is not None or len(node.premises) != 1:
            return False
        q = node.premises[0]
        return q.sub == s.domain and q.sup == node.sup
    return False


def format_proof(proof: ProofTree, schema: Schema | None = None, indent: int = 0) -> str:
    """Stable indented rendering used by ``ttiq subtype --explain``.

    Record matchings print as ``sup_label<-sub_label`` pairs, or as bare
    sub-field indices when the records cannot be resolved.
    """
    pad = "  " * indent
    line = f"{pad}{proof.rule}: {format_type(proof.sub)} <= {format_type(proof.sup)}"
    if proof.matching is not None:
        line += "  [" + ", ".join(_matching_labels(proof, schema or EMPTY_SCHEMA)) + "]"
    lines = [line]
    for premise in proof.premises:
        lines.append(format_proof(premise, schema, indent + 1))
    return "\n".join(lines)


def _matching_labels(proof: ProofTree, schema: Schema) -> list[str]:
    try:
        s, p = schema.resolve(proof.sub), schema.resolve(proof.sup)
    except SchemaError:
        s = p = None
    if isinstance(s, Record) and isinstance(p, Record):
        return [f"{p.fields[i][0]}<-{s.fields[j][0]}" for i, j in enumerate(proof.matching)]
    return [str(j) for j in proof.matching]
