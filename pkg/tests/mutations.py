"""Perturbations of valid proof trees, each breaking exactly one side condition."""

from __future__ import annotations

import dataclasses
import random

from ttiq.core import Concrete, Record
from ttiq.prover import (
    CONCRETE,
    IDENTITY,
    RULE_ORDER,
    SEM_REC,
    SYN_REC,
    ProofTree,
)

UNRELATED = "zz_unrelated"


def _paths(tree: ProofTree, prefix=()):
    yield prefix, tree
    for i, p in enumerate(tree.premises):
        yield from _paths(p, prefix + (i,))


def _replace_at(tree: ProofTree, path, node: ProofTree) -> ProofTree:
    if not path:
        return node
    premises = list(tree.premises)
    premises[path[0]] = _replace_at(premises[path[0]], path[1:], node)
    return dataclasses.replace(tree, premises=tuple(premises))


def _options(node: ProofTree, schema):
    """Mutations applicable to ``node`` as (kind, thunk) pairs."""
    out = []
    for rule in RULE_ORDER:
        # SYN-REC and SEM-REC coincide on identical labels, so that swap can stay valid
        if rule != node.rule and not (node.rule == SYN_REC and rule == SEM_REC):
            out.append(("rule", lambda rule=rule: dataclasses.replace(node, rule=rule)))
    if node.premises:
        out.append(("drop-premise", lambda: dataclasses.replace(node, premises=node.premises[:-1])))
    if node.rule in (SYN_REC, SEM_REC):
        sub, sup = schema.resolve(node.sub), schema.resolve(node.sup)

        def relabel():
            i = 0
            fields = list(sup.fields)
            fields[i] = (UNRELATED, fields[i][1])
            return dataclasses.replace(node, sup=Record(tuple(fields)))

        out.append(("label", relabel))
        out.append(("matching", lambda: dataclasses.replace(
            node, matching=(len(sub.fields),) + node.matching[1:])))
    if node.rule == CONCRETE:
        sup = schema.resolve(node.sup)
        out.append(("ctor", lambda: dataclasses.replace(node, sup=Concrete(UNRELATED, sup.args, sup.datatype))))
    if node.rule == IDENTITY:
        out.append(("conclusion", lambda: dataclasses.replace(node, sup=Record(((UNRELATED, node.sup),)))))
    return out


def mutate(rng: random.Random, tree: ProofTree, schema) -> tuple[str, ProofTree]:
    """Pick a mutation kind uniformly among those applicable anywhere in the tree."""
    by_kind: dict[str, list] = {}
    for path, node in _paths(tree):
        for kind, make in _options(node, schema):
            by_kind.setdefault(kind, []).append((path, make))
    kind = rng.choice(sorted(by_kind))
    path, make = rng.choice(by_kind[kind])
    return kind, _replace_at(tree, path, make())
