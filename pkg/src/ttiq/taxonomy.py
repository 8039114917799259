"""Label and constructor-name partial orders consulted by SEM-REC and CONCRETE."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ParseError, TaxonomyCycleError

_LINE_RE = re.compile(r"^(label|ctor)\s+(\S+)\s*<=\s*(\S+)$")


def _reachable(edges: frozenset[tuple[str, str]], start: str, goal: str) -> bool:
    if start == goal:
        return True
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for lower, upper in edges:
            if lower == node and upper not in seen:
                if upper == goal:
                    return True
                seen.add(upper)
                queue.append(upper)
    return False


@dataclass(frozen=True)
class Taxonomy:
    """Immutable snapshot of both orders; ``add_*`` return a new snapshot.

    Only the covering edges are stored. ``x <= x`` holds without an edge and
    transitivity is computed at query time.
    """

    label_edges: frozenset[tuple[str, str]] = frozenset()
    ctor_edges: frozenset[tuple[str, str]] = frozenset()

    def add_label_edge(self, lower: str, upper: str) -> "Taxonomy":
        return replace(self, label_edges=_add(self.label_edges, lower, upper, "label"))

    def add_ctor_edge(self, lower: str, upper: str) -> "Taxonomy":
        return replace(self, ctor_edges=_add(self.ctor_edges, lower, upper, "ctor"))

    def label_leq(self, a: str, b: str) -> bool:
        return _reachable(self.label_edges, a, b)

    def ctor_leq(self, a: str, b: str) -> bool:
        return _reachable(self.ctor_edges, a, b)

    def labels_above(self, a: str) -> set[str]:
        return {b for b in _nodes(self.label_edges) | {a} if self.label_leq(a, b)}

    def dumps(self) -> str:
        lines = [f"label {a} <= {b}" for a, b in sorted(self.label_edges)]
        lines += [f"ctor {a} <= {b}" for a, b in sorted(self.ctor_edges)]
        return "".join(line + "\n" for line in lines)


def _nodes(edges) -> set[str]:
    return {x for edge in edges for x in edge}


def _add(edges: frozenset, lower: str, upper: str, kind: str) -> frozenset:
    if lower == upper:
        return edges
    if _reachable(edges, upper, lower):
        raise TaxonomyCycleError(f"{kind} {lower} <= {upper} would make {lower} and {upper} equivalent")
    return edges | {(lower, upper)}


def add_label_edge(tax: Taxonomy, lower: str, upper: str) -> Taxonomy:
    return tax.add_label_edge(lower, upper)


def add_ctor_edge(tax: Taxonomy, lower: str, upper: str) -> Taxonomy:
    return tax.add_ctor_edge(lower, upper)


def label_leq(tax: Taxonomy, a: str, b: str) -> bool:
    return tax.label_leq(a, b)


def ctor_leq(tax: Taxonomy, a: str, b: str) -> bool:
    return tax.ctor_leq(a, b)


def parse_taxonomy(text: str) -> Taxonomy:
    tax = Taxonomy()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if m is None:
            raise ParseError(f"expected 'label a <= b' or 'ctor c <= d', got {line!r}", lineno, 1)
        kind, lower, upper = m.groups()
        try:
            tax = tax.add_label_edge(lower, upper) if kind == "label" else tax.add_ctor_edge(lower, upper)
        except TaxonomyCycleError as exc:
            raise TaxonomyCycleError(str(exc), lineno) from None
    return tax


def load_taxonomy(path: str | Path) -> Taxonomy:
    return parse_taxonomy(Path(path).read_text(encoding="utf-8"))
