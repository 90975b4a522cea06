"""Coherent system structures: a small expression tree, a text DSL for it, and
evaluation of the structure function and of the system lifetime.

Grammar (whitespace-insensitive)::

    expr   := leaf | call
    leaf   := "c" INT
    call   := ("series" | "parallel") "(" expr ("," expr)* ")"
            | "kofn" "(" INT ";" expr ("," expr)* ")"
            | "bridge" "(" expr "," expr "," expr "," expr "," expr ")"

``bridge(a,b,c,d,e)`` expands to the union of its minimal path sets
{1,4}, {2,5}, {1,3,5}, {2,3,4}.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Component:
    id: int

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"component id must be >= 1, got {self.id}")


@dataclass(frozen=True)
class Series:
    children: tuple

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("series node needs at least 2 children")


@dataclass(frozen=True)
class Parallel:
    children: tuple

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("parallel node needs at least 2 children")


@dataclass(frozen=True)
class KofN:
    k: int
    children: tuple

    def __post_init__(self):
        if not 1 <= self.k <= len(self.children):
            raise ValueError(
                f"kofn needs 1 <= k <= {len(self.children)} children, got k={self.k}")


StructureExpr = Union[Component, Series, Parallel, KofN]


class StructureSyntaxError(ValueError):
    """Malformed structure text; ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, pos: int, text: str):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}: {text[:pos]}<HERE>{text[pos:]}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<punct>[(),;]))")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise StructureSyntaxError(f"unexpected character {text[start]!r}", start, text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.i]
        if (kind is not None and tok[0] != kind) or (value is not None and tok[1] != value):
            want = repr(value) if value is not None else kind
            got = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise StructureSyntaxError(f"expected {want}, got {got}", tok[2], self.text)
        self.i += 1
        return tok

    def error(self, msg, tok):
        raise StructureSyntaxError(msg, tok[2], self.text)

    def expr(self):
        tok = self.take("name")
        name = tok[1].lower()
        leaf = re.fullmatch(r"c(\d+)", name)
        if leaf:
            cid = int(leaf.group(1))
            if cid == 0:
                self.error("component id 0 is not allowed (ids start at 1)", tok)
            return Component(cid)
        if name in ("series", "parallel", "bridge"):
            self.take("punct", "(")
            children = self.children()
            if name == "bridge":
                if len(children) != 5:
                    self.error(f"bridge takes exactly 5 arguments, got {len(children)}", tok)
                return bridge(*children)
            if len(children) < 2:
                self.error(f"{name} needs at least 2 children, got {len(children)}", tok)
            return (Series if name == "series" else Parallel)(tuple(children))
        if name == "kofn":
            self.take("punct", "(")
            ktok = self.take("num")
            self.take("punct", ";")
            children = self.children()
            k = int(ktok[1])
            if not 1 <= k <= len(children):
                self.error(f"k={k} out of range 1..{len(children)}", ktok)
            return KofN(k, tuple(children))
        self.error(f"unknown node {tok[1]!r}", tok)

    def children(self):
        out = [self.expr()]
        while self.peek()[1] == ",":
            self.take("punct", ",")
            out.append(self.expr())
        self.take("punct", ")")
        return out


def bridge(a, b, c, d, e) -> Parallel:
    """Bridge of five sub-structures as a parallel-of-series over its path sets."""
    return Parallel((Series((a, d)), Series((b, e)), Series((a, c, e)), Series((b, c, d))))


def parse_structure(text: str, n_components: int | None = None) -> StructureExpr:
    """Parse structure DSL text into a tree.

    If ``n_components`` is given every referenced id must lie in ``1..n_components``.
    """
    p = _Parser(text)
    expr = p.expr()
    p.take("eof")
    if n_components is not None:
        bad = [i for i in component_ids(expr) if i > n_components]
        if bad:
            raise ValueError(f"component ids {bad} exceed declared count {n_components}")
    return expr


def format_structure(expr: StructureExpr) -> str:
    if isinstance(expr, Component):
        return f"c{expr.id}"
    inner = ",".join(format_structure(c) for c in expr.children)
    if isinstance(expr, KofN):
        return f"kofn({expr.k};{inner})"
    return f"{'series' if isinstance(expr, Series) else 'parallel'}({inner})"


BUILTIN_STRUCTURES = {
    "series4": "series(c1,c2,c3,c4)",
    "parallel3": "parallel(c1,c2,c3)",
    "ps3": "parallel(c1,series(c2,c3))",
    "sp3": "series(c1,parallel(c2,c3))",
    "bridge": "bridge(c1,c2,c3,c4,c5)",
    "bridge_cuts": ("series(parallel(c1,c2),parallel(c4,c5),"
                    "parallel(c1,c3,c5),parallel(c2,c3,c4))"),
    "2of3": "kofn(2;c1,c2,c3)",
    "2of3_paths": "parallel(series(c1,c2),series(c1,c3),series(c2,c3))",
    "2of3_cuts": "series(parallel(c1,c2),parallel(c1,c3),parallel(c2,c3))",
}


def load_structure(source: str) -> StructureExpr:
    """Resolve a builtin name, a path to a DSL file, or inline DSL text."""
    if source in BUILTIN_STRUCTURES:
        return parse_structure(BUILTIN_STRUCTURES[source])
    path = Path(source)
    if "(" not in source and path.is_file():
        return parse_structure(path.read_text(encoding="utf-8"))
    return parse_structure(source)


# ---------------------------------------------------------------------------
# evaluation

def component_ids(expr: StructureExpr) -> set[int]:
    if isinstance(expr, Component):
        return {expr.id}
    return set().union(*(component_ids(c) for c in expr.children))


def n_components(expr: StructureExpr) -> int:
    return max(component_ids(expr))


def evaluate(expr: StructureExpr, state: Sequence[bool]) -> bool:
    """Structure function: True iff the system works given component states."""
    if isinstance(expr, Component):
        return bool(state[expr.id - 1])
    if isinstance(expr, Series):
        return all(evaluate(c, state) for c in expr.children)
    if isinstance(expr, Parallel):
        return any(evaluate(c, state) for c in expr.children)
    return sum(evaluate(c, state) for c in expr.children) >= expr.k


def _lifetime(expr, x):
    # x has components on the last axis; works for 1-D or batched 2-D input
    if isinstance(expr, Component):
        return x[..., expr.id - 1]
    kids = [_lifetime(c, x) for c in expr.children]
    if isinstance(expr, Series):
        return np.minimum.reduce(kids)
    if isinstance(expr, Parallel):
        return np.maximum.reduce(kids)
    # k-of-n works until fewer than k children survive: the k-th largest
    stacked = np.sort(np.stack(kids, axis=-1), axis=-1)
    return stacked[..., len(kids) - expr.k]


def system_lifetime(expr: StructureExpr, lifetimes) -> float:
    """System failure time from component lifetimes (min/max lattice form)."""
    x = np.asarray(lifetimes, dtype=float)
    if x.ndim != 1:
        raise ValueError("lifetimes must be a 1-D vector; use system_lifetimes for batches")
    if not np.all(np.isfinite(x) & (x > 0)):
        raise ValueError("lifetimes must be finite and strictly positive")
    return float(_lifetime(expr, x))


def system_lifetimes(expr: StructureExpr, lifetimes) -> np.ndarray:
    """Vectorised ``system_lifetime`` over rows of an (n_units, m) array."""
    x = np.asarray(lifetimes, dtype=float)
    return np.asarray(_lifetime(expr, x), dtype=float)
