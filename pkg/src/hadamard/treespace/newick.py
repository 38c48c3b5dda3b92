"""Reader and writer for the Newick subset used by tree space.

Grammar::

    tree    := subtree [":" length] ";"
    subtree := leaf ":" length | "(" subtree ("," subtree)+ ")" ":" length

The outermost subtree is the root and its length is optional. Every other
node must carry a branch length; there are no internal labels or comments.
"""

from __future__ import annotations

import math
import re

from ..core import InvalidInputError
from .splits import BhvPoint, TaxonSet, popcount

_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_RESERVED = set("(),:;")


class NewickError(InvalidInputError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            found = self.peek() or "end of input"
            raise NewickError(f"expected {ch!r}, found {found!r}", self.pos)
        self.pos += 1

    def length(self, required=True):
        if self.peek() != ":":
            if required:
                raise NewickError("missing branch length", self.pos)
            return None
        self.pos += 1
        self.skip()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            raise NewickError("malformed branch length", self.pos)
        value = float(m.group())
        if value < 0 or not math.isfinite(value):
            raise NewickError(f"branch length {m.group()} must be finite and nonnegative", self.pos)
        self.pos = m.end()
        return value

    def label(self):
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _RESERVED:
            self.pos += 1
        lab = self.text[start:self.pos].strip()
        if not lab:
            raise NewickError("empty leaf label", start)
        return lab

    def subtree(self, is_root=False):
        if self.peek() == "(":
            start = self.pos
            self.pos += 1
            children = [self.subtree()]
            while self.peek() == ",":
                self.pos += 1
                children.append(self.subtree())
            self.expect(")")
            if len(children) < 2:
                raise NewickError("internal node needs at least two children", start)
            return ("node", children, self.length(required=not is_root))
        lab = self.label()
        return ("leaf", lab, self.length())

    def tree(self):
        node = self.subtree(is_root=True)
        if node[0] == "leaf":
            raise NewickError("a tree needs at least two leaves", 0)
        self.expect(";")
        if self.peek():
            raise NewickError("trailing characters after ';'", self.pos)
        return node


def _leaves(node, out):
    if node[0] == "leaf":
        out.append(node[1])
    else:
        for child in node[1]:
            _leaves(child, out)
    return out


def parse_newick(text: str, taxa: TaxonSet | None = None) -> tuple[BhvPoint, TaxonSet]:
    """Parse one rooted Newick tree into its split encoding.

    When ``taxa`` is omitted the taxon order is the order in which leaves
    appear. Interior edges of length zero are dropped (the point lies on an
    orthant boundary).
    """
    root = _Parser(text).tree()
    labels = _leaves(root, [])
    seen = set()
    for lab in labels:
        if lab in seen:
            raise InvalidInputError(f"duplicate leaf label {lab!r}")
        seen.add(lab)
    if taxa is None:
        taxa = TaxonSet.of(labels)
    elif seen != set(taxa.labels):
        missing = sorted(set(taxa.labels) - seen)
        extra = sorted(seen - set(taxa.labels))
        raise InvalidInputError(f"leaf labels do not match the taxon set (missing {missing}, unexpected {extra})")

    n = taxa.leaf_count
    pendants = [0.0] * (n + 1)
    splits = {}

    def walk(node):
        if node[0] == "leaf":
            i = taxa.index(node[1])
            pendants[i] = node[2]
            return 1 << i
        mask = 0
        for child in node[1]:
            mask |= walk(child)
        if node is not root and node[2] > 0:
            splits[mask] = node[2]
        return mask

    walk(root)
    if root[2] is not None:
        pendants[n] = root[2]
    return BhvPoint(splits, pendants), taxa


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_newick(point: BhvPoint, taxa: TaxonSet) -> str:
    """Write ``point`` as Newick; children are ordered by their lowest taxon index."""
    n = taxa.leaf_count
    clades = sorted(point.splits, key=popcount)
    # smallest enclosing clade of each clade / leaf; -1 is the root
    def parent_of(mask):
        for c in clades:
            if c != mask and (mask & c) == mask:
                return c
        return -1

    children = {c: [] for c in clades}
    children[-1] = []
    for c in clades:
        children[parent_of(c)].append(c)
    for i in range(n):
        children[parent_of(1 << i)].append(1 << i)

    def render(mask):
        if mask != -1 and popcount(mask) == 1:
            i = mask.bit_length() - 1
            return f"{taxa.labels[i]}:{_fmt(point.pendants[i])}"
        kids = sorted(children[mask], key=lambda m: (m & -m))
        body = "(" + ",".join(render(k) for k in kids) + ")"
        if mask == -1:
            return body
        return f"{body}:{_fmt(point.splits[mask])}"

    out = render(-1)
    if point.pendants[n] > 0:
        out += f":{_fmt(point.pendants[n])}"
    return out + ";"
