"""Split (bipartition) encoding of rooted metric trees.

A tree on ``n`` taxa is encoded with the root as an extra taxon at bit
position ``n``. Each interior edge is stored as the bitmask of the clade
below it, i.e. the side of the bipartition that does not contain the root.
Clades of a single leaf are pendant edges and live in a separate
``pendants`` vector (length ``n + 1``; the last slot is the edge above the
root, zero unless the Newick text gives one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from ..core import InvalidInputError


@dataclass(frozen=True)
class TaxonSet:
    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) < 3:
            raise InvalidInputError(f"tree space needs at least 3 taxa, got {len(labels)}")
        for lab in labels:
            if not isinstance(lab, str) or not lab:
                raise InvalidInputError(f"taxon labels must be nonempty strings, got {lab!r}")
            if any(c in lab for c in "(),:;"):
                raise InvalidInputError(f"taxon label {lab!r} contains a reserved character")
        if len(set(labels)) != len(labels):
            raise InvalidInputError("taxon labels must be unique")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def of(cls, labels: Iterable[str]) -> "TaxonSet":
        return cls(tuple(labels))

    @property
    def leaf_count(self) -> int:
        return len(self.labels)

    @property
    def leaves_mask(self) -> int:
        return (1 << self.leaf_count) - 1

    @property
    def full_mask(self) -> int:
        """All taxa plus the root marker."""
        return (1 << (self.leaf_count + 1)) - 1

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InvalidInputError(f"unknown taxon {label!r}") from None

    def mask(self, labels: Iterable[str]) -> int:
        m = 0
        for lab in labels:
            m |= 1 << self.index(lab)
        return m

    def members(self, mask: int) -> list:
        return [lab for i, lab in enumerate(self.labels) if mask >> i & 1]

    def __len__(self):
        return self.leaf_count


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def is_pendant(mask: int, taxa: TaxonSet) -> bool:
    """True for single-leaf clades and for the all-leaves clade (the root edge)."""
    return popcount(mask) == 1 or mask == taxa.leaves_mask


def splits_compatible(s: int, u: int, full_mask: int | None = None) -> bool:
    """Two splits are compatible iff one of the four side intersections is empty."""
    if full_mask is None:
        full_mask = (1 << max(s.bit_length(), u.bit_length(), 1) + 1) - 1
    cs, cu = full_mask & ~s, full_mask & ~u
    return not (s & u) or not (s & cu) or not (cs & u) or not (cs & cu)


def clades_compatible(s: int, u: int) -> bool:
    # rooted clades never contain the root bit, so the fourth intersection is never empty
    return not (s & u) or not (s & ~u) or not (u & ~s)


def split_label(mask: int, taxa: TaxonSet) -> str:
    return "".join(taxa.members(mask))


class BhvPoint:
    """A point of tree space: interior clade lengths plus pendant lengths."""

    __slots__ = ("splits", "pendants")

    def __init__(self, splits: Mapping[int, float], pendants):
        self.splits = MappingProxyType({int(m): float(v) for m, v in splits.items()})
        p = np.array(pendants, dtype=float).reshape(-1)
        p.setflags(write=False)
        self.pendants = p

    def __repr__(self):
        inner = ", ".join(f"{m:#b}:{v:g}" for m, v in sorted(self.splits.items()))
        return f"BhvPoint({{{inner}}}, pendants={self.pendants.tolist()})"


def validate_point(p, taxa: TaxonSet, tol: float) -> None:
    if not isinstance(p, BhvPoint):
        raise InvalidInputError(f"tree space expects BhvPoint, got {type(p).__name__}")
    n = taxa.leaf_count
    if p.pendants.shape != (n + 1,):
        raise InvalidInputError(f"expected {n + 1} pendant lengths, got {p.pendants.shape[0]}")
    if not np.all(np.isfinite(p.pendants)) or np.any(p.pendants < 0):
        raise InvalidInputError("pendant lengths must be finite and nonnegative")
    if len(p.splits) > n - 2:
        raise InvalidInputError(f"a rooted tree on {n} taxa has at most {n - 2} interior edges")
    masks = list(p.splits)
    for m in masks:
        if m & ~taxa.leaves_mask or popcount(m) < 2 or m == taxa.leaves_mask:
            raise InvalidInputError(f"{m:#b} is not an interior clade on {n} taxa")
        length = p.splits[m]
        if not (length > tol and math.isfinite(length)):
            raise InvalidInputError(f"interior edge {split_label(m, taxa)} has length {length}; must exceed {tol}")
    for i, a in enumerate(masks):
        for b in masks[i + 1:]:
            if not clades_compatible(a, b):
                raise InvalidInputError(
                    f"clades {split_label(a, taxa)} and {split_label(b, taxa)} are incompatible")


def make_point(splits: Mapping[int, float], pendants, tol: float = 1e-12) -> BhvPoint:
    """Build a point, dropping interior edges of length ``<= tol``."""
    return BhvPoint({m: v for m, v in splits.items() if v > tol}, pendants)
