"""Geodesics in BHV tree space by exhaustive support search.

Splits present in both trees (or present in one tree and compatible with
every split of the other) interpolate linearly inside a shared orthant. The
remaining splits ``E`` (first tree only) and ``F`` (second tree only) are
exchanged through a support sequence ``(A_1, B_1), ..., (A_k, B_k)``:
ordered partitions of ``E`` and ``F`` such that

* every split of ``B_i`` is compatible with every split of ``A_j`` for
  ``i < j`` (each intermediate orthant exists), and
* ``|A_1|/|B_1| <= ... <= |A_k|/|B_k|`` (the legs occur in order),

where ``|.|`` is the Euclidean norm of the block's edge lengths. Every such
sequence is realised by a path of length
``sqrt(sum_i (|A_i| + |B_i|)^2 + shared terms)``; the geodesic is the
shortest. The search is a depth-first enumeration with a lower-bound cut,
exact but exponential, hence the leaf-count guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import GuardError, InvalidInputError, Space
from .newick import emit_newick, parse_newick
from .splits import BhvPoint, TaxonSet, clades_compatible, make_point, validate_point

MAX_LEAVES = 8


@dataclass
class Support:
    """Optimal support of a geodesic together with the shared coordinates."""

    shared: dict  # mask -> (length in first tree, length in second tree)
    blocks: list = field(default_factory=list)  # [(A masks, B masks), ...]
    block_norms: list = field(default_factory=list)  # [(|A_i|, |B_i|), ...]
    pendant_sq: float = 0.0

    @property
    def length(self) -> float:
        acc = sum((a + b) ** 2 for a, b in self.block_norms)
        acc += sum((lt - lu) ** 2 for lt, lu in self.shared.values())
        return math.sqrt(acc + self.pendant_sq)

    @property
    def breakpoints(self) -> list:
        return [a / (a + b) for a, b in self.block_norms]


def _subset_sq_norms(lengths):
    m = len(lengths)
    out = [0.0] * (1 << m)
    for mask in range(1, 1 << m):
        low = (mask & -mask).bit_length() - 1
        out[mask] = out[mask & (mask - 1)] + lengths[low] ** 2
    return out


def _search(e_len, f_len, incompat):
    """Best support over E (indices into e_len) and F (indices into f_len).

    ``incompat[j]`` is the bitmask of E-indices incompatible with F-split j.
    Returns ``(value, [(A_bits, B_bits), ...])`` with value = sum (|A|+|B|)^2.
    """
    sq_e = _subset_sq_norms(e_len)
    sq_f = _subset_sq_norms(f_len)
    inc_f = [0] * (1 << len(f_len))
    for mask in range(1, 1 << len(f_len)):
        low = (mask & -mask).bit_length() - 1
        inc_f[mask] = inc_f[mask & (mask - 1)] | incompat[low]

    full_e = (1 << len(e_len)) - 1
    full_f = (1 << len(f_len)) - 1
    norm_e = [math.sqrt(v) for v in sq_e]
    norm_f = [math.sqrt(v) for v in sq_f]
    # the single-block sequence is always admissible
    best_val = (norm_e[full_e] + norm_f[full_f]) ** 2
    best_blocks = [(full_e, full_f)]
    stack = []

    def dfs(erem, frem, last_ratio, acc):
        nonlocal best_val, best_blocks
        if erem == 0:
            if acc < best_val:
                best_val, best_blocks = acc, list(stack)
            return
        if acc + sq_e[erem] + sq_f[frem] >= best_val:
            return
        a = erem
        while a:
            rest_e = erem & ~a
            b = frem
            while b:
                rest_f = frem & ~b
                if (rest_e == 0) == (rest_f == 0) and not (inc_f[b] & rest_e):
                    ratio = norm_e[a] / norm_f[b]
                    if ratio >= last_ratio * (1.0 - 1e-12):
                        stack.append((a, b))
                        dfs(rest_e, rest_f, ratio, acc + (norm_e[a] + norm_f[b]) ** 2)
                        stack.pop()
                b = (b - 1) & frem
            a = (a - 1) & erem

    if full_e:
        dfs(full_e, full_f, 0.0, 0.0)
    return best_val, best_blocks


def geodesic_support(t1: BhvPoint, t2: BhvPoint) -> Support:
    s1, s2 = t1.splits, t2.splits
    shared = {m: (s1[m], s2[m]) for m in s1 if m in s2}
    only1 = [m for m in s1 if m not in s2]
    only2 = [m for m in s2 if m not in s1]
    # splits compatible with the whole other tree stay in the shared orthant
    free1 = [m for m in only1 if all(clades_compatible(m, u) for u in s2)]
    free2 = [m for m in only2 if all(clades_compatible(m, u) for u in s1)]
    for m in free1:
        shared[m] = (s1[m], 0.0)
    for m in free2:
        shared[m] = (0.0, s2[m])
    e = [m for m in only1 if m not in set(free1)]
    f = [m for m in only2 if m not in set(free2)]

    sup = Support(shared=shared, pendant_sq=float(np.sum((t1.pendants - t2.pendants) ** 2)))
    if not e:
        return sup
    incompat = [sum(1 << i for i, em in enumerate(e) if not clades_compatible(em, fm)) for fm in f]
    _, blocks = _search([s1[m] for m in e], [s2[m] for m in f], incompat)
    for a_bits, b_bits in blocks:
        a = tuple(e[i] for i in range(len(e)) if a_bits >> i & 1)
        b = tuple(f[j] for j in range(len(f)) if b_bits >> j & 1)
        sup.blocks.append((a, b))
        sup.block_norms.append((math.sqrt(sum(s1[m] ** 2 for m in a)),
                                math.sqrt(sum(s2[m] ** 2 for m in b))))
    return sup


def geodesic_from_support(t1: BhvPoint, t2: BhvPoint, sup: Support, t: float, tol: float) -> BhvPoint:
    splits = {}
    for m, (l1, l2) in sup.shared.items():
        splits[m] = (1.0 - t) * l1 + t * l2
    for (a, b), (na, nb) in zip(sup.blocks, sup.block_norms):
        drop = (1.0 - t) * na - t * nb
        if drop > 0:
            for m in a:
                splits[m] = drop / na * t1.splits[m]
        else:
            for m in b:
                splits[m] = -drop / nb * t2.splits[m]
    pendants = (1.0 - t) * t1.pendants + t * t2.pendants
    return make_point(splits, pendants, tol)


def cone_path_length(t1: BhvPoint, t2: BhvPoint) -> float:
    """Length of the path that shrinks every non-shared split to zero, then grows the others."""
    s1, s2 = t1.splits, t2.splits
    acc = sum((s1[m] - s2[m]) ** 2 for m in s1 if m in s2)
    na = math.sqrt(sum(v * v for m, v in s1.items() if m not in s2))
    nb = math.sqrt(sum(v * v for m, v in s2.items() if m not in s1))
    acc += (na + nb) ** 2 + float(np.sum((t1.pendants - t2.pendants) ** 2))
    return math.sqrt(acc)


class BHV(Space):
    """Tree space on a fixed taxon set, rooted, pendant edges included."""

    kind = "bhv"

    def __init__(self, taxa, tol: float = 1e-12, max_leaves: int = MAX_LEAVES):
        super().__init__(tol)
        if isinstance(taxa, int):
            taxa = TaxonSet.of(_default_labels(taxa))
        elif not isinstance(taxa, TaxonSet):
            taxa = TaxonSet.of(taxa)
        self.taxa = taxa
        self.max_leaves = max_leaves

    @property
    def leaf_count(self) -> int:
        return self.taxa.leaf_count

    @property
    def descriptor(self):
        return f"bhv:{self.leaf_count}"

    def _guard(self):
        if self.leaf_count > self.max_leaves:
            raise GuardError(
                f"exhaustive geodesic search is limited to {self.max_leaves} taxa, got {self.leaf_count}")

    def validate(self, p):
        validate_point(p, self.taxa, self.tol)

    def _distance(self, p, q):
        self._guard()
        # the cone path is itself a path in the complex; the min only absorbs rounding
        return min(geodesic_support(p, q).length, cone_path_length(p, q))

    def _geodesic(self, p, q, t):
        self._guard()
        return geodesic_from_support(p, q, geodesic_support(p, q), t, self.tol)

    def support(self, p, q) -> Support:
        self.validate(p)
        self.validate(q)
        self._guard()
        return geodesic_support(p, q)

    def cone_path_length(self, p, q) -> float:
        self.validate(p)
        self.validate(q)
        return cone_path_length(p, q)

    def point(self, splits, pendants) -> BhvPoint:
        """Build a point from ``{clade: length}``; clades may be masks or label strings/iterables."""
        conv = {}
        for key, val in splits.items():
            mask = key if isinstance(key, int) else self.taxa.mask(key)
            conv[mask] = val
        p = make_point(conv, pendants, self.tol)
        self.validate(p)
        return p

    def parse(self, text: str) -> BhvPoint:
        p, _ = parse_newick(text, self.taxa)
        p = make_point(p.splits, p.pendants, self.tol)
        self.validate(p)
        return p

    def encode(self, p):
        self.validate(p)
        return emit_newick(p, self.taxa)

    def decode(self, obj):
        if not isinstance(obj, str):
            raise InvalidInputError(f"tree-space point must be a Newick string, got {obj!r}")
        return self.parse(obj)


def _default_labels(n):
    if n < 3:
        raise InvalidInputError(f"tree space needs at least 3 taxa, got {n}")
    return [chr(ord("A") + i) if n <= 26 else f"t{i}" for i in range(n)]


def bhv_distance(t1: BhvPoint, t2: BhvPoint, taxa: TaxonSet, tol: float = 1e-12) -> float:
    return BHV(taxa, tol).distance(t1, t2)


def bhv_geodesic(t1: BhvPoint, t2: BhvPoint, t: float, taxa: TaxonSet, tol: float = 1e-12) -> BhvPoint:
    return BHV(taxa, tol).geodesic(t1, t2, t)
