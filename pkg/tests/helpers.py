"""Random instance generators shared by the test modules."""

import itertools

import numpy as np

from hadamard import BHV, SPD, Euclidean, Spider
from hadamard.treespace.splits import clades_compatible


def euclid_point(rng, space, spread=2.0):
    return space.point(rng.uniform(-spread, spread, space.dim))


def spider_point(rng, space, spread=3.0):
    if rng.random() < 0.1:
        return space.origin
    return space.point(int(rng.integers(space.ray_count)), rng.uniform(0.0, spread))


def spd_point(rng, space):
    a = rng.uniform(-1.0, 1.0, (space.n, space.n))
    vals, vecs = np.linalg.eigh((a + a.T) / 2.0)
    return space.point(vecs @ np.diag(np.exp(vals)) @ vecs.T)


def _clades(n):
    leaves = range(n)
    out = []
    for size in range(2, n):
        for combo in itertools.combinations(leaves, size):
            out.append(sum(1 << i for i in combo))
    return out


def tree_point(rng, space, max_len=1.5, p_keep=0.7, root=True):
    n = space.leaf_count
    splits = {}
    for m in rng.permutation(_clades(n)):
        m = int(m)
        if len(splits) >= n - 2:
            break
        if rng.random() < p_keep and all(clades_compatible(m, u) for u in splits):
            splits[m] = rng.uniform(0.05, max_len)
    pendants = np.r_[rng.uniform(0.05, max_len, n), rng.uniform(0.0, max_len) if root and rng.random() < 0.5 else 0.0]
    return space.point(splits, pendants)


def sampler(space):
    if isinstance(space, Euclidean):
        return lambda rng: euclid_point(rng, space)
    if isinstance(space, Spider):
        return lambda rng: spider_point(rng, space)
    if isinstance(space, SPD):
        return lambda rng: spd_point(rng, space)
    if isinstance(space, BHV):
        return lambda rng: tree_point(rng, space)
    raise TypeError(space)


def scale(space, pts):
    return max(space.distance(a, b) for a in pts for b in pts)


def flat_spaces():
    """Backends with compiled drivers, with small but nontrivial sizes."""
    return [Euclidean(3), Spider(3), Spider(5), SPD(2), SPD(3)]
