"""Concrete backends: Euclidean space, the k-spider, and SPD matrices.

The SPD manifold carries the affine-invariant metric
``<X, Y>_A = tr(A^-1 X A^-1 Y)``, whose distance is the 2-norm of the
log-eigenvalues of ``A^-1 B`` and whose geodesic is
``A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .core import InvalidInputError, Space


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------- Euclidean


class EuclideanPoint:
    __slots__ = ("coords",)

    def __init__(self, coords):
        self.coords = _frozen(coords).reshape(-1)

    def __repr__(self):
        return f"EuclideanPoint({self.coords.tolist()})"


class Euclidean(Space):
    kind = "euclidean"

    def __init__(self, dim: int, tol: float = 1e-12):
        super().__init__(tol)
        if int(dim) != dim or dim < 1:
            raise InvalidInputError(f"dimension must be a positive integer, got {dim}")
        self.dim = int(dim)

    @property
    def descriptor(self):
        return f"euclidean:{self.dim}"

    def point(self, coords) -> EuclideanPoint:
        p = EuclideanPoint(coords)
        self.validate(p)
        return p

    def validate(self, p):
        if not isinstance(p, EuclideanPoint):
            raise InvalidInputError(f"{self.descriptor} expects EuclideanPoint, got {type(p).__name__}")
        if p.coords.shape != (self.dim,):
            raise InvalidInputError(f"{self.descriptor} expects {self.dim} coordinates, got {p.coords.shape[0]}")
        if not np.all(np.isfinite(p.coords)):
            raise InvalidInputError("non-finite coordinate")

    def _distance(self, p, q):
        return float(np.linalg.norm(p.coords - q.coords))

    def _geodesic(self, p, q, t):
        return EuclideanPoint(p.coords + t * (q.coords - p.coords))

    def encode(self, p):
        self.validate(p)
        return [float(c) for c in p.coords]

    def decode(self, obj):
        if not isinstance(obj, (list, tuple)) or not all(isinstance(c, (int, float)) for c in obj):
            raise InvalidInputError(f"Euclidean point must be an array of numbers, got {obj!r}")
        return self.point(obj)


def euclid_distance(p: EuclideanPoint, q: EuclideanPoint) -> float:
    if p.coords.shape != q.coords.shape:
        raise InvalidInputError("dimension mismatch")
    return float(np.linalg.norm(p.coords - q.coords))


def euclid_geodesic(p: EuclideanPoint, q: EuclideanPoint, t: float) -> EuclideanPoint:
    if p.coords.shape != q.coords.shape:
        raise InvalidInputError("dimension mismatch")
    return EuclideanPoint(p.coords + t * (q.coords - p.coords))


# ------------------------------------------------------------------- spider


class SpiderPoint(NamedTuple):
    """Point at distance ``radius`` from the origin along ``ray``.

    The origin is canonically ``SpiderPoint(0, 0.0)``.
    """

    ray: int
    radius: float


class Spider(Space):
    """``ray_count`` half-lines glued at a common origin (an R-tree)."""

    kind = "spider"

    def __init__(self, ray_count: int, tol: float = 1e-12):
        super().__init__(tol)
        if int(ray_count) != ray_count or ray_count < 3:
            raise InvalidInputError(f"a spider needs at least 3 rays, got {ray_count}")
        self.ray_count = int(ray_count)

    @property
    def descriptor(self):
        return f"spider:{self.ray_count}"

    @property
    def origin(self) -> SpiderPoint:
        return SpiderPoint(0, 0.0)

    def point(self, ray: int, radius: float) -> SpiderPoint:
        p = SpiderPoint(int(ray), float(radius))
        self.validate(p)
        return self.canonical(p)

    def canonical(self, p: SpiderPoint) -> SpiderPoint:
        if p.radius <= self.tol:
            return SpiderPoint(0, 0.0)
        return p

    def validate(self, p):
        if not isinstance(p, SpiderPoint):
            raise InvalidInputError(f"{self.descriptor} expects SpiderPoint, got {type(p).__name__}")
        if not (0 <= p.ray < self.ray_count):
            raise InvalidInputError(f"ray index {p.ray} out of range for {self.descriptor}")
        if not (p.radius >= 0.0 and math.isfinite(p.radius)):
            raise InvalidInputError(f"spider radius must be finite and nonnegative, got {p.radius}")

    def _distance(self, p, q):
        return spider_distance(p, q)

    def _geodesic(self, p, q, t):
        ray, rad = K.spider_geodesic(p.ray, p.radius, q.ray, q.radius, t, self.tol)
        return SpiderPoint(int(ray), float(rad))

    def encode(self, p):
        self.validate(p)
        return {"ray": int(p.ray), "radius": float(p.radius)}

    def decode(self, obj):
        if not isinstance(obj, dict) or set(obj) != {"ray", "radius"}:
            raise InvalidInputError(f"spider point must be {{ray, radius}}, got {obj!r}")
        if not isinstance(obj["ray"], int) or isinstance(obj["ray"], bool):
            raise InvalidInputError(f"spider ray must be an integer, got {obj['ray']!r}")
        return self.point(obj["ray"], obj["radius"])


def spider_distance(p: SpiderPoint, q: SpiderPoint) -> float:
    if p.ray == q.ray:
        return abs(p.radius - q.radius)
    return p.radius + q.radius


def spider_geodesic(p: SpiderPoint, q: SpiderPoint, t: float, tol: float = 1e-12) -> SpiderPoint:
    ray, rad = K.spider_geodesic(p.ray, p.radius, q.ray, q.radius, float(t), tol)
    return SpiderPoint(int(ray), float(rad))


# ---------------------------------------------------------------------- SPD


class SpdPoint:
    __slots__ = ("matrix",)

    def __init__(self, matrix):
        self.matrix = _frozen(matrix)

    def __repr__(self):
        return f"SpdPoint({self.matrix.tolist()})"


class SPD(Space):
    """Symmetric positive definite ``n x n`` matrices, affine-invariant metric."""

    kind = "spd"

    def __init__(self, n: int, tol: float = 1e-12):
        super().__init__(tol)
        if int(n) != n or n < 1:
            raise InvalidInputError(f"matrix order must be a positive integer, got {n}")
        self.n = int(n)

    @property
    def descriptor(self):
        return f"spd:{self.n}"

    @property
    def floor(self) -> float:
        # eigenvalue clamp; tol may be zero
        return max(self.tol, 1e-300)

    def point(self, matrix) -> SpdPoint:
        p = SpdPoint(matrix)
        self.validate(p)
        return p

    def validate(self, p):
        if not isinstance(p, SpdPoint):
            raise InvalidInputError(f"{self.descriptor} expects SpdPoint, got {type(p).__name__}")
        m = p.matrix
        if m.shape != (self.n, self.n):
            raise InvalidInputError(f"{self.descriptor} expects a {self.n}x{self.n} matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("non-finite matrix entry")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > 1e-12 * scale:
            raise InvalidInputError("matrix is not symmetric")
        lowest = np.linalg.eigvalsh(m)[0]
        if lowest < self.tol or lowest <= 0.0:
            raise InvalidInputError("matrix is not positive definite")

    def _distance(self, p, q):
        return float(K.spd_distance(p.matrix, q.matrix, self.floor))

    def _geodesic(self, p, q, t):
        return SpdPoint(K.spd_geodesic(p.matrix, q.matrix, t, self.floor))

    def encode(self, p):
        self.validate(p)
        return [[float(v) for v in row] for row in p.matrix]

    def decode(self, obj):
        try:
            m = np.array(obj, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"SPD point must be a square numeric array: {exc}") from None
        if m.ndim != 2:
            raise InvalidInputError("SPD point must be a row-major square array")
        return self.point(m)


def spd_distance(a: SpdPoint, b: SpdPoint, tol: float = 1e-12) -> float:
    return SPD(a.matrix.shape[0], tol).distance(a, b)


def spd_geodesic(a: SpdPoint, b: SpdPoint, t: float, tol: float = 1e-12) -> SpdPoint:
    return SPD(a.matrix.shape[0], tol).geodesic(a, b, t)


def parse_space(descriptor: str, tol: float = 1e-12) -> Space:
    """Build a space from ``euclidean:d``, ``spider:k`` or ``spd:n``.

    BHV spaces need a taxon set and are built by :mod:`hadamard.treespace`.
    """
    name, _, arg = descriptor.partition(":")
    builders = {"euclidean": Euclidean, "spider": Spider, "spd": SPD}
    if name not in builders:
        raise InvalidInputError(f"unknown space {descriptor!r}")
    try:
        size = int(arg)
    except ValueError:
        raise InvalidInputError(f"space {descriptor!r} needs an integer size, e.g. {name}:3") from None
    return builders[name](size, tol)
