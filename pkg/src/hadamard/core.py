"""The metric-space contract shared by every backend, plus geometric checks.

A backend is a :class:`Space` subclass. Points are plain immutable values;
the space they are handed to validates them, so mixing points from two
different spaces fails loudly instead of producing a meaningless number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any


class InvalidInputError(ValueError):
    """Malformed point, parameter, or backend mismatch."""


class GuardError(InvalidInputError):
    """A size guard on an exhaustive computation was exceeded."""


MAX_TOLERANCE = 1e-6


class Space:
    """Abstract Hadamard space.

    Subclasses implement ``validate``, ``_distance`` and ``_geodesic``;
    the public methods do the argument checking.
    """

    kind = "abstract"

    def __init__(self, tol: float = 1e-12):
        tol = float(tol)
        if not (0.0 <= tol <= MAX_TOLERANCE):
            raise InvalidInputError(f"tolerance must lie in [0, {MAX_TOLERANCE}], got {tol}")
        self.tol = tol

    # -- backend hooks -------------------------------------------------
    def validate(self, p) -> None:
        raise NotImplementedError

    def _distance(self, p, q) -> float:
        raise NotImplementedError

    def _geodesic(self, p, q, t: float):
        raise NotImplementedError

    def encode(self, p) -> Any:
        """JSON-ready encoding of a point."""
        raise NotImplementedError

    def decode(self, obj: Any):
        raise NotImplementedError

    @property
    def descriptor(self) -> str:
        raise NotImplementedError

    # -- public API ----------------------------------------------------
    def distance(self, p, q) -> float:
        self.validate(p)
        self.validate(q)
        return self._distance(p, q)

    def geodesic(self, p, q, t: float):
        self.validate(p)
        self.validate(q)
        t = _check_t(t)
        if t == 0.0:
            return p
        if t == 1.0:
            return q
        return self._geodesic(p, q, t)

    def equal(self, p, q) -> bool:
        return self.distance(p, q) <= self.tol

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor!r})"


def _check_t(t) -> float:
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise InvalidInputError(f"geodesic parameter must lie in [0, 1], got {t}")
    return t


def distance(space: Space, p, q) -> float:
    return space.distance(p, q)


def geodesic_point(space: Space, p, q, t: float):
    """Point ``(1-t) p + t q`` on the geodesic from ``p`` to ``q``."""
    return space.geodesic(p, q, t)


def cat0_gap(space: Space, z, p, q, t: float) -> float:
    """Signed slack of the CAT(0) comparison inequality.

    Returns ``d(z, g)^2 - [(1-t) d(z,p)^2 + t d(z,q)^2 - t(1-t) d(p,q)^2]``
    where ``g`` is the geodesic point at ``t``. Nonpositive (up to rounding)
    in any Hadamard space, zero in Euclidean space.
    """
    t = _check_t(t)
    g = space.geodesic(p, q, t)
    d_zg = space.distance(z, g)
    d_zp = space.distance(z, p)
    d_zq = space.distance(z, q)
    d_pq = space.distance(p, q)
    return d_zg**2 - ((1.0 - t) * d_zp**2 + t * d_zq**2 - t * (1.0 - t) * d_pq**2)


def reshetnyak_gap(space: Space, x, y, u, v) -> float:
    """``d(x,y)^2 + d(u,v)^2 - d(x,v)^2 - d(y,u)^2 - 2 d(x,u) d(y,v)``; nonpositive in CAT(0)."""
    d = space.distance
    return d(x, y) ** 2 + d(u, v) ** 2 - d(x, v) ** 2 - d(y, u) ** 2 - 2.0 * d(x, u) * d(y, v)


@dataclass(frozen=True)
class GeodesicBall:
    """Closed ball ``{x : d(x, center) <= radius}``; convex in any Hadamard space."""

    center: Any
    radius: float

    def __post_init__(self):
        r = float(self.radius)
        if not (r >= 0.0 and math.isfinite(r)):
            raise InvalidInputError(f"ball radius must be finite and nonnegative, got {self.radius}")
        object.__setattr__(self, "radius", r)

    def contains(self, space: Space, x) -> bool:
        return space.distance(x, self.center) <= self.radius + space.tol

    def distance_to(self, space: Space, x) -> float:
        return max(0.0, space.distance(x, self.center) - self.radius)

    def project(self, space: Space, x):
        return project_ball(space, self, x)


def project_ball(space: Space, ball: GeodesicBall, x):
    """Metric projection of ``x`` onto a closed geodesic ball."""
    d = space.distance(x, ball.center)
    if d <= ball.radius:
        return x
    return space.geodesic(ball.center, x, ball.radius / d)
