"""Objective components and their resolvents.

Every shipped component moves ``x`` along a geodesic toward a target point
(an anchor, or the projection of ``x`` onto a convex set), so each resolvent
is a geodesic evaluation at an explicit coefficient ``t``:

=========================  ===========================================
``w d(., a)^2``            ``t = 2 lam w / (1 + 2 lam w)`` toward ``a``
``w d(., a)``              ``t = min(1, lam w / d(x, a))`` toward ``a``
indicator of ``C``         ``t = 1`` toward ``P_C(x)``
``w d(., C)``              ``t = min(1, lam w / d(x, P_C(x)))`` toward ``P_C(x)``
=========================  ===========================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .core import InvalidInputError, Space


def _positive(name, value):
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise InvalidInputError(f"{name} must be positive and finite, got {value}")
    return value


def squared_distance_coefficient(lam: float, w: float) -> float:
    return 2.0 * lam * w / (1.0 + 2.0 * lam * w)


def distance_coefficient(lam: float, w: float, dist: float, tol: float = 0.0) -> float:
    # at (or within tol of) the anchor the resolvent is the anchor itself
    if dist <= tol:
        return 1.0
    return min(1.0, lam * w / dist)


def prox_scaled_squared_distance(space: Space, anchor, w: float, lam: float, x):
    """Resolvent of ``w d(., anchor)^2`` with parameter ``lam``."""
    t = squared_distance_coefficient(_positive("lambda", lam), _positive("weight", w))
    return space.geodesic(x, anchor, t)


def prox_scaled_distance(space: Space, anchor, w: float, lam: float, x):
    """Resolvent of ``w d(., anchor)`` with parameter ``lam``."""
    lam, w = _positive("lambda", lam), _positive("weight", w)
    t = distance_coefficient(lam, w, space.distance(anchor, x), space.tol)
    return space.geodesic(x, anchor, t)


def prox_indicator(space: Space, cset, x):
    return cset.project(space, x)


def prox_scaled_set_distance(space: Space, cset, w: float, lam: float, x):
    """Resolvent of ``w d(., C)``: move toward ``P_C(x)`` by at most ``lam w``."""
    lam, w = _positive("lambda", lam), _positive("weight", w)
    target = cset.project(space, x)
    d = space.distance(target, x)
    if d <= space.tol:
        return x
    return space.geodesic(x, target, min(1.0, lam * w / d))


# --------------------------------------------------------------- components


class Component:
    """One summand ``f_n`` of the objective, exposed through value and resolvent."""

    def value(self, space: Space, x) -> float:
        raise NotImplementedError

    def prox_step(self, space: Space, lam: float, x):
        """Resolvent at ``x`` returned as ``(point, t, distance moved)``."""
        raise NotImplementedError

    def prox(self, space: Space, lam: float, x):
        return self.prox_step(space, lam, x)[0]


@dataclass(frozen=True)
class ScaledSquaredDistance(Component):
    anchor: Any
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "weight", _positive("weight", self.weight))

    def value(self, space, x):
        return self.weight * space.distance(x, self.anchor) ** 2

    def prox_step(self, space, lam, x):
        t = squared_distance_coefficient(_positive("lambda", lam), self.weight)
        d = space.distance(x, self.anchor)
        return space.geodesic(x, self.anchor, t), t, t * d


@dataclass(frozen=True)
class ScaledDistance(Component):
    anchor: Any
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "weight", _positive("weight", self.weight))

    def value(self, space, x):
        return self.weight * space.distance(x, self.anchor)

    def prox_step(self, space, lam, x):
        d = space.distance(x, self.anchor)
        t = distance_coefficient(_positive("lambda", lam), self.weight, d, space.tol)
        return space.geodesic(x, self.anchor, t), t, t * d


@dataclass(frozen=True)
class Indicator(Component):
    """Indicator of a closed convex set with a ``project(space, x)`` method."""

    cset: Any

    def value(self, space, x):
        return 0.0 if self.cset.distance_to(space, x) <= space.tol else math.inf

    def prox_step(self, space, lam, x):
        target = self.cset.project(space, x)
        d = space.distance(x, target)
        return target, (1.0 if d > 0 else 0.0), d


@dataclass(frozen=True)
class ScaledSetDistance(Component):
    cset: Any
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "weight", _positive("weight", self.weight))

    def value(self, space, x):
        return self.weight * self.cset.distance_to(space, x)

    def prox_step(self, space, lam, x):
        lam = _positive("lambda", lam)
        target = self.cset.project(space, x)
        d = space.distance(target, x)
        if d <= space.tol:
            return x, 0.0, 0.0
        t = min(1.0, lam * self.weight / d)
        return space.geodesic(x, target, t), t, t * d


def objective_value(space: Space, components: Sequence[Component], x) -> float:
    """``sum_n f_n(x)``; ``inf`` as soon as an indicator is violated."""
    return float(sum(c.value(space, x) for c in components))


# ---------------------------------------------------------------- data/config


@dataclass(frozen=True)
class AnchorConfiguration:
    """Anchors ``a_1..a_N`` with positive weights, normalised to sum to one."""

    anchors: tuple
    weights: np.ndarray

    def __post_init__(self):
        anchors = tuple(self.anchors)
        if not anchors:
            raise InvalidInputError("need at least one anchor")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(anchors):
            raise InvalidInputError(f"{w.shape[0]} weights for {len(anchors)} anchors")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidInputError("weights must be positive and finite")
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, anchors) -> "AnchorConfiguration":
        anchors = tuple(anchors)
        return cls(anchors, np.full(len(anchors), 1.0 / max(len(anchors), 1)))

    def __len__(self):
        return len(self.anchors)

    def validate(self, space: Space) -> None:
        for a in self.anchors:
            space.validate(a)

    def mean_components(self):
        return [ScaledSquaredDistance(a, w) for a, w in zip(self.anchors, self.weights)]

    def median_components(self):
        return [ScaledDistance(a, w) for a, w in zip(self.anchors, self.weights)]


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``lam_k = c / (k + offset)`` for ``k = 0, 1, ...``.

    With the default ``offset=1`` this is the canonical ``C/(k+1)``, which
    is not summable but square-summable.
    """

    c: float = 1.0
    offset: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "c", _positive("schedule constant", self.c))
        object.__setattr__(self, "offset", _positive("schedule offset", self.offset))

    def __call__(self, k: int) -> float:
        return self.c / (k + self.offset)

    def values(self, count: int, start: int = 0) -> np.ndarray:
        return self.c / (np.arange(start, start + count, dtype=float) + self.offset)

    @property
    def form(self) -> str:
        off = f"{self.offset:g}"
        return f"C/(k+{off})"

    def to_dict(self) -> dict:
        out = {"form": self.form, "C": self.c}
        if self.offset != 1.0:
            out["offset"] = self.offset
        return out


@dataclass(frozen=True)
class RunConfig:
    """Budget and stopping rule for one run.

    ``budget`` counts cycles for the cyclic driver and single steps for the
    random driver. A run stops early once the path travelled over a window
    is at most ``tol``; a window ends when every component has been applied
    at least once since the previous one (one cycle in cyclic order).
    ``tol=None`` disables the check. Path length rather than displacement,
    so a cycle that jumps from anchor to anchor and back is not mistaken for
    rest.
    """

    budget: int = 2000
    tol: float | None = 0.0
    seed: int | None = None
    schedule: StepSchedule = field(default_factory=StepSchedule)
    record_every: int = 1

    def __post_init__(self):
        if int(self.budget) != self.budget or self.budget < 1:
            raise InvalidInputError(f"budget must be a positive integer, got {self.budget}")
        if self.tol is not None and not (self.tol >= 0.0):
            raise InvalidInputError(f"tolerance must be nonnegative, got {self.tol}")
        if self.seed is not None and not (0 <= int(self.seed) < 2**64):
            raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.record_every) < 1:
            raise InvalidInputError("record_every must be at least 1")


GENERATOR = "numpy.random.Generator(PCG64)"


@dataclass
class IterationTrace:
    """Recorded iterates of one run.

    Row 0 is the starting point (``component_index`` -1, ``lambda`` and
    ``t`` NaN). With ``record_every > 1`` only every so many steps are kept,
    plus the final one.
    """

    iterates: list
    steps: np.ndarray
    component_index: np.ndarray
    lambdas: np.ndarray
    t_coefficients: np.ndarray
    objectives: np.ndarray
    moved: np.ndarray
    stop_reason: str
    steps_taken: int
    metadata: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.iterates[-1]

    def __len__(self):
        return len(self.iterates)

    def rows(self):
        for i in range(len(self.iterates)):
            yield (int(self.steps[i]), int(self.component_index[i]), float(self.lambdas[i]),
                   float(self.t_coefficients[i]), float(self.objectives[i]), float(self.moved[i]))

    CSV_HEADER = "step,component_index,lambda,t_coefficient,objective,distance_moved"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for row in self.rows():
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
        return "\n".join(lines) + "\n"
