"""Splitting proximal point drivers and the means/medians built on them.

``ppa_cyclic`` applies the component resolvents in a fixed order with one
step size per cycle; ``ppa_random`` picks a component uniformly at random at
every step and advances the step size every step. ``lln_mean`` is the
inductive mean ``S_{k+1} = (k/(k+1)) S_k + (1/(k+1)) a_{r_k}`` with ``r_k``
drawn from the weights.

When every component is a weighted (squared) distance to an anchor, the loop
runs in a compiled kernel from ``_kernels`` (``_kernels_bhv`` for trees);
otherwise it runs generically on top of ``Space.geodesic``.
Both paths consume the same index stream and record the same trace.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import _kernels as K
from . import _kernels_bhv as KB
from ._jit import backend_name
from .core import InvalidInputError, Space
from .prox import (
    GENERATOR,
    AnchorConfiguration,
    Component,
    IterationTrace,
    RunConfig,
    ScaledDistance,
    ScaledSquaredDistance,
    StepSchedule,
    objective_value,
)
from .spaces import SPD, Euclidean, EuclideanPoint, SpdPoint, Spider, SpiderPoint
from .treespace import BHV
from .treespace.splits import BhvPoint

DEFAULT_BUDGET = {"cyclic": 20_000, "random": 1_000_000, "lln": 100_000}


def draw_indices(seed: int, probs, size: int) -> np.ndarray:
    """Index stream ``r_0, r_1, ...`` with ``P(r = n) = probs[n]``.

    Inverse-CDF sampling of ``Generator(PCG64(seed)).random`` so uniform and
    weighted streams with the same seed consume the generator identically.
    """
    probs = np.asarray(probs, dtype=float)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(probs / probs.sum())
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, len(probs) - 1).astype(np.int64)


def _lambdas(schedule, count, start=0):
    if isinstance(schedule, StepSchedule):
        lam = schedule.values(count, start)
    else:
        lam = np.array([schedule(k) for k in range(start, start + count)], dtype=float)
    if not np.all(lam > 0) or not np.all(np.isfinite(lam)):
        raise InvalidInputError("step-size schedule produced a nonpositive or non-finite value")
    return lam


def _schedule_meta(schedule):
    if isinstance(schedule, StepSchedule):
        return schedule.to_dict()
    return {"form": getattr(schedule, "form", repr(schedule))}


# ------------------------------------------------------------ kernel bridge


def _kernel_rule(components):
    if all(type(c) is ScaledSquaredDistance for c in components):
        return K.RULE_SQUARED
    if all(type(c) is ScaledDistance for c in components):
        return K.RULE_DISTANCE
    return None


def _kernel_supported(space):
    return type(space) in (Euclidean, Spider, SPD, BHV)


def _pack_trees(space, trees):
    cap = max(space.leaf_count - 2, 1)
    masks = np.zeros((len(trees), cap), np.int64)
    lens = np.zeros((len(trees), cap))
    counts = np.zeros(len(trees), np.int64)
    for i, tree in enumerate(trees):
        items = list(tree.splits.items())
        counts[i] = len(items)
        for c, (m, v) in enumerate(items):
            masks[i, c], lens[i, c] = m, v
    pendants = np.ascontiguousarray([tree.pendants for tree in trees], dtype=float)
    return masks, lens, counts, pendants


def _run_kernel(space, anchors, weights, x0, idx, lam, period, rule, window, tol, record_every):
    """Run the compiled loop for ``space`` and wrap its output in points."""
    weights = np.ascontiguousarray(weights, dtype=float)
    tol_k = -1.0 if tol is None else float(tol)
    if isinstance(space, Euclidean):
        arr = np.ascontiguousarray([a.coords for a in anchors], dtype=float)
        out = K.run_euclid(arr, weights, np.array(x0.coords, dtype=float), idx, lam, period, rule,
                           window, tol_k, space.tol, record_every)
        _, steps, ridx, rlam, rt, robj, rmov, rx, done, conv = out
        iterates = [EuclideanPoint(row) for row in rx]
    elif isinstance(space, Spider):
        rays = np.array([a.ray for a in anchors], dtype=np.int64)
        radii = np.array([a.radius for a in anchors], dtype=float)
        out = K.run_spider(rays, radii, weights, int(x0.ray), float(x0.radius), idx, lam, period, rule,
                           window, tol_k, space.tol, record_every)
        _, _, steps, ridx, rlam, rt, robj, rmov, rray, rrad, done, conv = out
        iterates = [space.canonical(SpiderPoint(int(r), float(v))) for r, v in zip(rray, rrad)]
    elif isinstance(space, BHV):
        space._guard()
        am, al, ak, ap = _pack_trees(space, anchors)
        xm, xl, xk, xp = _pack_trees(space, [x0])
        out = KB.run_bhv(am, al, ak, ap, weights, xm[0], xl[0], int(xk[0]), xp[0], idx, lam, period, rule,
                         window, tol_k, space.tol, space.tol, record_every)
        steps, ridx, rlam, rt, robj, rmov, rm, rl, rk, rp, done, conv = out
        iterates = [BhvPoint(dict(zip(m[:k].tolist(), v[:k].tolist())), p) for m, v, k, p in zip(rm, rl, rk, rp)]
    else:
        arr = np.ascontiguousarray([a.matrix for a in anchors], dtype=float)
        out = K.run_spd(arr, weights, np.array(x0.matrix, dtype=float), idx, lam, period, rule,
                        window, tol_k, space.tol, space.floor, record_every)
        _, steps, ridx, rlam, rt, robj, rmov, rx, done, conv = out
        iterates = [SpdPoint(m) for m in rx]
    return IterationTrace(
        iterates=iterates, steps=steps, component_index=ridx, lambdas=rlam, t_coefficients=rt,
        objectives=robj, moved=rmov, stop_reason="tolerance" if conv else "budget",
        steps_taken=int(done))


# ------------------------------------------------------------ generic loop


def _run_generic(space, step, objective, x0, idx, lam, period, window, tol, record_every):
    """Loop shared by every generic run; ``step(s, j, lam, x)`` returns ``(x, t, moved)``."""
    n_steps = len(idx) if period == 0 else len(lam) * period
    x = x0
    path = 0.0
    seen = np.zeros(max(window, 1), dtype=bool)
    n_seen = 0
    iterates = [x0]
    steps, ridx, rlam, rt, robj, rmov = [0], [-1], [math.nan], [math.nan], [objective(x0)], [0.0]
    converged = False
    done = 0
    for s in range(n_steps):
        j = int(idx[s]) if period == 0 else s % period
        lam_s = float(lam[s] if period == 0 else lam[s // period])
        x, t, moved = step(s, j, lam_s, x)
        path += moved
        done = s + 1
        stop = False
        if window > 0 and not seen[j]:
            seen[j] = True
            n_seen += 1
            if n_seen == window:
                stop = tol is not None and path <= tol
                path = 0.0
                seen[:] = False
                n_seen = 0
        if done % record_every == 0 or stop or done == n_steps:
            iterates.append(x)
            steps.append(done)
            ridx.append(j)
            rlam.append(lam_s)
            rt.append(t)
            robj.append(objective(x))
            rmov.append(moved)
        if stop:
            converged = True
            break
    return IterationTrace(
        iterates=iterates, steps=np.array(steps, dtype=np.int64), component_index=np.array(ridx, dtype=np.int64),
        lambdas=np.array(rlam), t_coefficients=np.array(rt), objectives=np.array(robj), moved=np.array(rmov),
        stop_reason="tolerance" if converged else "budget", steps_taken=done)


def _drive(space, components, x0, idx, lam, period, window, config, fast, objective=None):
    rule = _kernel_rule(components) if fast and objective is None and _kernel_supported(space) else None
    if rule is not None:
        anchors = [c.anchor for c in components]
        for a in anchors:
            space.validate(a)
        weights = [c.weight for c in components]
        trace = _run_kernel(space, anchors, weights, x0, idx, lam, period, rule, window, config.tol,
                            config.record_every)
        trace.metadata["backend"] = backend_name()
    else:
        def step(s, j, lam_s, x):
            return components[j].prox_step(space, lam_s, x)

        if objective is None:
            def objective(x):
                return objective_value(space, components, x)

        trace = _run_generic(space, step, objective, x0, idx, lam, period, window, config.tol, config.record_every)
        trace.metadata["backend"] = "generic"
    return trace


def _check_components(components):
    components = list(components)
    if not components:
        raise InvalidInputError("component list is empty")
    for c in components:
        if not isinstance(c, Component):
            raise InvalidInputError(f"not an objective component: {c!r}")
    return components


def ppa_cyclic(space: Space, components: Sequence[Component], x0, config: RunConfig | None = None,
               fast: bool = True, objective=None) -> IterationTrace:
    """Cyclic splitting PPA: ``config.budget`` cycles through all components.

    Parameters
    ----------
    space : Space
    components : sequence of Component
        The summands ``f_1, ..., f_N``, applied in this order.
    x0 : point
        Starting point.
    config : RunConfig, optional
        Budget (in cycles), stopping tolerance and step sizes.
    fast : bool
        Allow the compiled kernel when the problem qualifies.
    objective : callable, optional
        Replaces ``sum f_n`` for the recorded objective column, e.g. a
        finite residual when the components are indicators.
    """
    config = config or RunConfig()
    components = _check_components(components)
    space.validate(x0)
    n = len(components)
    lam = _lambdas(config.schedule, config.budget)
    idx = np.zeros(0, dtype=np.int64)
    trace = _drive(space, components, x0, idx, lam, n, n, config, fast, objective)
    trace.metadata.update(variant="cyclic", schedule=_schedule_meta(config.schedule))
    return trace


def ppa_random(space: Space, components: Sequence[Component], x0, config: RunConfig | None = None,
               indices=None, fast: bool = True, objective=None) -> IterationTrace:
    """Random-order splitting PPA with uniformly drawn components.

    ``indices`` replaces the drawn stream (its length then sets the number
    of steps); the step size still advances once per step. Other
    arguments are as for :func:`ppa_cyclic`, with ``config.budget``
    counting single steps.
    """
    config = config or RunConfig()
    components = _check_components(components)
    space.validate(x0)
    n = len(components)
    seed = 0 if config.seed is None else int(config.seed)
    if indices is None:
        idx = draw_indices(seed, np.full(n, 1.0 / n), config.budget)
    else:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1 or np.any(idx < 0) or np.any(idx >= n):
            raise InvalidInputError("index stream out of range")
    lam = _lambdas(config.schedule, len(idx))
    trace = _drive(space, components, x0, idx, lam, 0, n, config, fast, objective)
    trace.metadata.update(variant="random", seed=seed, generator=GENERATOR,
                          schedule=_schedule_meta(config.schedule))
    return trace


def _default_config(variant, config):
    if variant not in DEFAULT_BUDGET:
        raise InvalidInputError(f"unknown variant {variant!r}; expected one of {sorted(DEFAULT_BUDGET)}")
    if config is None:
        return RunConfig(budget=DEFAULT_BUDGET[variant])
    return config


def frechet_mean(space: Space, data: AnchorConfiguration, variant: str = "cyclic",
                 config: RunConfig | None = None, x0=None, fast: bool = True):
    """Weighted Fréchet mean; returns ``(point, trace)``.

    ``variant`` is ``"cyclic"``, ``"random"`` or ``"lln"``. The start
    defaults to the first anchor (ignored by ``"lln"``).
    """
    data.validate(space)
    config = _default_config(variant, config)
    if variant == "lln":
        seed = 0 if config.seed is None else config.seed
        return lln_mean(space, data, seed, config.budget, tol=config.tol, record_every=config.record_every,
                        fast=fast)
    x0 = data.anchors[0] if x0 is None else x0
    comps = data.mean_components()
    if variant == "cyclic":
        trace = ppa_cyclic(space, comps, x0, config, fast=fast)
    elif variant == "random":
        trace = ppa_random(space, comps, x0, config, fast=fast)
    else:
        raise InvalidInputError(f"unknown mean variant {variant!r}")
    return trace.final, trace


def geometric_median(space: Space, data: AnchorConfiguration, variant: str = "cyclic",
                     config: RunConfig | None = None, x0=None, fast: bool = True):
    """A weighted geometric median (medians need not be unique); returns ``(point, trace)``."""
    data.validate(space)
    config = _default_config(variant, config)
    x0 = data.anchors[0] if x0 is None else x0
    comps = data.median_components()
    if variant == "cyclic":
        trace = ppa_cyclic(space, comps, x0, config, fast=fast)
    elif variant == "random":
        trace = ppa_random(space, comps, x0, config, fast=fast)
    else:
        raise InvalidInputError(f"unknown median variant {variant!r}")
    return trace.final, trace


def lln_mean(space: Space, data: AnchorConfiguration, seed: int, steps: int, tol: float | None = None,
             record_every: int = 1, indices=None, fast: bool = True):
    """Inductive mean ``S_1 = a_{r_1}``, ``S_{k+1} = geodesic(S_k, a_{r_{k+1}}, 1/(k+1))``.

    Indices are drawn from the weights (not uniformly). Returns
    ``(S_steps, trace)``; trace rows are labelled by ``k`` in ``S_k``.
    """
    if int(steps) != steps or steps < 1:
        raise InvalidInputError(f"steps must be a positive integer, got {steps}")
    data.validate(space)
    if indices is None:
        idx = draw_indices(int(seed), data.weights, int(steps))
    else:
        idx = np.asarray(indices, dtype=np.int64)
    first = data.anchors[int(idx[0])]
    rest = np.ascontiguousarray(idx[1:])
    lam = np.full(len(rest), math.nan)
    n = len(data)
    comps = data.mean_components()
    cfg_tol = tol
    if fast and _kernel_supported(space):
        trace = _run_kernel(space, data.anchors, data.weights, first, rest, lam, 0, K.RULE_LLN, n, cfg_tol,
                            record_every)
        trace.metadata["backend"] = backend_name()
    else:
        trace = _run_lln_generic(space, data, comps, first, rest, n, cfg_tol, record_every)
        trace.metadata["backend"] = "generic"
    trace.steps = trace.steps + 1
    trace.component_index[0] = idx[0]
    trace.t_coefficients[0] = 1.0
    trace.steps_taken += 1
    trace.metadata.update(variant="lln", seed=int(seed), generator=GENERATOR)
    return trace.final, trace


def _run_lln_generic(space, data, comps, first, idx, window, tol, record_every):
    anchors = data.anchors

    def step(s, j, lam_s, x):
        t = 1.0 / (s + 2.0)
        d = space.distance(x, anchors[j])
        return space.geodesic(x, anchors[j], t), t, t * d

    def objective(x):
        return objective_value(space, comps, x)

    return _run_generic(space, step, objective, first, idx, np.full(len(idx), math.nan), 0, window, tol,
                        record_every)


def lie_trotter_kato(space: Space, components: Sequence[Component], x0, t: float, k: int):
    """``(J^N_{t/k} o ... o J^1_{t/k})^k (x0)``, approximating the gradient flow of the sum at time ``t``."""
    components = _check_components(components)
    space.validate(x0)
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise InvalidInputError(f"flow time must be finite and nonnegative, got {t}")
    if int(k) != k or k < 1:
        raise InvalidInputError(f"k must be a positive integer, got {k}")
    if t == 0.0:
        return x0
    lam = t / k
    x = x0
    for _ in range(int(k)):
        for c in components:
            x = c.prox(space, lam, x)
    return x


def variance_gap(space: Space, data: AnchorConfiguration, candidate, z) -> float:
    """``sum w d(z,a)^2 - sum w d(candidate,a)^2 - d(z,candidate)^2``; >= 0 at the true mean."""
    w = data.weights
    far = sum(wi * space.distance(z, a) ** 2 for wi, a in zip(w, data.anchors))
    near = sum(wi * space.distance(candidate, a) ** 2 for wi, a in zip(w, data.anchors))
    return float(far - near - space.distance(z, candidate) ** 2)
