"""Independent references for checking the solvers.

Nothing here calls the resolvents or the PPA drivers: the Euclidean mean is
the weighted average, the Euclidean median comes from Weiszfeld's fixed
point iteration, spider problems are solved ray by ray in one dimension,
and resolvents are recomputed by direct minimisation along the geodesic.
``lln_rate_report`` is the exception by design: it measures the inductive
mean against the ``xi / k`` bound, with the true mean taken from here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError, Space
from .prox import AnchorConfiguration, Component
from .spaces import Euclidean, EuclideanPoint, Spider, SpiderPoint

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _coords(data: AnchorConfiguration) -> np.ndarray:
    try:
        return np.array([a.coords for a in data.anchors], dtype=float)
    except AttributeError:
        raise InvalidInputError("Euclidean oracle needs Euclidean anchors") from None


def euclidean_mean_closed_form(data: AnchorConfiguration) -> EuclideanPoint:
    """Weighted arithmetic mean ``sum_n w_n a_n``."""
    return EuclideanPoint(data.weights @ _coords(data))


def _median_objective(x, pts, w):
    return float(w @ np.linalg.norm(pts - x, axis=1))


def weiszfeld_median(data: AnchorConfiguration, iterations: int = 100_000, tol: float = 1e-14,
                     history: list | None = None) -> EuclideanPoint:
    """Weighted geometric median by the modified Weiszfeld iteration.

    Off the anchors this is the classical update
    ``x <- sum(w a / d) / sum(w / d)``. At an anchor ``a_j`` the subgradient
    test ``|R_j| <= w_j`` with ``R_j = sum_{n != j} w_n (a_n - a_j) / d_n``
    decides optimality; otherwise the step is shortened by ``w_j / |R_j|``
    (Vardi and Zhang), which keeps the objective monotone.

    Parameters
    ----------
    data : AnchorConfiguration
        Euclidean anchors and weights.
    iterations : int
        Iteration cap.
    tol : float
        Stop once a step is shorter than ``tol * (1 + |x|)``.
    history : list, optional
        If given, the objective of every iterate is appended to it.
    """
    pts = _coords(data)
    w = np.asarray(data.weights, dtype=float)
    x = w @ pts
    snap = 1e-12 * (1.0 + float(np.abs(pts).max()))
    if history is not None:
        history.append(_median_objective(x, pts, w))
    for _ in range(iterations):
        diff = pts - x
        dist = np.linalg.norm(diff, axis=1)
        hit = dist <= snap
        far = ~hit
        if not np.any(far):
            break
        inv = w[far] / dist[far]
        target = inv @ pts[far] / inv.sum()
        eta = float(w[hit].sum())
        if eta > 0.0:
            r = float(np.linalg.norm(inv @ diff[far]))
            if r <= eta:
                x = pts[hit][0].copy()
                break
            shrink = 1.0 - eta / r
            new = x + shrink * (target - x)
        else:
            new = target
        step = float(np.linalg.norm(new - x))
        x = new
        if history is not None:
            history.append(_median_objective(x, pts, w))
        if step <= tol * (1.0 + float(np.linalg.norm(x))):
            break
    return EuclideanPoint(x)


def golden_section(f, lo: float, hi: float, iterations: int = 200) -> float:
    """Minimiser of a unimodal ``f`` on ``[lo, hi]``; endpoints are compared explicitly."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        if b - a <= 1e-15 * (1.0 + abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    best = min((f(lo), lo), (f(hi), hi), (f(0.5 * (a + b)), 0.5 * (a + b)))
    return best[1]


def spider_1d_search(data: AnchorConfiguration, ray_count: int | None = None, power: int = 2,
                     iterations: int = 200) -> tuple[SpiderPoint, float]:
    """Minimise ``sum w_n d(x, a_n)^power`` over a spider, one ray at a time.

    Restricted to a ray the objective is a convex function of the radius.
    For ``power`` 1 it is piecewise linear, so its minimum is at the origin
    or at an anchor radius; for ``power`` 2 it is a quadratic whose vertex is
    clipped at the origin; other powers use a golden-section search. The
    best ray wins. Returns ``(point, objective)``.
    """
    rays = np.array([a.ray for a in data.anchors], dtype=int)
    radii = np.array([a.radius for a in data.anchors], dtype=float)
    w = np.asarray(data.weights, dtype=float)
    k = int(rays.max()) + 1 if ray_count is None else int(ray_count)
    hi = float(radii.max()) if radii.size else 0.0

    def objective_on(ray):
        same = rays == ray

        def f(rho):
            d = np.where(same, np.abs(rho - radii), rho + radii)
            return float(w @ d**power)
        return f

    best = None
    for ray in range(k):
        f = objective_on(ray)
        if power == 1:
            # piecewise linear: the minimum sits at the origin or at an anchor radius
            cands = [0.0] + [float(r) for r in radii[rays == ray]]
        elif power == 2:
            signed = np.where(rays == ray, radii, -radii)
            cands = [0.0, max(0.0, float(w @ signed) / float(w.sum()))]
        else:
            cands = [golden_section(f, 0.0, hi, iterations) if hi > 0 else 0.0]
        for rho in cands:
            cand = (f(rho), ray, rho)
            if best is None or cand[0] < best[0]:
                best = cand
    value, ray, rho = best
    if rho <= 1e-12:
        ray, rho = 0, 0.0
    return SpiderPoint(int(ray), float(rho)), float(value)


def prox_1d_oracle(space: Space, component: Component, lam: float, x, iterations: int = 200):
    """Resolvent by direct minimisation of ``f(g(t)) + d(x, g(t))^2 / (2 lam)`` over ``t``.

    ``g`` is the geodesic from ``x`` to the component's target: its anchor,
    or the projection of ``x`` for set-based components. Returns
    ``(point, t)``.
    """
    if lam <= 0:
        raise InvalidInputError("lambda must be positive")
    if hasattr(component, "anchor"):
        target = component.anchor
    elif hasattr(component, "cset"):
        target = component.cset.project(space, x)
    else:
        raise InvalidInputError(f"no geodesic target for {component!r}")

    def h(t):
        y = space.geodesic(x, target, t)
        return component.value(space, y) + space.distance(x, y) ** 2 / (2.0 * lam)

    t = golden_section(h, 0.0, 1.0, iterations)
    return space.geodesic(x, target, t), t


# ------------------------------------------------------------------ reports


@dataclass
class OracleReport:
    """Comparison of solver output against a reference, one row per check."""

    instance: str
    rows: list = field(default_factory=list)

    def add(self, name: str, oracle, solver, tolerance: float, abs_gap: float | None = None):
        """Record one check; ``abs_gap`` defaults to ``|solver - oracle|``."""
        if abs_gap is None:
            abs_gap = abs(float(solver) - float(oracle))
        scale = abs(float(oracle)) if np.isscalar(oracle) else 0.0
        rel = abs_gap / scale if scale > 0 else abs_gap
        self.rows.append({
            "check": name,
            "oracle": oracle,
            "solver": solver,
            "abs_gap": float(abs_gap),
            "rel_gap": float(rel),
            "tolerance": float(tolerance),
            "passed": bool(abs_gap <= tolerance),
        })
        return self.rows[-1]

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows)

    def to_dict(self) -> dict:
        return {"instance": self.instance, "passed": self.passed, "rows": self.rows}

    def to_text(self) -> str:
        lines = [f"instance: {self.instance}"]
        for r in self.rows:
            flag = "ok  " if r["passed"] else "FAIL"
            lines.append(f"  {flag} {r['check']}: oracle={_fmt(r['oracle'])} solver={_fmt(r['solver'])} "
                         f"abs_gap={r['abs_gap']:.3e} rel_gap={r['rel_gap']:.3e} tol={r['tolerance']:.1e}")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return json.dumps(v) if isinstance(v, (list, dict)) else str(v)


def true_mean(space: Space, data: AnchorConfiguration):
    """Reference mean where one is available without the solvers."""
    if isinstance(space, Euclidean):
        return euclidean_mean_closed_form(data)
    if isinstance(space, Spider):
        return spider_1d_search(data, space.ray_count)[0]
    raise InvalidInputError(f"no reference mean for {space.descriptor}")


def lln_rate_report(space: Space, data: AnchorConfiguration, seeds, checkpoints, mean=None) -> OracleReport:
    """Empirical ``E d(Xi, S_k)^2`` over ``seeds`` against ``xi / k``.

    Each row passes when the empirical mean is at most the bound plus three
    Monte-Carlo standard errors. ``mean`` overrides the reference mean.
    """
    from .algorithms import lln_mean

    xi_point = true_mean(space, data) if mean is None else mean
    xi = float(sum(w * space.distance(xi_point, a) ** 2 for w, a in zip(data.weights, data.anchors)))
    seeds = list(seeds)
    report = OracleReport(f"{space.descriptor}, N={len(data)}, {len(seeds)} seeds, xi={xi:.6g}")
    for k in checkpoints:
        sq = np.array([space.distance(xi_point, lln_mean(space, data, s, int(k), record_every=10**9)[0]) ** 2
                       for s in seeds])
        emp = float(sq.mean())
        se = float(sq.std(ddof=1) / math.sqrt(len(sq))) if len(sq) > 1 else 0.0
        bound = xi / k
        row = report.add(f"E d^2 at k={k}", bound, emp, tolerance=3.0 * se,
                         abs_gap=max(0.0, emp - bound))
        row["std_error"] = se
    return report
