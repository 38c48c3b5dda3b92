"""Hot loops over flat arrays: geodesic primitives and the incremental drivers.

Everything here is written in the numba-compatible subset of numpy so the
same source runs jitted or as plain Python (see ``_jit``). The drivers take
a precomputed index stream and step-size array; they never draw random
numbers themselves, which keeps jitted and fallback runs on the same stream.
With ``period > 0`` the index stream is ``0, 1, ..., period - 1`` repeated
and ``lam`` holds one step size per cycle, so long cyclic runs need no
per-step arrays.

A run stops early when the path length travelled (the sum of
``t * d(x, a)``) over a window is at most ``tol``. A window closes once each
of the ``window`` components has been applied at least once: one cycle in
cyclic order, a variable number of draws in random order. A negative
``tol`` disables the test.

Driver rules:
    RULE_SQUARED  t = 2 lam w / (1 + 2 lam w)        (mean components)
    RULE_DISTANCE t = min(1, lam w / d(x, a))        (median components)
    RULE_LLN      t = 1 / (s + 2) at step s          (inductive mean, x0 = S_1)
"""

import math

import numpy as np

from ._jit import njit

RULE_SQUARED = 0
RULE_DISTANCE = 1
RULE_LLN = 2


@njit
def step_coefficient(rule, lam, w, dist, s, eq_tol):
    if rule == RULE_SQUARED:
        return 2.0 * lam * w / (1.0 + 2.0 * lam * w)
    if rule == RULE_DISTANCE:
        if dist <= eq_tol:
            return 1.0
        return min(1.0, lam * w / dist)
    return 1.0 / (s + 2.0)


@njit
def step_count(idx, lam, period):
    """Steps in a run: ``len(idx)``, or ``period`` steps per entry of ``lam`` when cycling."""
    if period == 0:
        return idx.shape[0]
    return lam.shape[0] * period


@njit
def _record_size(n_steps, record_every):
    return 2 + n_steps // record_every


# ---------------------------------------------------------------- Euclidean


@njit
def euclid_distance(p, q):
    acc = 0.0
    for i in range(p.shape[0]):
        diff = p[i] - q[i]
        acc += diff * diff
    return math.sqrt(acc)


@njit
def euclid_objective(x, anchors, weights, power):
    acc = 0.0
    for n in range(anchors.shape[0]):
        d = euclid_distance(x, anchors[n])
        acc += weights[n] * (d * d if power == 2 else d)
    return acc


@njit
def run_euclid(anchors, weights, x0, idx, lam, period, rule, window, tol, eq_tol, record_every):
    n_steps = step_count(idx, lam, period)
    dim = x0.shape[0]
    power = 1 if rule == RULE_DISTANCE else 2
    size = _record_size(n_steps, record_every)
    rec_step = np.zeros(size, np.int64)
    rec_idx = np.full(size, -1, np.int64)
    rec_lam = np.full(size, np.nan)
    rec_t = np.full(size, np.nan)
    rec_obj = np.zeros(size)
    rec_moved = np.zeros(size)
    rec_x = np.zeros((size, dim))

    x = x0.copy()
    path = 0.0
    seen = np.zeros(max(window, 1), np.bool_)
    n_seen = 0
    rec_x[0] = x
    rec_obj[0] = euclid_objective(x, anchors, weights, power)
    r = 1
    converged = False
    done = 0
    for s in range(n_steps):
        j = idx[s] if period == 0 else s % period
        lam_s = lam[s] if period == 0 else lam[s // period]
        a = anchors[j]
        dist = euclid_distance(x, a)
        t = step_coefficient(rule, lam_s, weights[j], dist, s, eq_tol)
        for i in range(dim):
            x[i] = x[i] + t * (a[i] - x[i])
        if t == 1.0:
            x[:] = a
        path += t * dist
        done = s + 1
        stop = False
        if window > 0 and not seen[j]:
            seen[j] = True
            n_seen += 1
            if n_seen == window:
                stop = path <= tol
                path = 0.0
                seen[:] = False
                n_seen = 0
        if done % record_every == 0 or stop or done == n_steps:
            rec_step[r] = done
            rec_idx[r] = j
            rec_lam[r] = lam_s
            rec_t[r] = t
            rec_obj[r] = euclid_objective(x, anchors, weights, power)
            rec_moved[r] = t * dist
            rec_x[r] = x
            r += 1
        if stop:
            converged = True
            break
    return (x, rec_step[:r], rec_idx[:r], rec_lam[:r], rec_t[:r], rec_obj[:r],
            rec_moved[:r], rec_x[:r], done, converged)


# ------------------------------------------------------------------- spider


@njit
def spider_distance(ray_p, rad_p, ray_q, rad_q):
    if ray_p == ray_q:
        return abs(rad_p - rad_q)
    return rad_p + rad_q


@njit
def spider_geodesic(ray_p, rad_p, ray_q, rad_q, t, eq_tol):
    """Point at fraction ``t`` of the way from p to q, as ``(ray, radius)``."""
    if ray_p == ray_q:
        ray, rad = ray_p, (1.0 - t) * rad_p + t * rad_q
    else:
        s = t * (rad_p + rad_q)
        if s <= rad_p:
            ray, rad = ray_p, rad_p - s
        else:
            ray, rad = ray_q, s - rad_p
    if rad <= eq_tol:
        return 0, 0.0
    return ray, rad


@njit
def spider_objective(ray, rad, rays, radii, weights, power):
    acc = 0.0
    for n in range(rays.shape[0]):
        d = spider_distance(ray, rad, rays[n], radii[n])
        acc += weights[n] * (d * d if power == 2 else d)
    return acc


@njit
def run_spider(rays, radii, weights, ray0, rad0, idx, lam, period, rule, window, tol, eq_tol, record_every):
    n_steps = step_count(idx, lam, period)
    power = 1 if rule == RULE_DISTANCE else 2
    size = _record_size(n_steps, record_every)
    rec_step = np.zeros(size, np.int64)
    rec_idx = np.full(size, -1, np.int64)
    rec_lam = np.full(size, np.nan)
    rec_t = np.full(size, np.nan)
    rec_obj = np.zeros(size)
    rec_moved = np.zeros(size)
    rec_ray = np.zeros(size, np.int64)
    rec_rad = np.zeros(size)

    ray, rad = ray0, rad0
    path = 0.0
    seen = np.zeros(max(window, 1), np.bool_)
    n_seen = 0
    rec_ray[0] = ray
    rec_rad[0] = rad
    rec_obj[0] = spider_objective(ray, rad, rays, radii, weights, power)
    r = 1
    converged = False
    done = 0
    for s in range(n_steps):
        j = idx[s] if period == 0 else s % period
        lam_s = lam[s] if period == 0 else lam[s // period]
        dist = spider_distance(ray, rad, rays[j], radii[j])
        t = step_coefficient(rule, lam_s, weights[j], dist, s, eq_tol)
        if t == 1.0:
            ray, rad = rays[j], radii[j]
        else:
            ray, rad = spider_geodesic(ray, rad, rays[j], radii[j], t, eq_tol)
        path += t * dist
        done = s + 1
        stop = False
        if window > 0 and not seen[j]:
            seen[j] = True
            n_seen += 1
            if n_seen == window:
                stop = path <= tol
                path = 0.0
                seen[:] = False
                n_seen = 0
        if done % record_every == 0 or stop or done == n_steps:
            rec_step[r] = done
            rec_idx[r] = j
            rec_lam[r] = lam_s
            rec_t[r] = t
            rec_obj[r] = spider_objective(ray, rad, rays, radii, weights, power)
            rec_moved[r] = t * dist
            rec_ray[r] = ray
            rec_rad[r] = rad
            r += 1
        if stop:
            converged = True
            break
    return (ray, rad, rec_step[:r], rec_idx[:r], rec_lam[:r], rec_t[:r], rec_obj[:r],
            rec_moved[:r], rec_ray[:r], rec_rad[:r], done, converged)


# ---------------------------------------------------------------------- SPD


@njit
def spd_power(a, power, floor):
    vals, vecs = np.linalg.eigh(a)
    vals = np.maximum(vals, floor)
    out = (vecs * vals**power) @ vecs.T
    return 0.5 * (out + out.T)


@njit
def _spd_relative(p, q, floor):
    """Eigen-decomposition of ``p^{-1/2} q p^{-1/2}`` plus ``p^{1/2}``."""
    vals, vecs = np.linalg.eigh(p)
    vals = np.maximum(vals, floor)
    half = (vecs * np.sqrt(vals)) @ vecs.T
    ihalf = (vecs / np.sqrt(vals)) @ vecs.T
    m = ihalf @ q @ ihalf
    m = 0.5 * (m + m.T)
    mvals, mvecs = np.linalg.eigh(m)
    mvals = np.maximum(mvals, floor)
    return half, mvals, mvecs


@njit
def spd_distance(p, q, floor):
    _, mvals, _ = _spd_relative(p, q, floor)
    acc = 0.0
    for v in mvals:
        lv = math.log(v)
        acc += lv * lv
    return math.sqrt(acc)


@njit
def spd_geodesic(p, q, t, floor):
    half, mvals, mvecs = _spd_relative(p, q, floor)
    mid = (mvecs * mvals**t) @ mvecs.T
    out = half @ mid @ half
    return 0.5 * (out + out.T)


@njit
def _spd_step(p, q, floor):
    """Distance from p to q plus the decomposition that yields any geodesic point."""
    half, mvals, mvecs = _spd_relative(p, q, floor)
    acc = 0.0
    for v in mvals:
        lv = math.log(v)
        acc += lv * lv
    dist = math.sqrt(acc)
    return dist, half, mvals, mvecs


@njit
def spd_objective(x, anchors, weights, power, floor):
    vals, vecs = np.linalg.eigh(x)
    vals = np.maximum(vals, floor)
    ihalf = (vecs / np.sqrt(vals)) @ vecs.T
    acc = 0.0
    for n in range(anchors.shape[0]):
        m = ihalf @ anchors[n] @ ihalf
        m = 0.5 * (m + m.T)
        mv = np.maximum(np.linalg.eigvalsh(m), floor)
        sq = 0.0
        for v in mv:
            lv = math.log(v)
            sq += lv * lv
        acc += weights[n] * (sq if power == 2 else math.sqrt(sq))
    return acc


@njit
def run_spd(anchors, weights, x0, idx, lam, period, rule, window, tol, eq_tol, floor, record_every):
    n_steps = step_count(idx, lam, period)
    order = x0.shape[0]
    power = 1 if rule == RULE_DISTANCE else 2
    size = _record_size(n_steps, record_every)
    rec_step = np.zeros(size, np.int64)
    rec_idx = np.full(size, -1, np.int64)
    rec_lam = np.full(size, np.nan)
    rec_t = np.full(size, np.nan)
    rec_obj = np.zeros(size)
    rec_moved = np.zeros(size)
    rec_x = np.zeros((size, order, order))

    x = x0.copy()
    path = 0.0
    seen = np.zeros(max(window, 1), np.bool_)
    n_seen = 0
    rec_x[0] = x
    rec_obj[0] = spd_objective(x, anchors, weights, power, floor)
    r = 1
    converged = False
    done = 0
    for s in range(n_steps):
        j = idx[s] if period == 0 else s % period
        lam_s = lam[s] if period == 0 else lam[s // period]
        a = anchors[j]
        dist, half, mvals, mvecs = _spd_step(x, a, floor)
        t = step_coefficient(rule, lam_s, weights[j], dist, s, eq_tol)
        if t == 1.0:
            x = a.copy()
        else:
            mid = (mvecs * mvals**t) @ mvecs.T
            x = half @ mid @ half
            x = 0.5 * (x + x.T)
        path += t * dist
        done = s + 1
        stop = False
        if window > 0 and not seen[j]:
            seen[j] = True
            n_seen += 1
            if n_seen == window:
                stop = path <= tol
                path = 0.0
                seen[:] = False
                n_seen = 0
        if done % record_every == 0 or stop or done == n_steps:
            rec_step[r] = done
            rec_idx[r] = j
            rec_lam[r] = lam_s
            rec_t[r] = t
            rec_obj[r] = spd_objective(x, anchors, weights, power, floor)
            rec_moved[r] = t * dist
            rec_x[r] = x
            r += 1
        if stop:
            converged = True
            break
    return (x, rec_step[:r], rec_idx[:r], rec_lam[:r], rec_t[:r], rec_obj[:r],
            rec_moved[:r], rec_x[:r], done, converged)
