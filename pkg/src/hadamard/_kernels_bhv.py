"""Compiled tree-space geodesics and the incremental driver on top of them.

A tree is held as ``(masks, lens, k, pendants)``: the first ``k`` entries of
``masks``/``lens`` are its interior clades (bitmasks over the leaves, root
side excluded) and their lengths. The support search is the same depth-first
enumeration as ``treespace.geodesic._search`` with an explicit stack, in the
same order and with the same tie-breaking, so both paths pick the same
support.
"""

import math

import numpy as np

from ._jit import njit
from ._kernels import RULE_DISTANCE, _record_size, step_coefficient, step_count


@njit
def compatible(s, u):
    return (s & u) == 0 or (s & ~u) == 0 or (u & ~s) == 0


@njit
def _subset_sq_norms(lengths, m):
    out = np.zeros(1 << m)
    for mask in range(1, 1 << m):
        low = 0
        while not (mask >> low) & 1:
            low += 1
        out[mask] = out[mask & (mask - 1)] + lengths[low] ** 2
    return out


@njit
def _search(e_len, ne, f_len, nf, incompat, block_a, block_b):
    """Fill ``block_a``/``block_b`` with the best support; returns the block count."""
    sq_e = _subset_sq_norms(e_len, ne)
    sq_f = _subset_sq_norms(f_len, nf)
    inc_f = np.zeros(1 << nf, np.int64)
    for mask in range(1, 1 << nf):
        low = 0
        while not (mask >> low) & 1:
            low += 1
        inc_f[mask] = inc_f[mask & (mask - 1)] | incompat[low]
    norm_e = np.sqrt(sq_e)
    norm_f = np.sqrt(sq_f)
    full_e = (1 << ne) - 1
    full_f = (1 << nf) - 1
    best_val = (norm_e[full_e] + norm_f[full_f]) ** 2
    block_a[0] = full_e
    block_b[0] = full_f
    best_n = 1
    if ne == 0:
        return best_n

    depth_cap = min(ne, nf) + 1
    erem = np.zeros(depth_cap, np.int64)
    frem = np.zeros(depth_cap, np.int64)
    a_it = np.zeros(depth_cap, np.int64)
    b_it = np.zeros(depth_cap, np.int64)
    last = np.zeros(depth_cap)
    acc = np.zeros(depth_cap)
    cur_a = np.zeros(depth_cap, np.int64)
    cur_b = np.zeros(depth_cap, np.int64)

    # entering the root call: the lower-bound cut of the recursive version
    if sq_e[full_e] + sq_f[full_f] >= best_val:
        return best_n
    depth = 0
    erem[0], frem[0], a_it[0], b_it[0] = full_e, full_f, full_e, full_f
    while depth >= 0:
        descended = False
        while a_it[depth] != 0:
            if b_it[depth] == 0:
                a_it[depth] = (a_it[depth] - 1) & erem[depth]
                b_it[depth] = frem[depth]
                continue
            a = a_it[depth]
            b = b_it[depth]
            b_it[depth] = (b - 1) & frem[depth]
            rest_e = erem[depth] & ~a
            rest_f = frem[depth] & ~b
            if (rest_e == 0) != (rest_f == 0) or (inc_f[b] & rest_e) != 0:
                continue
            ratio = norm_e[a] / norm_f[b]
            if ratio < last[depth] * (1.0 - 1e-12):
                continue
            nacc = acc[depth] + (norm_e[a] + norm_f[b]) ** 2
            cur_a[depth] = a
            cur_b[depth] = b
            if rest_e == 0:
                if nacc < best_val:
                    best_val = nacc
                    best_n = depth + 1
                    for i in range(best_n):
                        block_a[i] = cur_a[i]
                        block_b[i] = cur_b[i]
                continue
            if nacc + sq_e[rest_e] + sq_f[rest_f] >= best_val:
                continue
            depth += 1
            erem[depth], frem[depth], a_it[depth], b_it[depth] = rest_e, rest_f, rest_e, rest_f
            last[depth] = ratio
            acc[depth] = nacc
            descended = True
            break
        if not descended:
            depth -= 1
    return best_n


@njit
def workspace(cap):
    """Scratch arrays for :func:`support`, sized for trees with ``cap`` interior clades."""
    return (np.zeros(2 * cap, np.int64), np.zeros(2 * cap), np.zeros(2 * cap),
            np.zeros(cap, np.int64), np.zeros(cap), np.zeros(cap, np.int64), np.zeros(cap),
            np.zeros(max(cap, 1), np.int64), np.zeros(max(cap, 1), np.int64),
            np.zeros(max(cap, 1)), np.zeros(max(cap, 1)), np.zeros(4, np.int64))


@njit
def support(pm, pl, pk, pp, qm, ql, qk, qp, ws):
    """Optimal support from p to q, stored in ``ws``; returns the distance."""
    sh_m, sh_1, sh_2, e_m, e_l, f_m, f_l, block_a, block_b, na_norm, nb_norm, sizes = ws
    ns = 0
    ne = 0
    nf = 0
    # shared clades, then clades of p compatible with all of q, then the converse
    for i in range(pk):
        for j in range(qk):
            if pm[i] == qm[j]:
                sh_m[ns], sh_1[ns], sh_2[ns] = pm[i], pl[i], ql[j]
                ns += 1
                break
    for i in range(pk):
        in_q = False
        free = True
        for j in range(qk):
            if pm[i] == qm[j]:
                in_q = True
            elif not compatible(pm[i], qm[j]):
                free = False
        if in_q:
            continue
        if free:
            sh_m[ns], sh_1[ns], sh_2[ns] = pm[i], pl[i], 0.0
            ns += 1
        else:
            e_m[ne], e_l[ne] = pm[i], pl[i]
            ne += 1
    for j in range(qk):
        in_p = False
        free = True
        for i in range(pk):
            if qm[j] == pm[i]:
                in_p = True
            elif not compatible(qm[j], pm[i]):
                free = False
        if in_p:
            continue
        if free:
            sh_m[ns], sh_1[ns], sh_2[ns] = qm[j], 0.0, ql[j]
            ns += 1
        else:
            f_m[nf], f_l[nf] = qm[j], ql[j]
            nf += 1

    nb = 0
    if ne > 0:
        incompat = np.zeros(nf, np.int64)
        for j in range(nf):
            for i in range(ne):
                if not compatible(e_m[i], f_m[j]):
                    incompat[j] |= 1 << i
        nb = _search(e_l, ne, f_l, nf, incompat, block_a, block_b)
        for b in range(nb):
            sa = 0.0
            for i in range(ne):
                if (block_a[b] >> i) & 1:
                    sa += e_l[i] ** 2
            sb = 0.0
            for j in range(nf):
                if (block_b[b] >> j) & 1:
                    sb += f_l[j] ** 2
            na_norm[b] = math.sqrt(sa)
            nb_norm[b] = math.sqrt(sb)
    sizes[0], sizes[1], sizes[2], sizes[3] = ns, ne, nf, nb

    acc = 0.0
    for b in range(nb):
        acc += (na_norm[b] + nb_norm[b]) ** 2
    for s in range(ns):
        acc += (sh_1[s] - sh_2[s]) ** 2
    pend = 0.0
    for i in range(pp.shape[0]):
        pend += (pp[i] - qp[i]) ** 2
    return math.sqrt(acc + pend)


@njit
def point_on(ws, pp, qp, t, tol, out_m, out_l, out_p):
    """Point at ``t`` along the support in ``ws``; returns its clade count."""
    sh_m, sh_1, sh_2, e_m, e_l, f_m, f_l, block_a, block_b, na_norm, nb_norm, sizes = ws
    ns, ne, nf, nb = sizes[0], sizes[1], sizes[2], sizes[3]
    k = 0
    for s in range(ns):
        v = (1.0 - t) * sh_1[s] + t * sh_2[s]
        if v > tol:
            out_m[k], out_l[k] = sh_m[s], v
            k += 1
    for b in range(nb):
        drop = (1.0 - t) * na_norm[b] - t * nb_norm[b]
        if drop > 0:
            for i in range(ne):
                if (block_a[b] >> i) & 1:
                    v = drop / na_norm[b] * e_l[i]
                    if v > tol:
                        out_m[k], out_l[k] = e_m[i], v
                        k += 1
        else:
            for j in range(nf):
                if (block_b[b] >> j) & 1:
                    v = -drop / nb_norm[b] * f_l[j]
                    if v > tol:
                        out_m[k], out_l[k] = f_m[j], v
                        k += 1
    for i in range(pp.shape[0]):
        out_p[i] = (1.0 - t) * pp[i] + t * qp[i]
    return k


@njit
def objective(xm, xl, xk, xp, am, al, ak, ap, weights, power, ws):
    acc = 0.0
    for n in range(am.shape[0]):
        d = support(xm, xl, xk, xp, am[n], al[n], ak[n], ap[n], ws)
        acc += weights[n] * (d * d if power == 2 else d)
    return acc


@njit
def run_bhv(am, al, ak, ap, weights, x0m, x0l, x0k, x0p, idx, lam, period, rule, window, tol, eq_tol, geo_tol,
            record_every):
    n_steps = step_count(idx, lam, period)
    cap = am.shape[1]
    leaves = ap.shape[1]
    power = 1 if rule == RULE_DISTANCE else 2
    size = _record_size(n_steps, record_every)
    rec_step = np.zeros(size, np.int64)
    rec_idx = np.full(size, -1, np.int64)
    rec_lam = np.full(size, np.nan)
    rec_t = np.full(size, np.nan)
    rec_obj = np.zeros(size)
    rec_moved = np.zeros(size)
    rec_m = np.zeros((size, cap), np.int64)
    rec_l = np.zeros((size, cap))
    rec_k = np.zeros(size, np.int64)
    rec_p = np.zeros((size, leaves))

    xm, xl, xk, xp = x0m.copy(), x0l.copy(), x0k, x0p.copy()
    path = 0.0
    seen = np.zeros(max(window, 1), np.bool_)
    n_seen = 0
    ws = workspace(cap)
    nm = np.zeros(cap, np.int64)
    nl = np.zeros(cap)
    npd = np.zeros(leaves)
    rec_m[0], rec_l[0], rec_k[0], rec_p[0] = xm, xl, xk, xp
    rec_obj[0] = objective(xm, xl, xk, xp, am, al, ak, ap, weights, power, ws)
    r = 1
    converged = False
    done = 0
    for s in range(n_steps):
        j = idx[s] if period == 0 else s % period
        lam_s = lam[s] if period == 0 else lam[s // period]
        dist = support(xm, xl, xk, xp, am[j], al[j], ak[j], ap[j], ws)
        t = step_coefficient(rule, lam_s, weights[j], dist, s, eq_tol)
        if t == 1.0:
            xm[:] = am[j]
            xl[:] = al[j]
            xk = ak[j]
            xp[:] = ap[j]
        elif t > 0.0:
            k = point_on(ws, xp, ap[j], t, geo_tol, nm, nl, npd)
            xm[:] = 0
            xl[:] = 0.0
            xm[:k] = nm[:k]
            xl[:k] = nl[:k]
            xk = k
            xp[:] = npd
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
            rec_obj[r] = objective(xm, xl, xk, xp, am, al, ak, ap, weights, power, ws)
            rec_moved[r] = t * dist
            rec_m[r], rec_l[r], rec_k[r], rec_p[r] = xm, xl, xk, xp
            r += 1
        if stop:
            converged = True
            break
    return (rec_step[:r], rec_idx[:r], rec_lam[:r], rec_t[:r], rec_obj[:r], rec_moved[:r],
            rec_m[:r], rec_l[:r], rec_k[:r], rec_p[:r], done, converged)
