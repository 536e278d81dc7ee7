"""Hot numeric kernels, each in two flavours.

``*_nb`` functions are scalar loops compiled with numba; ``*_np`` functions
are vectorized numpy.  Both implement the same algorithm with the same
tie-breaking, so either can stand in for the other.  The module-level names
without suffix are bound to the active backend (see ``_accel``).

Format parameters travel as a flat 6-tuple
``(emin1, p1, max1, emin2, p2, max2)``: a first rounding stage to ``p1``
significand bits with minimum normal exponent ``emin1`` and saturation at
``max1``, then an optional second stage (``p2 < 0`` disables it).  ``p1 < 0``
means "no rounding at all" (float64).
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "quantize",
    "gate_apply",
    "nearest",
    "kmeanspp",
    "cluster_sums",
]


# -- scalar rounding ------------------------------------------------------


def _round_scalar(x, emin, p, maxval):
    a = abs(x)
    if a == 0.0:
        return x
    if a >= maxval:
        return math.copysign(maxval, x)
    e = math.frexp(a)[1] - 1
    if e < emin:
        e = emin
    # adding 1.5 * 2^(e-p+52) pushes the ulp of the sum to 2^(e-p), so the
    # FPU's own ties-to-even does the significand rounding
    c = math.ldexp(1.5, e - p + 52)
    r = (a + c) - c
    if r > maxval:
        r = maxval
    return math.copysign(r, x)


_round_scalar_c = njit(_round_scalar)


def _quantize_scalar_impl(x, emin1, p1, max1, emin2, p2, max2):
    if p1 < 0:
        return x
    r = _round_scalar_c(x, emin1, p1, max1)
    if p2 >= 0:
        r = _round_scalar_c(r, emin2, p2, max2)
    return r


_quantize_scalar_c = njit(_quantize_scalar_impl) if _round_scalar_c is not None else None


# -- quantize -------------------------------------------------------------


def _quantize_nb(x, emin1, p1, max1, emin2, p2, max2):
    flat = x.ravel()
    out = np.empty_like(flat)
    for i in range(flat.size):
        out[i] = _quantize_scalar_c(flat[i], emin1, p1, max1, emin2, p2, max2)
    return out.reshape(x.shape)


def _round_np(x, emin, p, maxval):
    e = np.frexp(x)[1] - 1
    np.maximum(e, emin, out=e)
    r = np.ldexp(np.rint(np.ldexp(x, p - e)), e - p)
    return np.clip(r, -maxval, maxval)


def _quantize_np(x, emin1, p1, max1, emin2, p2, max2):
    x = np.asarray(x, dtype=np.float64)
    if p1 < 0:
        return x.copy()
    r = _round_np(x, emin1, p1, max1)
    if p2 >= 0:
        r = _round_np(r, emin2, p2, max2)
    return r


# -- gate apply: (R a - J b) + i (J a + R b) on quantized operands --------


def _gate_apply_nb(R, J, a, b, emin1, p1, max1, emin2, p2, max2):
    n = a.size
    qa = np.empty(n)
    qb = np.empty(n)
    for j in range(n):
        qa[j] = _quantize_scalar_c(a[j], emin1, p1, max1, emin2, p2, max2)
        qb[j] = _quantize_scalar_c(b[j], emin1, p1, max1, emin2, p2, max2)
    out_re = np.empty(n)
    out_im = np.empty(n)
    for i in range(n):
        ra = 0.0
        jb = 0.0
        ja = 0.0
        rb = 0.0
        for j in range(n):
            r = _quantize_scalar_c(R[i, j], emin1, p1, max1, emin2, p2, max2)
            s = _quantize_scalar_c(J[i, j], emin1, p1, max1, emin2, p2, max2)
            ra += r * qa[j]
            jb += s * qb[j]
            ja += s * qa[j]
            rb += r * qb[j]
        out_re[i] = ra - jb
        out_im[i] = ja + rb
    return out_re, out_im


def _gate_apply_np(R, J, a, b, emin1, p1, max1, emin2, p2, max2):
    params = (emin1, p1, max1, emin2, p2, max2)
    qR = _quantize_np(R, *params)
    qJ = _quantize_np(J, *params)
    qa = _quantize_np(a, *params)
    qb = _quantize_np(b, *params)
    return qR @ qa - qJ @ qb, qJ @ qa + qR @ qb


# -- nearest codeword: sweep over centroids sorted by real part -----------
#
# cr must be ascending.  perm maps sorted position -> caller's index; exact
# distance ties resolve to the smallest caller index.


def _nearest_nb(zr, zi, cr, ci, perm):
    k = cr.size
    q = zr.size
    idx = np.empty(q, np.int64)
    dist = np.empty(q)
    for t in range(q):
        x = zr[t]
        y = zi[t]
        pos = np.searchsorted(cr, x)
        best = np.inf
        bi = -1
        i = pos
        while i < k:
            dx = cr[i] - x
            if dx * dx > best:
                break
            dy = ci[i] - y
            d = dx * dx + dy * dy
            if d < best or (d == best and perm[i] < bi):
                best = d
                bi = perm[i]
            i += 1
        i = pos - 1
        while i >= 0:
            dx = cr[i] - x
            if dx * dx > best:
                break
            dy = ci[i] - y
            d = dx * dx + dy * dy
            if d < best or (d == best and perm[i] < bi):
                best = d
                bi = perm[i]
            i -= 1
        idx[t] = bi
        dist[t] = best
    return idx, dist


def _sweep_np(zr, zi, cr, ci, perm, pos, step, best, bi):
    k = cr.size
    active = np.arange(zr.size)
    off = 0
    while active.size:
        j = pos[active] + step * off
        ok = (j >= 0) & (j < k)
        active, j = active[ok], j[ok]
        dx = cr[j] - zr[active]
        ok = dx * dx <= best[active]
        active, j, dx = active[ok], j[ok], dx[ok]
        dy = ci[j] - zi[active]
        d = dx * dx + dy * dy
        cur = best[active]
        better = (d < cur) | ((d == cur) & (perm[j] < bi[active]))
        best[active[better]] = d[better]
        bi[active[better]] = perm[j[better]]
        off += 1


def _nearest_np(zr, zi, cr, ci, perm):
    pos = np.searchsorted(cr, zr)
    best = np.full(zr.size, np.inf)
    # max int64 loses every "perm < bi" comparison, matching bi = -1 + inf best
    bi = np.full(zr.size, np.iinfo(np.int64).max, dtype=np.int64)
    _sweep_np(zr, zi, cr, ci, perm, pos, 1, best, bi)
    _sweep_np(zr, zi, cr, ci, perm, pos - 1, -1, best, bi)
    return bi, best


# -- k-means++ seeding ----------------------------------------------------
#
# draws are uniforms in [0, 1): draws[0] picks the first center uniformly,
# draws[j] picks center j by inverse-CDF over the D^2 weights.  Stops early
# (returns fewer centers) once every point coincides with a center.


def _kmeanspp_nb(xr, xi, draws):
    n = xr.size
    k = draws.size
    centers = np.empty(k, np.int64)
    c = min(int(draws[0] * n), n - 1)
    centers[0] = c
    d2 = np.empty(n)
    for i in range(n):
        dx = xr[i] - xr[c]
        dy = xi[i] - xi[c]
        d2[i] = dx * dx + dy * dy
    cum = np.empty(n)
    for j in range(1, k):
        total = 0.0
        for i in range(n):
            total += d2[i]
            cum[i] = total
        if total <= 0.0:
            return centers[:j]
        c = min(np.searchsorted(cum, draws[j] * total, side="right"), n - 1)
        centers[j] = c
        for i in range(n):
            dx = xr[i] - xr[c]
            dy = xi[i] - xi[c]
            d = dx * dx + dy * dy
            if d < d2[i]:
                d2[i] = d
    return centers


def _kmeanspp_np(xr, xi, draws):
    n = xr.size
    k = draws.size
    centers = np.empty(k, np.int64)
    c = min(int(draws[0] * n), n - 1)
    centers[0] = c
    dx = xr - xr[c]
    dy = xi - xi[c]
    d2 = dx * dx + dy * dy
    for j in range(1, k):
        cum = np.cumsum(d2)
        total = cum[-1]
        if total <= 0.0:
            return centers[:j]
        c = min(int(np.searchsorted(cum, draws[j] * total, side="right")), n - 1)
        centers[j] = c
        dx = xr - xr[c]
        dy = xi - xi[c]
        np.minimum(d2, dx * dx + dy * dy, out=d2)
    return centers


# -- Lloyd update ---------------------------------------------------------


#
# Sums are of offsets from the current centroid, so a cluster of points that
# coincide with their centroid keeps it bit-exactly.


def _cluster_sums_nb(xr, xi, labels, cr, ci):
    k = cr.size
    sr = np.zeros(k)
    si = np.zeros(k)
    cnt = np.zeros(k, np.int64)
    for i in range(xr.size):
        c = labels[i]
        sr[c] += xr[i] - cr[c]
        si[c] += xi[i] - ci[c]
        cnt[c] += 1
    return sr, si, cnt


def _cluster_sums_np(xr, xi, labels, cr, ci):
    k = cr.size
    return (
        np.bincount(labels, weights=xr - cr[labels], minlength=k),
        np.bincount(labels, weights=xi - ci[labels], minlength=k),
        np.bincount(labels, minlength=k).astype(np.int64),
    )


quantize_nb = njit(_quantize_nb)
gate_apply_nb = njit(_gate_apply_nb)
nearest_nb = njit(_nearest_nb)
kmeanspp_nb = njit(_kmeanspp_nb)
cluster_sums_nb = njit(_cluster_sums_nb)

quantize_np = _quantize_np
gate_apply_np = _gate_apply_np
nearest_np = _nearest_np
kmeanspp_np = _kmeanspp_np
cluster_sums_np = _cluster_sums_np

if USE_NUMBA:
    quantize = quantize_nb
    gate_apply = gate_apply_nb
    nearest = nearest_nb
    kmeanspp = kmeanspp_nb
    cluster_sums = cluster_sums_nb
else:
    quantize = quantize_np
    gate_apply = gate_apply_np
    nearest = nearest_np
    kmeanspp = kmeanspp_np
    cluster_sums = cluster_sums_np
