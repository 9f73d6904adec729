# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.  Signatures match ``_pykernels``; all values in nats."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, pow, fabs, INFINITY, isfinite

cnp.import_array()

# steps without a strict lower-bound gain before giving up (precision floor)
DEF STALL = 500


cdef double _arimoto_eval(double[::1] logp, double[:, ::1] wa, double[::1] logm,
                          double a, double[::1] lb, double[::1] logg,
                          double* upper) noexcept nogil:
    # returns the lower bound; fills logg and the radius upper bound
    cdef Py_ssize_t x, y, nx = wa.shape[0], ny = wa.shape[1]
    cdef double s, shift = -INFINITY, z = 0.0, up = -INFINITY, rad, logz
    for y in range(ny):
        s = 0.0
        for x in range(nx):
            s += exp(logp[x]) * wa[x, y]
        lb[y] = logm[y] + (1.0 / a - 1.0) * log(s) if s > 0 else -INFINITY
        if lb[y] > shift:
            shift = lb[y]
    for y in range(ny):
        lb[y] = exp(lb[y] - shift)
    for x in range(nx):
        s = 0.0
        for y in range(ny):
            s += wa[x, y] * lb[y]
        logg[x] = (log(s) if s > 0 else -INFINITY) + shift
        z += exp(logp[x]) * s
        rad = logg[x] / (a - 1.0)
        if rad > up:
            up = rad
    logz = log(z) + shift
    upper[0] = up + logz
    return a / (a - 1.0) * logz


cdef void _arimoto_step(double[::1] logp, double[::1] logg, double e,
                        double[::1] out) noexcept nogil:
    cdef Py_ssize_t x, nx = logp.shape[0]
    cdef double mx = -INFINITY, norm = 0.0
    for x in range(nx):
        if isfinite(logg[x]) and logp[x] > -INFINITY:
            out[x] = logp[x] + e * logg[x]
        else:
            out[x] = -INFINITY
        if out[x] > mx:
            mx = out[x]
    for x in range(nx):
        out[x] -= mx
        norm += exp(out[x])
    norm = log(norm)
    for x in range(nx):
        out[x] -= norm


def sibson_capacity_batch(w, alphas, double tol, long max_iter, p0=None):
    wfull = np.asarray(w, dtype=np.float64)
    cm = wfull.max(axis=0)
    live = cm > 0
    cdef double[:, ::1] W = np.ascontiguousarray(wfull[:, live] / cm[live])
    cdef double[::1] logm = np.log(cm[live])
    cdef double[::1] A = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef Py_ssize_t nx = W.shape[0], ny = W.shape[1], nb = A.shape[0]
    values_arr = np.zeros(nb)
    inputs_arr = np.zeros((nb, nx))
    iters_arr = np.zeros(nb, dtype=np.int64)
    conv_arr = np.zeros(nb, dtype=bool)
    cdef double[::1] values = values_arr
    cdef double[:, ::1] inputs = inputs_arr
    cdef long long[::1] iters = iters_arr
    cdef cnp.uint8_t[::1] conv = conv_arr.view(np.uint8)

    cdef double[:, ::1] wa = np.empty((nx, ny))
    cdef double[::1] logp = np.empty(nx)
    cdef double[::1] cand = np.empty(nx)
    cdef double[::1] logp0 = np.empty(nx)
    cdef double[::1] lb = np.empty(ny)
    cdef double[::1] logg = np.empty(nx)
    cdef double[::1] logg2 = np.empty(nx)
    cdef Py_ssize_t b, x, y
    cdef long it
    cdef double a, expo, lower, upper, lo2, up2, scale
    cdef long stall

    if p0 is None:
        for x in range(nx):
            logp0[x] = -log(<double>nx)
    else:
        p0v = np.asarray(p0, dtype=np.float64)
        for x in range(nx):
            logp0[x] = log(p0v[x]) if p0v[x] > 0 else -INFINITY

    for b in range(nb):
        a = A[b]
        expo = a / (a - 1.0)
        for x in range(nx):
            logp[x] = logp0[x]
            for y in range(ny):
                wa[x, y] = pow(W[x, y], a) if W[x, y] > 0 else 0.0
        lower = _arimoto_eval(logp, wa, logm, a, lb, logg, &upper)
        scale = 1.0
        stall = 0
        for it in range(1, max_iter + 1):
            iters[b] = it
            if upper - lower <= tol * (fabs(lower) if fabs(lower) > 1.0 else 1.0):
                conv[b] = 1
                break
            if stall >= STALL:
                break
            _arimoto_step(logp, logg, scale * expo, cand)
            lo2 = _arimoto_eval(cand, wa, logm, a, lb, logg2, &up2)
            stall = stall + 1 if lo2 - lower <= 1e-15 else 0
            if lo2 >= lower or scale <= 1.0:
                for x in range(nx):
                    logp[x] = cand[x]
                    logg[x] = logg2[x]
                lower = lo2
                upper = up2
                scale *= 2.0
            else:
                scale = scale / 4.0 if scale > 4.0 else 1.0
        values[b] = lower
        for x in range(nx):
            inputs[b, x] = exp(logp[x])
    return values_arr, inputs_arr, iters_arr, conv_arr


cdef double _augustin_obj(double[::1] p, double[:, ::1] wa, double[::1] q,
                          double alpha) noexcept nogil:
    cdef Py_ssize_t x, y, nx = wa.shape[0], ny = wa.shape[1]
    cdef double tot = 0.0, s
    for x in range(nx):
        s = 0.0
        for y in range(ny):
            if wa[x, y] > 0:
                if q[y] > 0:
                    s += wa[x, y] * pow(q[y], 1.0 - alpha)
                elif alpha > 1.0:
                    return INFINITY
        tot += p[x] * log(s) / (alpha - 1.0)
    return tot


def augustin_mi(p, w, double alpha, double tol, long max_iter):
    pa = np.asarray(p, dtype=np.float64)
    keep = pa > 0
    cdef double[::1] P = np.ascontiguousarray(pa[keep])
    wk = np.asarray(w, dtype=np.float64)[keep]
    cdef Py_ssize_t nx = wk.shape[0], ny = wk.shape[1], x, y
    cdef double[:, ::1] wa = np.ascontiguousarray(np.power(wk, alpha))
    q_arr = np.ascontiguousarray(np.asarray(P) @ wk)
    cdef double[::1] q = q_arr
    cdef double[::1] qn = np.empty(ny)
    cdef double[::1] row = np.empty(ny)
    cdef double obj = _augustin_obj(P, wa, q, alpha), new_obj, s, change
    cdef long it
    cdef int halvings
    for it in range(1, max_iter + 1):
        for y in range(ny):
            qn[y] = 0.0
        for x in range(nx):
            s = 0.0
            for y in range(ny):
                row[y] = wa[x, y] * pow(q[y], 1.0 - alpha) if q[y] > 0 else 0.0
                s += row[y]
            for y in range(ny):
                qn[y] += P[x] * row[y] / s
        new_obj = _augustin_obj(P, wa, qn, alpha)
        halvings = 0
        while new_obj > obj and halvings < 60:
            for y in range(ny):
                qn[y] = 0.5 * (q[y] + qn[y])
            new_obj = _augustin_obj(P, wa, qn, alpha)
            halvings += 1
        change = 0.0
        for y in range(ny):
            change += fabs(qn[y] - q[y])
        if new_obj <= obj:
            for y in range(ny):
                q[y] = qn[y]
            obj = new_obj
        if change <= tol:
            return obj, np.asarray(q_arr).copy(), it, True
    return obj, np.asarray(q_arr).copy(), max_iter, False


def pair_min(dw, iw, dt, it, double r, double lo, double hi):
    cdef double[::1] DW = np.ascontiguousarray(dw, dtype=np.float64)
    cdef double[::1] IW = np.ascontiguousarray(iw, dtype=np.float64)
    cdef double[::1] DT = np.ascontiguousarray(dt, dtype=np.float64)
    cdef double[::1] IT = np.ascontiguousarray(it, dtype=np.float64)
    cdef Py_ssize_t i, j, ni = DW.shape[0], nj = DT.shape[0]
    cdef Py_ssize_t bi = 0, bj = 0
    cdef double best = INFINITY, a, bb, gap, v_lo, v_hi, v
    for i in range(ni):
        for j in range(nj):
            gap = r * IT[j] - IW[i]
            if gap < 0:
                gap = 0.0
            a = DW[i] + gap
            bb = r * DT[j]
            if lo <= 0.0:
                v_lo = bb
            elif lo >= 1.0:
                v_lo = a
            else:
                v_lo = lo * a + (1.0 - lo) * bb
            if hi <= 0.0:
                v_hi = bb
            elif hi >= 1.0:
                v_hi = a
            else:
                v_hi = hi * a + (1.0 - hi) * bb
            v = v_lo if v_lo > v_hi else v_hi
            if v < best:
                best = v
                bi = i
                bj = j
    return best, bi, bj
