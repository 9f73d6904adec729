"""Pure numpy implementations of the hot kernels.

These mirror the signatures in ``_kernels.pyx`` exactly and are used when the
compiled extension is unavailable (or disabled with
``INTERCONVERT_PURE_PYTHON=1``).  All quantities are in nats.
"""

from __future__ import annotations

import numpy as np

# steps without a strict lower-bound gain before giving up (precision floor)
STALL = 500


def _powers(w, alpha):
    # 0 ** alpha == 0 for alpha > 0, which numpy already does
    return np.power(w, alpha)


def _arimoto_eval(logp, wa, logm, alphas):
    """Lower bound, Rényi-radius upper bound and ``log g`` at each input."""
    p = np.exp(logp)
    beta = np.einsum("bx,bxy->by", p, wa)
    with np.errstate(divide="ignore", invalid="ignore"):
        lb = logm[None, :] + (1.0 / alphas - 1.0)[:, None] * np.log(beta)
    lb = np.where(beta > 0, lb, -np.inf)
    shift = lb.max(axis=1, keepdims=True)
    g = np.einsum("bxy,by->bx", wa, np.exp(lb - shift))
    with np.errstate(divide="ignore"):
        logg = np.log(g) + shift
        logz = np.log(np.einsum("bx,bx->b", p, g)) + shift[:, 0]
    lower = alphas / (alphas - 1.0) * logz
    upper = (logg / (alphas - 1.0)[:, None]).max(axis=1) + logz
    return lower, upper, logg


def _step(logp, logg, expo):
    step = logp + expo[:, None] * logg
    step = np.where(np.isfinite(logg), step, -np.inf)
    step -= step.max(axis=1, keepdims=True)
    return step - np.log(np.exp(step).sum(axis=1, keepdims=True))


def sibson_capacity_batch(w, alphas, tol, max_iter, p0=None):
    """Arimoto alternating maximization of Sibson's I_alpha for many orders.

    Returns ``(values, inputs, iterations, converged)``.  ``values`` are the
    certified lower bounds ``I_alpha(p, W)`` at the returned input; the loop
    stops once the Rényi-radius upper bound ``max_x D_alpha(W_x || Q_p)`` is
    within ``tol * max(1, value)``.

    The Arimoto exponent is multiplied by an adaptive factor ``s >= 1`` that
    doubles after every improving step and falls back towards plain Arimoto
    otherwise; small orders would crawl at ``s = 1``.  Columns are scaled by
    their maximum and the output weights shifted in log space so extreme
    orders do not underflow.
    """
    w = np.ascontiguousarray(w, dtype=float)
    alphas = np.ascontiguousarray(alphas, dtype=float)
    nx = w.shape[0]
    nb = alphas.shape[0]
    values = np.zeros(nb)
    inputs = np.zeros((nb, nx))
    iters = np.zeros(nb, dtype=np.int64)
    conv = np.zeros(nb, dtype=bool)
    if nb == 0:
        return values, inputs, iters, conv

    colmax = w.max(axis=0)
    live = colmax > 0
    logm = np.log(colmax[live])
    wa = np.power((w[:, live] / colmax[live])[None, :, :], alphas[:, None, None])
    expo = alphas / (alphas - 1.0)
    if p0 is None:
        logp = np.full((nb, nx), -np.log(nx))
    else:
        with np.errstate(divide="ignore"):
            logp = np.broadcast_to(np.log(np.asarray(p0, dtype=float)), (nb, nx)).copy()
    lower, upper, logg = _arimoto_eval(logp, wa, logm, alphas)
    scale = np.ones(nb)
    stall = np.zeros(nb, dtype=np.int64)
    active = np.ones(nb, dtype=bool)
    for it in range(1, max_iter + 1):
        iters[active] = it
        done = active & (upper - lower <= tol * np.maximum(1.0, np.abs(lower)))
        conv[done] = True
        active &= ~done & (stall < STALL)
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        cand = _step(logp[idx], logg[idx], scale[idx] * expo[idx])
        lo2, up2, lg2 = _arimoto_eval(cand, wa[idx], logm, alphas[idx])
        stall[idx] = np.where(lo2 - lower[idx] <= 1e-15, stall[idx] + 1, 0)
        ok = (lo2 >= lower[idx]) | (scale[idx] <= 1.0)
        acc = idx[ok]
        logp[acc], lower[acc], upper[acc], logg[acc] = cand[ok], lo2[ok], up2[ok], lg2[ok]
        scale[acc] *= 2.0
        rej = idx[~ok]
        scale[rej] = np.maximum(1.0, scale[rej] / 4.0)
    values[:] = lower
    inputs[:] = np.exp(logp)
    return values, inputs, iters, conv


def _augustin_objective(p, w, q, alpha):
    wa = _powers(w, alpha)
    with np.errstate(divide="ignore"):
        s = wa @ np.power(q, 1.0 - alpha)
        return float(p @ (np.log(s) / (alpha - 1.0)))


def augustin_mi(p, w, alpha, tol, max_iter):
    """Augustin fixed point for ``min_Q E_{x~p} D_alpha(W_x || Q)``.

    Returns ``(value, q, iterations, converged)``.  Each accepted step is
    required to decrease the objective; otherwise the step is halved toward
    the current iterate.
    """
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    keep = p > 0
    p = p[keep]
    w = w[keep]
    q = p @ w
    wa = _powers(w, alpha)
    obj = _augustin_objective(p, w, q, alpha)
    for it in range(1, max_iter + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            qpow = np.where(q > 0, np.power(np.where(q > 0, q, 1.0), 1.0 - alpha), 0.0)
        tilt = wa * qpow[None, :]
        tilt /= tilt.sum(axis=1, keepdims=True)
        q_new = p @ tilt
        new_obj = _augustin_objective(p, w, q_new, alpha)
        halvings = 0
        while new_obj > obj and halvings < 60:
            q_new = 0.5 * (q + q_new)
            new_obj = _augustin_objective(p, w, q_new, alpha)
            halvings += 1
        change = np.abs(q_new - q).sum()
        if new_obj <= obj:
            q, obj = q_new, new_obj
        if change <= tol:
            return obj, q, it, True
    return obj, q, max_iter, False


def pair_min(dw, iw, dt, it, r, lo, hi):
    """Minimum over (W~, T~) candidate pairs of the alpha-supremum objective.

    For candidate values ``a = dw + |r*it - iw|_+`` and ``b = r*dt`` the
    objective is ``sup_{alpha in [lo, hi]} alpha*a + (1-alpha)*b``.  Returns
    ``(value, i, j)``.
    """
    dw = np.asarray(dw, dtype=float)
    iw = np.asarray(iw, dtype=float)
    dt = np.asarray(dt, dtype=float)
    it = np.asarray(it, dtype=float)
    b = r * dt[None, :]
    a = dw[:, None] + np.maximum(r * it[None, :] - iw[:, None], 0.0)
    vals = np.maximum(_affine(a, b, lo), _affine(a, b, hi))
    k = int(np.argmin(vals))
    i, j = divmod(k, dt.shape[0])
    return float(vals[i, j]), i, j


def _affine(a, b, alpha):
    if alpha <= 0.0:
        return np.broadcast_to(b, a.shape)
    if alpha >= 1.0:
        return a
    return alpha * a + (1.0 - alpha) * b
