"""Exact finite-blocklength conversion success as linear programs.

A conversion strategy ``N(x, z | s, y)`` takes the target input ``s`` and the
physical channel output ``y`` to the physical input ``x`` and the synthesised
output ``z``.  Worst-case TV success ``min_s sum_z min((N o W)(z|s), T(z|s))``
is linearised with hypograph variables ``m[s, z]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .config import DEFAULTS, Tolerances
from .exponents import ExponentQuery, sce
from .measures import Channel, _mat, _vec


@dataclass(frozen=True, eq=False)
class NSStrategy:
    """``table[s, y, x, z] = N(x, z | s, y)``."""

    table: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.table.shape  # (S, Y, X, Z)

    def x_marginal(self) -> np.ndarray:
        """``N(x | s, y)`` with shape ``(S, Y, X)``."""
        return self.table.sum(axis=3)

    def z_marginal(self) -> np.ndarray:
        """``N(z | s, y)`` with shape ``(S, Y, Z)``."""
        return self.table.sum(axis=2)

    def violations(self) -> dict[str, float]:
        """Largest deviation from each defining constraint."""
        t = self.table
        xm, zm = self.x_marginal(), self.z_marginal()
        return {
            "negativity": float(max(0.0, -t.min())),
            "normalization": float(np.abs(t.sum(axis=(2, 3)) - 1).max()),
            "z_marginal_vs_s": float(np.abs(zm - zm[:1]).max()),
            "x_marginal_vs_y": float(np.abs(xm - xm[:, :1]).max()),
        }


@dataclass
class LPReport:
    optimum: float
    strategy: NSStrategy
    status: str
    residual: float
    variables: int

    def to_json(self) -> dict:
        return {"optimum": self.optimum, "status": self.status,
                "residual": self.residual, "variables": self.variables}


def compose(n: NSStrategy, w) -> Channel:
    """``(N o W)(z|s) = sum_{x,y} N(x,z|s,y) W(y|x)``."""
    w = _mat(w)
    S, Y, X, Z = n.dims
    if w.shape != (X, Y):
        raise ValueError(f"strategy expects a {X}x{Y} channel, got {w.shape[0]}x{w.shape[1]}")
    out = np.einsum("syxz,xy->sz", n.table, w)
    return Channel(out / out.sum(axis=1, keepdims=True))


def _compose_raw(table: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum("syxz,xy->sz", table, w)


def worst_case_success(c: np.ndarray, t: np.ndarray) -> float:
    """``min_s (1 - TV(C_s, T_s))``."""
    return float(np.minimum(c, t).sum(axis=1).min())


def _solve(c, a_ub, b_ub, a_eq, b_eq, bounds, tol: Tolerances):
    opts = {"primal_feasibility_tolerance": tol.lp_tolerance,
            "dual_feasibility_tolerance": tol.lp_tolerance}
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds", options=opts)
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return res


def ns_success_tv(w, t, *, p_x=None, tol: Tolerances = DEFAULTS) -> LPReport:
    """Optimal worst-case TV success over non-signaling strategies.

    ``p_x`` optionally pins the strategy's x-marginal ``N(x|s)`` to a fixed
    distribution.
    """
    w, t = _mat(w), _mat(t)
    X, Y = w.shape
    S, Z = t.shape
    nN = S * Y * X * Z
    nvar = nN + S * Z + 1
    if nvar > tol.lp_max_variables:
        raise ValueError(f"LP needs {nvar} variables (cap {tol.lp_max_variables})")
    nid = np.arange(nN).reshape(S, Y, X, Z)
    mid = nN + np.arange(S * Z).reshape(S, Z)
    tau = nN + S * Z

    eq_rows, eq_cols, eq_vals, b_eq = [], [], [], []

    def add_eq(cols, vals, rhs):
        r = len(b_eq)
        eq_rows.extend([r] * len(cols))
        eq_cols.extend(cols)
        eq_vals.extend(vals)
        b_eq.append(rhs)

    for s in range(S):
        for y in range(Y):
            add_eq(nid[s, y].ravel().tolist(), [1.0] * (X * Z), 1.0)
    # sum_x N(x,z|s,y) does not depend on s
    for s in range(1, S):
        for y in range(Y):
            for z in range(Z):
                add_eq(nid[s, y, :, z].tolist() + nid[0, y, :, z].tolist(),
                       [1.0] * X + [-1.0] * X, 0.0)
    # sum_z N(x,z|s,y) does not depend on y
    for s in range(S):
        for y in range(1, Y):
            for x in range(X):
                add_eq(nid[s, y, x, :].tolist() + nid[s, 0, x, :].tolist(),
                       [1.0] * Z + [-1.0] * Z, 0.0)
    if p_x is not None:
        px = _vec(p_x)
        for s in range(S):
            for x in range(X):
                add_eq(nid[s, 0, x, :].tolist(), [1.0] * Z, float(px[x]))

    ub_rows, ub_cols, ub_vals = [], [], []
    r = 0
    # m[s,z] - sum_{x,y} W(y|x) N(x,z|s,y) <= 0
    for s in range(S):
        for z in range(Z):
            ub_rows.append(r)
            ub_cols.append(mid[s, z])
            ub_vals.append(1.0)
            for y in range(Y):
                for x in range(X):
                    if w[x, y] != 0:
                        ub_rows.append(r)
                        ub_cols.append(nid[s, y, x, z])
                        ub_vals.append(-w[x, y])
            r += 1
    # tau - sum_z m[s,z] <= 0
    for s in range(S):
        ub_rows.extend([r] * (Z + 1))
        ub_cols.extend([tau] + mid[s].tolist())
        ub_vals.extend([1.0] + [-1.0] * Z)
        r += 1

    a_eq = sp.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), nvar))
    a_ub = sp.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(r, nvar))
    b_ub = np.zeros(r)
    bounds = [(0, None)] * nN + [(0, float(t[s, z])) for s in range(S) for z in range(Z)] + [(None, None)]
    c = np.zeros(nvar)
    c[tau] = -1.0
    res = _solve(c, a_ub, b_ub, a_eq, np.array(b_eq), bounds, tol)

    table = np.clip(res.x[:nN].reshape(S, Y, X, Z), 0.0, None)
    resid = max(float(np.abs(a_eq @ res.x - b_eq).max()),
                float(np.maximum(a_ub @ res.x - b_ub, 0).max()),
                float(max(0.0, -res.x[:nN].min())))
    return LPReport(optimum=float(-res.fun), strategy=NSStrategy(table),
                    status=res.message, residual=resid, variables=nvar)


def sr_success_tv(w, t, *, tol: Tolerances = DEFAULTS) -> LPReport:
    """Optimal worst-case TV success over shared randomness.

    Enumerates deterministic pairs ``e: S -> X`` and ``d: Y -> Z`` and
    optimises the mixture weights.
    """
    w, t = _mat(w), _mat(t)
    X, Y = w.shape
    S, Z = t.shape
    pairs = X ** S * Z ** Y
    if pairs > tol.sr_max_pairs:
        raise ValueError(f"{pairs} deterministic pairs exceed the cap {tol.sr_max_pairs}")
    encoders = list(itertools.product(range(X), repeat=S))
    decoders = list(itertools.product(range(Z), repeat=Y))
    chans = np.zeros((pairs, S, Z))
    k = 0
    for e in encoders:
        rows = w[list(e)]  # (S, Y)
        for d in decoders:
            ch = np.zeros((S, Z))
            for y, z in enumerate(d):
                ch[:, z] += rows[:, y]
            chans[k] = ch
            k += 1

    # variables: lambda (pairs), m (S*Z), tau
    nvar = pairs + S * Z + 1
    lam = np.arange(pairs)
    mid = pairs + np.arange(S * Z).reshape(S, Z)
    tau = pairs + S * Z
    rows, cols, vals = [], [], []
    r = 0
    for s in range(S):
        for z in range(Z):
            rows.append(r); cols.append(mid[s, z]); vals.append(1.0)
            nz = np.flatnonzero(chans[:, s, z])
            rows.extend([r] * nz.size); cols.extend(lam[nz].tolist()); vals.extend((-chans[nz, s, z]).tolist())
            r += 1
    for s in range(S):
        rows.extend([r] * (Z + 1)); cols.extend([tau] + mid[s].tolist()); vals.extend([1.0] + [-1.0] * Z)
        r += 1
    a_ub = sp.csr_matrix((vals, (rows, cols)), shape=(r, nvar))
    a_eq = sp.csr_matrix((np.ones(pairs), (np.zeros(pairs, int), lam)), shape=(1, nvar))
    bounds = [(0, None)] * pairs + [(0, float(t[s, z])) for s in range(S) for z in range(Z)] + [(None, None)]
    c = np.zeros(nvar)
    c[tau] = -1.0
    res = _solve(c, a_ub, np.zeros(r), a_eq, np.array([1.0]), bounds, tol)

    weights = np.clip(res.x[:pairs], 0.0, None)
    table = np.zeros((S, Y, X, Z))
    k = 0
    for e in encoders:
        for d in decoders:
            if weights[k] > 0:
                for s in range(S):
                    for y in range(Y):
                        table[s, y, e[s], d[y]] += weights[k]
            k += 1
    resid = max(float(abs(res.x[:pairs].sum() - 1)),
                float(np.maximum(a_ub @ res.x, 0).max()),
                float(max(0.0, -res.x[:pairs].min())))
    return LPReport(optimum=float(-res.fun), strategy=NSStrategy(table),
                    status=res.message, residual=resid, variables=nvar)


def converse_bound(q: ExponentQuery) -> float:
    """Right-hand side of the finite-n converse; valid at every blocklength."""
    return sce(q).value


def lp_exponent(optimum: float, n: int, unit_per_nat: float = 1.0) -> float:
    """``-(1/n) log optimum`` (``inf`` for a zero optimum)."""
    return math.inf if optimum <= 0 else -math.log(optimum) / n * unit_per_nat
