"""Strong converse exponents for channel interconversion.

Closed forms are optimised in reparametrised coordinates where every domain
is a box:

* TV: ``u = 1/p = 1 - alpha*v`` with ``(alpha, v)`` in ``(0,1)^2``.  The
  objective is ``alpha(1-v) (r I_{(1-alpha)/(1-alpha v)}(T) - I_{1/v}(W))``.
* PUR: ``u = 1/p`` in ``(1/2, 1)``.
* RENYI(a): ``u = 1/p`` in ``(a, 1)``.

Boundary limits (an infinite order on the W side, a zero order on the T side
and the vanishing-coefficient edges) are evaluated analytically and compete
with the interior grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .config import DEFAULTS, Tolerances
from .measures import (
    NATS,
    Channel,
    LogUnit,
    _mat,
    capacity,
    identity,
    renyi_capacity_inf,
    renyi_capacity_zero,
    simplex_grid,
)


class DistanceKind(enum.Enum):
    TV = "tv"
    PUR = "pur"
    RENYI = "renyi"


@dataclass(frozen=True)
class Distance:
    kind: DistanceKind
    alpha: float | None = None

    def __post_init__(self):
        if self.kind is DistanceKind.RENYI:
            if self.alpha is None or not 0 < self.alpha < 1:
                raise ValueError("the Rényi distance needs an order in (0, 1)")
        elif self.alpha is not None:
            raise ValueError(f"{self.kind.value} takes no order")

    @classmethod
    def parse(cls, s: "str | Distance") -> "Distance":
        if isinstance(s, Distance):
            return s
        name, _, arg = str(s).lower().partition(":")
        kind = DistanceKind(name)
        return cls(kind, float(arg) if arg else None)

    def __str__(self):
        return self.kind.value if self.alpha is None else f"{self.kind.value}:{self.alpha:g}"


TV = Distance(DistanceKind.TV)
PUR = Distance(DistanceKind.PUR)


def renyi_distance(alpha: float) -> Distance:
    return Distance(DistanceKind.RENYI, alpha)


@dataclass(frozen=True)
class GridSpec:
    points: int = DEFAULTS.grid_points
    refine_rounds: int = DEFAULTS.refine_rounds
    refine_points: int = DEFAULTS.refine_points
    inset: float = DEFAULTS.inset


@dataclass(frozen=True)
class ExponentQuery:
    w: Channel
    t: Channel
    r: float
    distance: Distance = TV
    grid: GridSpec = field(default_factory=GridSpec)
    unit: LogUnit = NATS
    alpha_fixed: float | None = None

    def __post_init__(self):
        r = float(self.r)
        if not (r >= 0 and math.isfinite(r)):
            raise ValueError(f"rate must be a non-negative finite number, got {self.r}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "distance", Distance.parse(self.distance))
        object.__setattr__(self, "unit", LogUnit.parse(self.unit))
        if self.alpha_fixed is not None:
            if self.distance.kind is not DistanceKind.TV:
                raise ValueError("a fixed alpha only applies to the TV distance")
            if not 0 < self.alpha_fixed < 1:
                raise ValueError("fixed alpha must lie in (0, 1)")


@dataclass
class ExponentResult:
    value: float
    clamped_value: float
    argmax_alpha: float
    argmax_p: float
    distance: str
    unit: str
    r: float
    boundary: str | None = None
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def raw(self) -> float:
        return self.value

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "ExponentResult":
        return cls(**d)


# ---------------------------------------------------------------- capacity cache

class CapacityProfile:
    """Memoised ``order -> I_order(W)`` in nats, including 0, 1 and infinity."""

    def __init__(self, w, tol: Tolerances = DEFAULTS):
        self.w = _mat(w)
        self.tol = tol
        self._cache: dict[float, float] = {}
        self.unconverged = 0

    def __call__(self, orders) -> np.ndarray:
        orders = np.asarray(orders, dtype=float)
        flat = orders.reshape(-1)
        missing = sorted({float(a) for a in flat} - self._cache.keys())
        regular = [a for a in missing if 0 < a < math.inf and a != 1.0]
        for a in missing:
            if a <= 0:
                self._cache[a] = renyi_capacity_zero(self.w)
            elif a == math.inf:
                self._cache[a] = renyi_capacity_inf(self.w)
            elif a == 1.0:
                self._cache[a] = capacity(self.w, tol=self.tol).value
        if regular:
            vals, _, _, conv = kernels.sibson_capacity_batch(
                self.w, np.array(regular), self.tol.capacity, self.tol.max_iter)
            self.unconverged += int((~conv).sum())
            self._cache.update(zip(regular, vals.tolist()))
        return np.array([self._cache[float(a)] for a in flat]).reshape(orders.shape)

    def one(self, order: float) -> float:
        return float(self(np.array([order]))[0])


# ---------------------------------------------------------------- objectives (nats)

def _tv_av(ct, cw, r, a, v):
    a, v = np.broadcast_arrays(np.asarray(a, float), np.asarray(v, float))
    return a * (1 - v) * (r * ct((1 - a) / (1 - a * v)) - cw(1.0 / v))


def _pur_u(ct, cw, r, u):
    u = np.asarray(u, float)
    return (2 * u - 1) * (r * ct(1 / (2 * u)) - cw(1 / (2 * (1 - u))))


def _renyi_u(ct, cw, r, a, u):
    u = np.asarray(u, float)
    return (u - a) / (1 - a) * (r * ct(a / u) - cw((1 - a) / (1 - u)))


def inner_objective(alpha: float | None, p: float, q: ExponentQuery) -> float:
    """Objective of the closed form at ``(alpha, p)`` in the original coordinates.

    For PUR and RENYI the ``alpha`` argument must be ``None`` or equal to the
    distance's own order (1/2 for PUR).
    """
    ct, cw = CapacityProfile(q.t), CapacityProfile(q.w)
    r, kind = q.r, q.distance.kind
    if kind is DistanceKind.TV:
        if alpha is None or not 0 < alpha < 1 or not 1 < p < 1 / (1 - alpha):
            raise ValueError(f"(alpha, p) = ({alpha}, {p}) outside 0<alpha<1, 1<p<1/(1-alpha)")
        coef = (1 - p + alpha * p) / p
        val = coef * (r * ct.one((1 - alpha) * p) - cw.one(alpha * p / (p - 1)))
    elif kind is DistanceKind.PUR:
        if alpha not in (None, 0.5) or not 1 < p < 2:
            raise ValueError(f"p = {p} outside (1, 2) (alpha is fixed at 1/2)")
        val = (2 - p) / p * (r * ct.one(p / 2) - cw.one(p / (2 * (p - 1))))
    else:
        a = q.distance.alpha
        if alpha not in (None, a) or not 1 < p < 1 / a:
            raise ValueError(f"p = {p} outside (1, {1 / a})")
        val = (1 - a * p) / ((1 - a) * p) * (r * ct.one(a * p) - cw.one((1 - a) * p / (p - 1)))
    return q.unit.from_nats(float(val))


# ---------------------------------------------------------------- search helpers

def _search_1d(f, lo, hi, g: GridSpec):
    xs = np.linspace(lo, hi, g.points)
    vals = f(xs)
    k = int(np.argmax(vals))
    best, bx = float(vals[k]), float(xs[k])
    step = (hi - lo) / (g.points - 1)
    trace = [best]
    for _ in range(g.refine_rounds):
        a, b = max(lo, bx - 2 * step), min(hi, bx + 2 * step)
        xs = np.linspace(a, b, g.refine_points)
        vals = f(xs)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, bx = float(vals[k]), float(xs[k])
        step = (b - a) / (g.refine_points - 1)
        trace.append(best)
    return best, bx, trace


def _search_2d(f, box, g: GridSpec):
    (alo, ahi), (vlo, vhi) = box
    a = np.linspace(alo, ahi, g.points)
    v = np.linspace(vlo, vhi, g.points)
    A, V = np.meshgrid(a, v, indexing="ij")
    vals = f(A, V)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best, ba, bv = float(vals[i, j]), float(A[i, j]), float(V[i, j])
    sa, sv = (ahi - alo) / (g.points - 1), (vhi - vlo) / (g.points - 1)
    trace = [best]
    for _ in range(g.refine_rounds):
        a0, a1 = max(alo, ba - 2 * sa), min(ahi, ba + 2 * sa)
        v0, v1 = max(vlo, bv - 2 * sv), min(vhi, bv + 2 * sv)
        A, V = np.meshgrid(np.linspace(a0, a1, g.refine_points),
                           np.linspace(v0, v1, g.refine_points), indexing="ij")
        vals = f(A, V)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[i, j] > best:
            best, ba, bv = float(vals[i, j]), float(A[i, j]), float(V[i, j])
        sa, sv = (a1 - a0) / (g.refine_points - 1), (v1 - v0) / (g.refine_points - 1)
        trace.append(best)
    return best, (ba, bv), trace


def _stable(trace, scale) -> bool:
    return len(trace) < 2 or trace[-1] - trace[-2] <= 1e-6 * max(1.0, abs(scale))


# ---------------------------------------------------------------- sce

def sce(q: ExponentQuery, *, tol: Tolerances = DEFAULTS) -> ExponentResult:
    """Supremum of the closed-form objective over its open domain.

    The candidates are the refined interior grid, the analytic boundary
    limits, and the value 0 approached where the coefficient vanishes, so the
    raw value is never negative.
    """
    ct, cw = CapacityProfile(q.t, tol), CapacityProfile(q.w, tol)
    r, g, eps = q.r, q.grid, q.grid.inset
    kind = q.distance.kind
    cands = [(0.0, None, None, "vanishing coefficient")]
    traces = {}

    if kind is DistanceKind.TV and q.alpha_fixed is None:
        best, (ba, bv), tr = _search_2d(lambda A, V: _tv_av(ct, cw, r, A, V),
                                        ((eps, 1 - eps), (eps, 1 - eps)), g)
        traces["interior"] = tr
        cands.append((best, ba, bv, None))
        w_inf = cw.one(math.inf)
        t_zero = ct.one(0.0)
        # v -> 0: the W order diverges
        e1, a1, tr = _search_1d(lambda A: A * (r * ct(1 - A) - w_inf), eps, 1.0, g)
        traces["edge v=0"] = tr
        cands.append((e1, a1, 0.0, "v=0"))
        # alpha -> 1: the T order vanishes
        e2, v2, tr = _search_1d(lambda V: (1 - V) * (r * t_zero - cw(1.0 / V)), eps, 1 - eps, g)
        traces["edge alpha=1"] = tr
        cands.append((e2, 1.0, v2, "alpha=1"))
        cands.append((r * t_zero - w_inf, 1.0, 0.0, "alpha=1, v=0"))
    elif kind is DistanceKind.TV:
        a = q.alpha_fixed
        best, bv, tr = _search_1d(lambda V: _tv_av(ct, cw, r, a, V), eps, 1 - eps, g)
        traces["interior"] = tr
        cands.append((best, a, bv, None))
        cands.append((a * (r * ct.one(1 - a) - cw.one(math.inf)), a, 0.0, "v=0"))
    elif kind is DistanceKind.PUR:
        best, bu, tr = _search_1d(lambda U: _pur_u(ct, cw, r, U), 0.5 + eps, 1 - eps, g)
        traces["interior"] = tr
        cands.append((best, 0.5, bu, None))
        cands.append((r * ct.one(0.5) - cw.one(math.inf), 0.5, 1.0, "u=1"))
    else:
        a = q.distance.alpha
        best, bu, tr = _search_1d(lambda U: _renyi_u(ct, cw, r, a, U), a + eps, 1 - eps, g)
        traces["interior"] = tr
        cands.append((best, a, bu, None))
        cands.append((r * ct.one(a) - cw.one(math.inf), a, 1.0, "u=1"))

    value, ca, cx, boundary = max(cands, key=lambda c: c[0])
    alpha, p = _report_point(q, ca, cx, eps)
    converged = all(_stable(tr, value) for tr in traces.values())
    unit = q.unit
    diag = {
        "trace": {k: [unit.from_nats(x) for x in v] for k, v in traces.items()},
        "candidates": {str(c[3] or "interior"): unit.from_nats(c[0]) for c in cands},
        "unconverged_capacities": ct.unconverged + cw.unconverged,
    }
    raw = unit.from_nats(value)
    return ExponentResult(
        value=raw, clamped_value=max(raw, 0.0), argmax_alpha=alpha, argmax_p=p,
        distance=str(q.distance) if q.alpha_fixed is None else f"tv@{q.alpha_fixed:g}",
        unit=unit.value, r=q.r, boundary=boundary, converged=converged, diagnostics=diag)


def _report_point(q: ExponentQuery, a, x, eps):
    """Map a candidate back to ``(alpha, p)`` clipped into the inset domain."""
    kind = q.distance.kind
    if kind is DistanceKind.TV:
        if a is None:  # vanishing coefficient: alpha -> 0
            a, x = eps, 0.5
        a = q.alpha_fixed if q.alpha_fixed is not None else min(max(a, eps), 1 - eps)
        v = min(max(x, eps), 1 - eps)
        return float(a), float(1.0 / (1.0 - a * v))
    lo = 0.5 if kind is DistanceKind.PUR else q.distance.alpha
    alpha = lo
    if x is None:
        x = lo + eps
    u = min(max(x, lo + eps), 1 - eps)
    return float(alpha), float(1.0 / u)


def pur_tv_relation(w, t, r: float, unit: LogUnit = NATS, grid: GridSpec | None = None) -> dict:
    """Named check: ``sce(PUR) = 2 * sce(TV restricted to alpha = 1/2)``."""
    grid = grid or GridSpec()
    pur = sce(ExponentQuery(w, t, r, PUR, grid, unit)).value
    half = sce(ExponentQuery(w, t, r, TV, grid, unit, alpha_fixed=0.5)).value
    return {"pur": pur, "tv_half": half, "difference": pur - 2 * half}


def reduction_coding(w, R: float, distance="tv", unit: LogUnit = NATS) -> ExponentResult:
    """Coding exponent: convert ``W`` into ``R`` noiseless bits per use."""
    return sce(ExponentQuery(w if isinstance(w, Channel) else Channel(w), identity(2), R,
                             Distance.parse(distance), unit=unit))


def reduction_simulation(t, R: float, distance="tv", unit: LogUnit = NATS) -> ExponentResult:
    """Simulation exponent: synthesise ``R`` uses of ``T`` per noiseless bit."""
    return sce(ExponentQuery(identity(2), t if isinstance(t, Channel) else Channel(t), R,
                             Distance.parse(distance), unit=unit))


# ---------------------------------------------------------------- variational

@dataclass
class VariationalResult:
    value: float
    coarse_value: float
    mesh_too_coarse: bool
    p_x: list
    p_s: list
    unit: str

    def __float__(self) -> float:
        return float(self.value)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "VariationalResult":
        return cls(**d)


def _parse_set(A) -> tuple[float, float]:
    if isinstance(A, (int, float)):
        lo = hi = float(A)
    else:
        lo, hi = (float(x) for x in A)
    if not 0 <= lo <= hi <= 1:
        raise ValueError(f"alpha set must be a sub-interval of [0, 1], got {A}")
    return lo, hi


class _Side:
    """Candidate channels ``rows[idx[k, x]]`` with per-row divergences."""

    def __init__(self, ch: np.ndarray, rows: list[np.ndarray], cap: int):
        nx = ch.shape[0]
        count = math.prod(len(r) for r in rows)
        if count > cap:
            raise ValueError(f"{count} candidate channels exceed the cap {cap}; use a coarser mesh")
        self.rows = rows
        self.idx = np.array(np.meshgrid(*[np.arange(len(r)) for r in rows], indexing="ij")
                            ).reshape(nx, -1).T
        self.div = []
        self.ent = []
        for x, rr in enumerate(rows):
            with np.errstate(divide="ignore", invalid="ignore"):
                lr = np.where(rr > 0, np.log(rr), 0.0)
                lw = np.log(ch[x])
                d = np.where(rr > 0, rr * (lr - lw[None, :]), 0.0).sum(axis=1)
            d[np.isnan(d)] = math.inf
            self.div.append(d)
            self.ent.append(-(rr * lr).sum(axis=1))

    def stats(self, p: np.ndarray):
        """``(D(P W~ || P W), I(P, W~))`` for every candidate."""
        n = self.idx.shape[0]
        d = np.zeros(n)
        hcond = np.zeros(n)
        out = np.zeros((n, self.rows[0].shape[1]))
        for x in np.flatnonzero(p > 0):
            k = self.idx[:, x]
            d += p[x] * self.div[x][k]
            hcond += p[x] * self.ent[x][k]
            out += p[x] * self.rows[x][k]
        with np.errstate(divide="ignore", invalid="ignore"):
            hout = -np.where(out > 0, out * np.log(out), 0.0).sum(axis=1)
        return d, np.maximum(hout - hcond, 0.0)


def _pareto(d, i, keep_high: bool):
    """Indices on the Pareto front: low ``d`` and high (or low) ``i``."""
    ok = np.isfinite(d)
    if not ok.any():
        return np.array([int(np.argmin(i if not keep_high else -i))])
    cand = np.flatnonzero(ok)
    key = -i[cand] if keep_high else i[cand]
    order = cand[np.lexsort((key, d[cand]))]
    front, best = [], math.inf
    for k in order:
        s = -i[k] if keep_high else i[k]
        if s < best - 1e-15:
            front.append(k)
            best = s
    return np.array(front)


def _local(center: np.ndarray, mesh: int, factor: int = 4) -> np.ndarray:
    pts = simplex_grid(center.shape[0], mesh * factor)
    near = np.max(np.abs(pts - center[None, :]), axis=1) <= 1.0 / mesh + 1e-12
    return pts[near]


def _union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.unique(np.round(np.vstack([a, b]), 12), axis=0)


def _variational_core(w, t, r, lo, hi, px_set, ps_set, wrows, trows, cap):
    ws, ts = _Side(w, wrows, cap), _Side(t, trows, cap)
    tstats = []
    for ps in ps_set:
        dt, it = ts.stats(ps)
        front = _pareto(dt, it, keep_high=False)
        tstats.append((dt[front], it[front], front))
    best = (math.inf, None, None, None, None)
    for a, px in enumerate(px_set):
        dw, iw = ws.stats(px)
        wf = _pareto(dw, iw, keep_high=True)
        inner = (-math.inf, None, None, None)
        for b, (dt, it, tf) in enumerate(tstats):
            v, i, j = kernels.pair_min(dw[wf], iw[wf], dt, it, r, lo, hi)
            if v > inner[0]:
                inner = (v, b, int(wf[i]), int(tf[j]))
        if inner[0] < best[0]:
            best = (inner[0], a, inner[1], inner[2], inner[3])
    v, a, b, i, j = best
    wsel = [wrows[x][ws.idx[i, x]] for x in range(w.shape[0])]
    tsel = [trows[s][ts.idx[j, s]] for s in range(t.shape[0])]
    return v, px_set[a], ps_set[b], wsel, tsel


def variational_sce(q: ExponentQuery, A=(0.0, 1.0), mesh: int | None = None, *,
                    tol: Tolerances = DEFAULTS) -> VariationalResult:
    """Brute-force ``inf_PX sup_PS inf_W~ inf_T~ sup_{alpha in A}`` on simplex meshes.

    ``A`` is an interval ``(lo, hi)`` or a single order.  The supremum over
    ``alpha`` of the affine integrand sits at an endpoint of ``A``.
    """
    lo, hi = _parse_set(A)
    mesh = mesh or tol.simplex_mesh
    w, t = q.w.matrix, q.t.matrix
    cap = 2_000_000
    grid_x = simplex_grid(w.shape[0], mesh)
    grid_s = simplex_grid(t.shape[0], mesh)
    grid_y = simplex_grid(w.shape[1], mesh)
    grid_z = simplex_grid(t.shape[1], mesh)
    coarse, px, ps, wsel, tsel = _variational_core(
        w, t, q.r, lo, hi, grid_x, grid_s,
        [grid_y] * w.shape[0], [grid_z] * t.shape[0], cap)

    # one refinement pass around the incumbents on a 4x finer local mesh
    fine, px2, ps2, _, _ = _variational_core(
        w, t, q.r, lo, hi, _local(px, mesh), _union(grid_s, _local(ps, mesh)),
        [_union(grid_y, _local(row, mesh)) for row in wsel],
        [_union(grid_z, _local(row, mesh)) for row in tsel], cap)
    unit = q.unit
    return VariationalResult(
        value=unit.from_nats(fine), coarse_value=unit.from_nats(coarse),
        mesh_too_coarse=bool(abs(fine - coarse) > tol.mesh_flag),
        p_x=px2.tolist(), p_s=ps2.tolist(), unit=unit.value)
