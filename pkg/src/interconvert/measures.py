"""Finite-alphabet distributions, channels and information measures.

Everything is computed in nats.  Public functions take ``unit`` and convert
on the way out; the library default is nats and the CLI default is bits.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .config import DEFAULTS, Tolerances


class ValidationError(ValueError):
    """Input violates a distribution or channel invariant."""


class ConvergenceWarning(RuntimeWarning):
    pass


class LogUnit(enum.Enum):
    BITS = "bits"
    NATS = "nats"

    @property
    def per_nat(self) -> float:
        return 1.0 / math.log(2.0) if self is LogUnit.BITS else 1.0

    def from_nats(self, x):
        return x * self.per_nat

    def to_nats(self, x):
        return x / self.per_nat

    @classmethod
    def parse(cls, s: "str | LogUnit") -> "LogUnit":
        return s if isinstance(s, LogUnit) else cls(str(s).lower())


NATS = LogUnit.NATS
BITS = LogUnit.BITS


# ---------------------------------------------------------------- containers

def _check_prob_vector(v: np.ndarray, tol: float, where: str) -> None:
    if not np.all(np.isfinite(v)):
        i = int(np.flatnonzero(~np.isfinite(v))[0])
        raise ValidationError(f"{where} entry {i} is not finite")
    if np.any(v < 0):
        i = int(np.flatnonzero(v < 0)[0])
        raise ValidationError(f"{where} entry {i} is negative ({v[i]!r})")
    s = float(v.sum())
    if abs(s - 1.0) > tol:
        raise ValidationError(f"{where} sums to {s!r}, not 1 (tolerance {tol:g})")


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector on ``{0, ..., k-1}``."""

    probs: np.ndarray

    def __post_init__(self):
        v = np.array(self.probs, dtype=float).reshape(-1)
        if v.size == 0:
            raise ValidationError("distribution must have at least one entry")
        _check_prob_vector(v, DEFAULTS.normalization, "distribution")
        v.setflags(write=False)
        object.__setattr__(self, "probs", v)

    @property
    def alphabet_size(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def uniform(cls, k: int) -> "Distribution":
        return cls(np.full(k, 1.0 / k))

    def __eq__(self, other):
        return isinstance(other, Distribution) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def to_json(self) -> dict:
        return {"probs": self.probs.tolist()}


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix ``W[x, y] = W(y|x)``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise ValidationError("channel must be a non-empty 2-d array")
        for x in range(m.shape[0]):
            _check_prob_vector(m[x], DEFAULTS.normalization, f"row {x}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def input_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[1]

    def row(self, x: int) -> Distribution:
        return Distribution(self.matrix[x])

    def output(self, p) -> Distribution:
        return Distribution(_vec(p) @ self.matrix)

    def __eq__(self, other):
        return isinstance(other, Channel) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.matrix.shape, self.matrix.tobytes()))

    def to_json(self) -> dict:
        return {"rows": self.matrix.tolist()}


@dataclass(frozen=True)
class TypeClass:
    """Composition of a length-``n`` string: ``counts[a]`` occurrences of ``a``."""

    counts: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(v) for v in self.counts)
        if any(v < 0 for v in c):
            raise ValidationError("type counts must be non-negative")
        if sum(c) < 1:
            raise ValidationError("type must have positive length")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return sum(self.counts)

    def empirical(self) -> Distribution:
        return Distribution(np.array(self.counts, dtype=float) / self.n)

    def size(self) -> int:
        return type_class_size(self)


@dataclass(frozen=True)
class FixedPoint:
    """Result of an iterative optimisation (value in the requested unit)."""

    value: float
    argument: np.ndarray
    iterations: int
    converged: bool

    def __float__(self) -> float:
        return float(self.value)


def _vec(p) -> np.ndarray:
    return p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=float)


def _mat(w) -> np.ndarray:
    return w.matrix if isinstance(w, Channel) else np.asarray(w, dtype=float)


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p, q = _vec(p), _vec(q)
    if p.shape != q.shape:
        raise ValueError(f"alphabet sizes differ: {p.shape[0]} vs {q.shape[0]}")
    return p, q


def _input(p, w) -> tuple[np.ndarray, np.ndarray]:
    p, w = _vec(p), _mat(w)
    if p.shape[0] != w.shape[0]:
        raise ValueError(f"input distribution has {p.shape[0]} symbols, channel has {w.shape[0]} inputs")
    return p, w


def _check_order(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError(f"Rényi order must be positive and finite, got {alpha}")
    if alpha == 1.0:
        raise ValueError("Rényi order 1 is excluded; use the KL-based measure")
    return alpha


# ---------------------------------------------------------------- constructors

def identity(k: int) -> Channel:
    return Channel(np.eye(k))


def bsc(delta: float) -> Channel:
    return Channel([[1 - delta, delta], [delta, 1 - delta]])


def constant_channel(row, inputs: int) -> Channel:
    return Channel(np.tile(_vec(row), (inputs, 1)))


def product_distribution(p, n: int) -> Distribution:
    v = _vec(p)
    out = np.ones(1)
    for _ in range(n):
        out = np.kron(out, v)
    return Distribution(out)


def product_channel(w, n: int, *, cap: int | None = None) -> Channel:
    """``n``-fold tensor power; first symbol is the most significant index."""
    m = _mat(w)
    cap = DEFAULTS.product_entries if cap is None else cap
    if n < 1:
        raise ValueError("n must be at least 1")
    entries = (m.shape[0] * m.shape[1]) ** n
    if entries > cap:
        raise ValueError(f"product channel would have {entries} entries (cap {cap})")
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, m)
    return Channel(out)


# ---------------------------------------------------------------- divergences

def tv(p, q) -> float:
    p, q = _pair(p, q)
    return 0.5 * float(np.abs(p - q).sum())


def fidelity(p, q) -> float:
    p, q = _pair(p, q)
    return float(np.sqrt(p * q).sum()) ** 2


def purified(p, q) -> float:
    return math.sqrt(max(0.0, 1.0 - fidelity(p, q)))


def _kl_nats(p: np.ndarray, q: np.ndarray) -> float:
    s = p > 0
    if np.any(q[s] <= 0):
        return math.inf
    return float(np.sum(p[s] * np.log(p[s] / q[s])))


def kl(p, q, unit: LogUnit = NATS) -> float:
    p, q = _pair(p, q)
    return LogUnit.parse(unit).from_nats(_kl_nats(p, q))


def _renyi_nats(p: np.ndarray, q: np.ndarray, alpha: float) -> float:
    s = p > 0
    if alpha > 1:
        if np.any(q[s] <= 0):
            return math.inf
        t = np.sum(p[s] ** alpha * q[s] ** (1 - alpha))
    else:
        b = s & (q > 0)
        t = np.sum(p[b] ** alpha * q[b] ** (1 - alpha))
        if t <= 0:
            return math.inf
    return float(np.log(t) / (alpha - 1))


def renyi(p, q, alpha: float, unit: LogUnit = NATS) -> float:
    """Order-``alpha`` Rényi divergence; order 1 is rejected, not substituted."""
    p, q = _pair(p, q)
    return LogUnit.parse(unit).from_nats(_renyi_nats(p, q, _check_order(alpha)))


def _dmax_nats(p: np.ndarray, q: np.ndarray) -> float:
    s = p > 0
    if np.any(q[s] <= 0):
        return math.inf
    return float(np.max(np.log(p[s] / q[s])))


def dmax(p, q, unit: LogUnit = NATS) -> float:
    p, q = _pair(p, q)
    return LogUnit.parse(unit).from_nats(_dmax_nats(p, q))


def _dmax_smooth_nats(p: np.ndarray, q: np.ndarray, eps: float, tol: Tolerances) -> float:
    if not 0 <= eps < 1:
        raise ValueError(f"smoothing parameter must lie in [0, 1), got {eps}")
    if eps == 0:
        return _dmax_nats(p, q)
    on = q > 0
    if p[~on].sum() > eps:
        return math.inf

    def feasible(lam: float) -> bool:
        return lam >= 0 and np.maximum(p - math.exp(lam) * q, 0.0).sum() <= eps

    lo = 0.0
    if feasible(lo):
        return 0.0
    s = on & (p > 0)
    hi = max(0.0, float(np.max(np.log(p[s] / q[s])))) if np.any(s) else 0.0
    # the unsmoothed bound is feasible whenever the off-support mass fits in eps
    for _ in range(tol.dmax_smooth_max_iter):
        if hi - lo <= tol.dmax_smooth_abs:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def dmax_smooth(p, q, eps: float, unit: LogUnit = NATS, *, tol: Tolerances = DEFAULTS) -> float:
    """``min { dmax(p~, q) : TV(p~, p) <= eps }`` by bisection on the exponent."""
    p, q = _pair(p, q)
    return LogUnit.parse(unit).from_nats(_dmax_smooth_nats(p, q, float(eps), tol))


# ---------------------------------------------------------------- mutual informations

def _mi_nats(p: np.ndarray, w: np.ndarray) -> float:
    out = p @ w
    joint = p[:, None] * w
    s = joint > 0
    ratio = np.broadcast_to(out[None, :], w.shape)
    return float(np.sum(joint[s] * np.log(w[s] / ratio[s])))


def mi(p, w, unit: LogUnit = NATS) -> float:
    p, w = _input(p, w)
    return LogUnit.parse(unit).from_nats(_mi_nats(p, w))


def _sibson_nats(p: np.ndarray, w: np.ndarray, alpha: float) -> float:
    keep = p > 0
    p, w = p[keep], w[keep]
    m = w.max(axis=0)
    live = m > 0
    inner = p @ np.power(w[:, live] / m[live], alpha)
    t = np.sum(m[live] * np.power(inner, 1.0 / alpha))
    return float(alpha / (alpha - 1) * np.log(t))


def sibson(p, w, alpha: float, unit: LogUnit = NATS) -> float:
    """Sibson's I_alpha(p, W) from its closed-form minimiser."""
    p, w = _input(p, w)
    return LogUnit.parse(unit).from_nats(_sibson_nats(p, w, _check_order(alpha)))


def augustin(p, w, alpha: float, unit: LogUnit = NATS, *, full: bool = False,
             tol: Tolerances = DEFAULTS):
    """Augustin–Csiszár I_alpha(p, W) by the tilted-mean fixed point.

    With ``full=True`` returns a :class:`FixedPoint` whose argument is the
    optimal output distribution.  Non-convergence warns and returns the best
    iterate.
    """
    p, w = _input(p, w)
    alpha = _check_order(alpha)
    unit = LogUnit.parse(unit)
    val, q, iters, ok = kernels.augustin_mi(p, w, alpha, tol.augustin, tol.max_iter)
    if not ok:
        warnings.warn(f"Augustin iteration did not converge (alpha={alpha})", ConvergenceWarning)
    if full:
        return FixedPoint(unit.from_nats(val), q, int(iters), bool(ok))
    return unit.from_nats(val)


def renyi_capacity_batch(w, alphas, unit: LogUnit = NATS, *, tol: Tolerances = DEFAULTS):
    """Arimoto values for many orders at once; returns ``(values, converged)``."""
    alphas = np.asarray(alphas, dtype=float)
    for a in alphas:
        _check_order(a)
    vals, _, _, conv = kernels.sibson_capacity_batch(_mat(w), alphas, tol.capacity, tol.max_iter)
    return LogUnit.parse(unit).from_nats(vals), conv


def renyi_capacity(w, alpha: float, unit: LogUnit = NATS, *, full: bool = False,
                   tol: Tolerances = DEFAULTS):
    """``sup_p I_alpha(p, W)``, Arimoto iteration from the uniform input."""
    alpha = _check_order(alpha)
    unit = LogUnit.parse(unit)
    vals, inputs, iters, conv = kernels.sibson_capacity_batch(
        _mat(w), np.array([alpha]), tol.capacity, tol.max_iter)
    if not conv[0]:
        warnings.warn(f"Arimoto iteration did not converge (alpha={alpha})", ConvergenceWarning)
    if full:
        return FixedPoint(unit.from_nats(vals[0]), inputs[0], int(iters[0]), bool(conv[0]))
    return unit.from_nats(float(vals[0]))


def renyi_capacity_inf(w, unit: LogUnit = NATS) -> float:
    """Order-infinity limit: ``log sum_y max_x W(y|x)``."""
    return LogUnit.parse(unit).from_nats(float(np.log(_mat(w).max(axis=0).sum())))


def renyi_capacity_zero(w, unit: LogUnit = NATS) -> float:
    """Order-zero limit: ``-log min_p max_y sum_x p(x) 1{W(y|x) > 0}``."""
    supp = (_mat(w) > 0).astype(float)
    nx, ny = supp.shape
    # variables (p, t); minimise t s.t. supp^T p <= t
    c = np.r_[np.zeros(nx), 1.0]
    a_ub = np.c_[supp.T, -np.ones(ny)]
    a_eq = np.r_[np.ones(nx), 0.0][None, :]
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(ny), A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0, None)] * nx + [(None, None)], method="highs")
    return LogUnit.parse(unit).from_nats(0.0 - math.log(res.fun))


def capacity(w, unit: LogUnit = NATS, *, tol: Tolerances = DEFAULTS) -> FixedPoint:
    """Blahut–Arimoto capacity; ``argument`` is the optimising input."""
    w = _mat(w)
    unit = LogUnit.parse(unit)
    nx = w.shape[0]
    p = np.full(nx, 1.0 / nx)
    s = w > 0
    for it in range(1, tol.max_iter + 1):
        out = p @ w
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.where(s, np.log(np.where(s, w, 1.0) / out[None, :]), 0.0)
        d = np.sum(w * logr, axis=1)
        lower = float(p @ d)
        upper = float(d.max())
        if upper - lower <= tol.capacity * max(1.0, abs(lower)):
            return FixedPoint(unit.from_nats(max(lower, 0.0)), p, it, True)
        p = p * np.exp(d - d.max())
        p /= p.sum()
    warnings.warn("Blahut–Arimoto did not converge", ConvergenceWarning)
    return FixedPoint(unit.from_nats(max(lower, 0.0)), p, tol.max_iter, False)


def _mi_variance_nats(p: np.ndarray, w: np.ndarray) -> float:
    out = p @ w
    joint = p[:, None] * w
    s = joint > 0
    ratio = np.broadcast_to(out[None, :], w.shape)
    llr = np.log(w[s] / ratio[s])
    i = np.sum(joint[s] * llr)
    return float(np.sum(joint[s] * (llr - i) ** 2))


def mi_variance(p, w, unit: LogUnit = NATS) -> float:
    """Variance of the information density; scales with the square of the unit."""
    p, w = _input(p, w)
    return _mi_variance_nats(p, w) * LogUnit.parse(unit).per_nat ** 2


def channel_variance(w, unit: LogUnit = NATS) -> float:
    """Information variance at the Blahut–Arimoto capacity-achieving input."""
    p = capacity(w).argument
    return mi_variance(p, w, unit)


def channel_variance_grid(w, unit: LogUnit = NATS, *, mesh: int = 200) -> float:
    """``sup_p`` of the information variance over a simplex mesh (``|X| <= 3``)."""
    w = _mat(w)
    if w.shape[0] > 3:
        raise ValueError("grid supremum is limited to at most 3 inputs")
    best = max(_mi_variance_nats(p, w) for p in simplex_grid(w.shape[0], mesh))
    return best * LogUnit.parse(unit).per_nat ** 2


# ---------------------------------------------------------------- types and grids

def enumerate_types(n: int, k: int) -> list[TypeClass]:
    """All compositions of ``n`` into ``k`` parts, lexicographically descending."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")

    def rec(rem, parts):
        if parts == 1:
            yield (rem,)
            return
        for first in range(rem, -1, -1):
            for tail in rec(rem - first, parts - 1):
                yield (first,) + tail

    return [TypeClass(c) for c in rec(n, k)]


def type_class_size(t: TypeClass | tuple[int, ...]) -> int:
    counts = t.counts if isinstance(t, TypeClass) else tuple(t)
    out, rem = 1, sum(counts)
    for c in counts:
        out *= math.comb(rem, c)
        rem -= c
    return out


def strings_of_type(t: TypeClass) -> np.ndarray:
    """Every string with composition ``t`` as rows of an integer array."""
    base = np.repeat(np.arange(len(t.counts)), t.counts)
    seen = sorted(set(itertools.permutations(base.tolist())))
    return np.array(seen, dtype=np.int64)


def simplex_grid(k: int, mesh: int) -> np.ndarray:
    """Points of the ``k``-simplex with coordinates in ``{0, 1/mesh, ..., 1}``."""
    pts = [np.array(t.counts, dtype=float) / mesh for t in enumerate_types(mesh, k)]
    return np.array(pts)


# ---------------------------------------------------------------- JSON I/O

def parse_object(obj) -> Distribution | Channel:
    if not isinstance(obj, dict) or not ({"rows", "probs"} & obj.keys()):
        raise ValidationError('expected a JSON object with "rows" or "probs"')
    if "rows" in obj:
        rows = obj["rows"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise ValidationError('"rows" must be a non-empty list of lists')
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            bad = next(i for i, r in enumerate(rows) if len(r) != len(rows[0]))
            raise ValidationError(f"row {bad} has {len(rows[bad])} entries, row 0 has {len(rows[0])}")
        try:
            return Channel(np.array(rows, dtype=float))
        except (TypeError, ValueError) as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError(f"non-numeric entry in rows: {e}") from None
    try:
        return Distribution(np.array(obj["probs"], dtype=float))
    except (TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"non-numeric entry in probs: {e}") from None


def load(path: str | Path) -> Distribution | Channel:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON ({e})") from None
    try:
        return parse_object(obj)
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}") from None


def load_channel(path: str | Path) -> Channel:
    obj = load(path)
    if not isinstance(obj, Channel):
        raise ValidationError(f'{path}: expected a channel ("rows")')
    return obj


def load_distribution(path: str | Path) -> Distribution:
    obj = load(path)
    if not isinstance(obj, Distribution):
        raise ValidationError(f'{path}: expected a distribution ("probs")')
    return obj


def dump(obj: Distribution | Channel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj.to_json()))
