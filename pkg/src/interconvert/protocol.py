"""Coding-then-simulation conversion protocol at small blocklength.

``W^n`` is first turned into ``M = b^{ceil(R n)}`` noiseless messages by a
random code with maximum-likelihood decoding, where ``b`` is the base of the
working log unit (``e`` for nats, floored; ``2`` for bits) and ``M`` is capped.
The messages drive a rejection-sampling simulation of ``T^{ceil(r n)}`` with
cap ``c = M / n``, so the failure probability ``(1 - 1/c)^M`` is at most
``e^{-n}``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .config import DEFAULTS, Tolerances
from .measures import (
    BITS,
    NATS,
    LogUnit,
    TypeClass,
    _mat,
    _mi_nats,
    _mi_variance_nats,
    _vec,
    product_distribution,
    strings_of_type,
)

# relative tolerance under which two likelihoods count as tied
TIE = 1e-12


class RateWindowError(ValueError):
    """The admissible interval for the intermediate rate is empty."""

    def __init__(self, lower: float, upper: float, unit: LogUnit):
        self.lower, self.upper, self.unit = lower, upper, unit
        super().__init__(f"empty rate window [{lower:.6g}, {upper:.6g}] {unit.value}")


@dataclass(frozen=True)
class RateChoice:
    R: float
    lower: float
    upper: float
    delta_n: float
    gamma_n: float
    unit: str


def _slacks(w, p_x, t, p_s, r, n, scale):
    ln = math.log(n) if n > 1 else 0.0
    vt = _mi_variance_nats(_vec(p_s), _mat(t))
    vw = _mi_variance_nats(_vec(p_x), _mat(w))
    delta = scale * 2 * math.sqrt(ln * r * vt) / n ** 0.25
    gamma = scale * 2 * math.sqrt(ln * vw) / n ** 0.25
    return delta, gamma


def choose_rate(w, p_x, t, p_s, r: float, n: int, unit: LogUnit = NATS, *,
                slack_scale: float = 1.0) -> RateChoice:
    """Midpoint of ``[r I(P_S,T) + delta_n, I(P_X,W) - gamma_n]``.

    The slacks use the information variance at the given inputs.
    ``slack_scale`` multiplies both; 0 gives the first-order window.
    """
    unit = LogUnit.parse(unit)
    delta, gamma = _slacks(w, p_x, t, p_s, r, n, slack_scale)
    lo = r * _mi_nats(_vec(p_s), _mat(t)) + delta
    hi = _mi_nats(_vec(p_x), _mat(w)) - gamma
    if lo > hi:
        raise RateWindowError(unit.from_nats(lo), unit.from_nats(hi), unit)
    f = unit.from_nats
    return RateChoice(f(0.5 * (lo + hi)), f(lo), f(hi), f(delta), f(gamma), unit.value)


# ---------------------------------------------------------------- channel coding

@dataclass(frozen=True, eq=False)
class Codebook:
    codewords: np.ndarray  # (M, n) integer symbols
    p_x: np.ndarray
    seed: int | None = None

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def n(self) -> int:
        return self.codewords.shape[1]


def _generator(seed) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def sample_codebook(p_x, n: int, M: int, seed=None) -> Codebook:
    p = _vec(p_x)
    words = _generator(seed).choice(p.shape[0], size=(M, n), p=p)
    return Codebook(words.astype(np.int64), p.copy(), seed if isinstance(seed, int) else None)


def _digits(idx: np.ndarray, base: int, n: int) -> np.ndarray:
    """Rows of base-``base`` digits, most significant first."""
    powers = base ** np.arange(n - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % base


def _likelihoods(w: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    out = np.ones((xs.shape[0], ys.shape[0]))
    for i in range(xs.shape[1]):
        out *= w[xs[:, i][:, None], ys[:, i][None, :]]
    return out


def _chunks(total: int, rows: int, budget: int = 1 << 22):
    step = max(1, budget // max(rows, 1))
    for start in range(0, total, step):
        yield np.arange(start, min(total, start + step))


def coding_error_exact(w, cb: Codebook, *, tol: Tolerances = DEFAULTS) -> float:
    """Average ML error of a fixed codebook by enumerating every output string.

    Likelihoods within relative ``1e-12`` of the maximum are tied and the
    lowest message index wins.
    """
    w = _mat(w)
    ny = w.shape[1] ** cb.n
    if ny > tol.enumeration_outputs:
        raise ValueError(f"{ny} output strings exceed the enumeration cap; use monte_carlo mode")
    correct = 0.0
    for cols in _chunks(ny, cb.M):
        lik = _likelihoods(w, cb.codewords, _digits(cols, w.shape[1], cb.n))
        best = lik.max(axis=0)
        winner = np.argmax(lik >= best * (1 - TIE), axis=0)
        correct += lik[winner, np.arange(cols.size)].sum()
    return float(min(1.0, max(0.0, 1.0 - correct / cb.M)))


def coding_error_mc(w, cb: Codebook, trials: int, seed=None) -> float:
    """Monte Carlo estimate of the ML error of a fixed codebook."""
    w = _mat(w)
    rng = _generator(seed)
    msgs = rng.integers(cb.M, size=trials)
    cum = np.cumsum(w, axis=1)
    sent = cb.codewords[msgs]
    u = rng.random(sent.shape)
    ys = (u[..., None] > cum[sent]).sum(axis=-1)
    ys = np.minimum(ys, w.shape[1] - 1)
    errors = 0
    for k in range(trials):
        lik = _likelihoods(w, cb.codewords, ys[k][None, :])[:, 0]
        winner = int(np.argmax(lik >= lik.max() * (1 - TIE)))
        errors += winner != msgs[k]
    return errors / trials


def random_coding_error_exact(w, p_x, n: int, M: int, *, tol: Tolerances = DEFAULTS) -> float:
    """ML error averaged over i.i.d. ``P_X^n`` codebooks of size ``M``.

    For an output string, let ``a`` and ``b`` be the probabilities that an
    independent random codeword beats or ties the transmitted one.  Message
    ``i`` is decoded correctly with probability ``(1-a-b)^{i-1} (1-a)^{M-i}``;
    the sum over ``i`` is ``((1-a)^M - (1-a-b)^M) / b``.
    """
    w, p = _mat(w), _vec(p_x)
    nx, ny = w.shape[0] ** n, w.shape[1] ** n
    if nx * ny > tol.product_entries:
        raise ValueError(f"{nx}x{ny} likelihood table exceeds the cap {tol.product_entries}")
    pxn = product_distribution(p, n).probs
    keep = np.flatnonzero(pxn > 0)
    xs = _digits(keep, w.shape[0], n)
    pk = pxn[keep]
    correct = 0.0
    for cols in _chunks(ny, keep.size):
        lik = _likelihoods(w, xs, _digits(cols, w.shape[1], n))
        order = np.argsort(-lik, axis=0, kind="stable")
        v = np.take_along_axis(lik, order, axis=0)
        m = pk[order]
        start = np.ones_like(v, dtype=bool)
        start[1:] = v[1:] < v[:-1] * (1 - TIE)
        end = np.ones_like(start)
        end[:-1] = start[1:]
        cum = np.cumsum(m, axis=0)
        before = np.maximum.accumulate(np.where(start, cum - m, -np.inf), axis=0)
        upto = np.minimum.accumulate(np.where(end, cum, np.inf)[::-1], axis=0)[::-1]
        a = np.clip(before, 0.0, 1.0)
        b = np.clip(upto - before, 1e-300, 1.0)
        wgt = np.clip(1.0 - a, 1e-300, 1.0)
        # ((1-a)^M - (1-a-b)^M) / b without cancellation
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.clip(b / wgt, 0.0, 1.0)
            s = wgt ** M * -np.expm1(M * np.log1p(-ratio)) / b
        s = np.where(ratio >= 1.0, wgt ** M / b, s)
        correct += float(np.sum(m * v * s)) / M
    return float(min(1.0, max(0.0, 1.0 - correct)))


# ---------------------------------------------------------------- channel simulation

def _row_product(t: np.ndarray, s_string) -> np.ndarray:
    out = np.ones(1)
    for s in s_string:
        out = np.kron(out, t[s])
    return out


def message_count(R: float, n: int, unit: LogUnit = NATS, tol: Tolerances = DEFAULTS) -> int:
    """``b^{ceil(R n)}`` messages (floored) with ``b`` the base of ``unit``, capped."""
    unit = LogUnit.parse(unit)
    units = max(0, math.ceil(R * n - 1e-9))
    cap = 2 ** tol.codebook_cap_log2
    if unit is BITS:
        return 2 ** min(units, tol.codebook_cap_log2)
    if units * unit.to_nats(1.0) >= math.log(cap):
        return cap
    return max(1, math.floor(math.exp(units * unit.to_nats(1.0)) + 1e-9))


@dataclass(frozen=True, eq=False)
class SimBuild:
    row: np.ndarray          # NS channel row over Z^k
    target: np.ndarray       # T^k(. | s)
    p_z: np.ndarray          # P_Z^k
    cap: float
    good: np.ndarray
    alpha_mix: float
    tv_error: float
    M: int
    n: int
    s_string: tuple


def build_simulation(t, s_string, R: float, n: int, p_z, *, unit: LogUnit = NATS,
                     M: int | None = None, tol: Tolerances = DEFAULTS) -> SimBuild:
    """Capped channel ``T~`` with every entry at most ``c P_Z^k``.

    ``R`` is in ``unit`` per use of ``W``; ``M`` overrides the message count.
    """
    t = _mat(t)
    s_string = tuple(int(s) for s in s_string)
    k = len(s_string)
    if t.shape[1] ** k > tol.enumeration_outputs:
        raise ValueError("output alphabet of the target block exceeds the enumeration cap")
    M = message_count(R, n, unit, tol) if M is None else int(M)
    c = M / n
    if c < 1:
        raise ValueError(f"cap c = M/n = {c:.4g} < 1: too few messages for n = {n}")
    target = _row_product(t, s_string)
    pz = product_distribution(_vec(p_z), k).probs
    cp = c * pz
    good = target <= cp
    denom = cp[good].sum() - target[good].sum()
    alpha = 1.0 if abs(denom) <= 1e-15 else (c - 1) / denom
    alpha = min(1.0, max(0.0, alpha))
    row = np.where(good, alpha * target + (1 - alpha) * cp, cp)
    row = row / row.sum()
    err = float(np.maximum(target - cp, 0.0).sum())
    return SimBuild(row, target, pz, c, good, alpha, err, M, n, s_string)


@dataclass
class RoundingResult:
    mode: str
    eps_rounding: float
    row: np.ndarray | None = None
    tv_to_target: float | None = None
    halfwidth: float | None = None

    def __iter__(self):
        return iter((self.row, self.eps_rounding))


def _rejection_parts(sim: SimBuild):
    q = 1.0 / sim.cap
    rho = (1.0 - q) ** sim.M
    rej = None if q >= 1 else np.maximum(sim.p_z - sim.row * q, 0.0) / (1.0 - q)
    return q, rho, rej


def sr_rounding(sim: SimBuild, M: int | None = None, seed=None, *, mode: str = "analytic",
                lists: int = 2000, tol: Tolerances = DEFAULTS) -> RoundingResult:
    """Round the capped channel to rejection sampling with ``M`` shared candidates.

    ``analytic`` returns the guarantee ``e^{-n}``; ``exact`` gives the closed
    form ``(1-rho) T~ + rho Rej`` with ``rho = (1 - 1/c)^M``; ``empirical``
    averages the exact per-list channels of ``lists`` sampled candidate lists.
    """
    M = sim.M if M is None else int(M)
    if M < 1:
        raise ValueError("need at least one candidate")
    if mode == "analytic":
        return RoundingResult("analytic", math.exp(-sim.n))
    if mode == "exact":
        q = 1.0 / sim.cap
        rho = (1.0 - q) ** M
        row = sim.row.copy()
        if rho > 0:
            rej = np.maximum(sim.p_z - sim.row * q, 0.0) / (1.0 - q)
            row = (1 - rho) * sim.row + rho * rej
        return RoundingResult("exact", 0.5 * float(np.abs(row - sim.row).sum()), row,
                              0.5 * float(np.abs(row - sim.target).sum()))
    if mode != "empirical":
        raise ValueError(f"unknown rounding mode {mode!r}")
    if M > tol.rounding_max_candidates:
        raise ValueError(f"{M} candidates exceed the cap {tol.rounding_max_candidates}")
    rng = _generator(seed)
    accept = np.clip(sim.row / (sim.cap * np.where(sim.p_z > 0, sim.p_z, 1.0)), 0.0, 1.0)
    nz = sim.p_z.shape[0]
    total = np.zeros(nz)
    total_sq = np.zeros(nz)
    for _ in range(lists):
        cand = rng.choice(nz, size=M, p=sim.p_z)
        a = accept[cand]
        survive = np.concatenate([[1.0], np.cumprod(1.0 - a)])
        probs = a * survive[:-1]
        probs[-1] += survive[-1]
        per = np.zeros(nz)
        np.add.at(per, cand, probs)
        total += per
        total_sq += per * per
    mean = total / lists
    var = np.maximum(total_sq / lists - mean ** 2, 0.0)
    half = 0.5 * float(np.sum(1.96 * np.sqrt(var) / math.sqrt(lists)))
    return RoundingResult("empirical", 0.5 * float(np.abs(mean - sim.row).sum()), mean,
                          0.5 * float(np.abs(mean - sim.target).sum()), half)


def end_to_end_row(sim: SimBuild, sr_row: np.ndarray, eps_coding: float) -> np.ndarray:
    """Output law when a decoding error picks a uniformly random other candidate.

    A shared random relabelling of messages makes the wrong index uniform
    among the other ``M - 1``.  Candidates before the accepted one were
    rejected (law ``Rej``); later ones are fresh ``P_Z^k`` draws.
    """
    M = sim.M
    if M == 1 or eps_coding == 0:
        return sr_row
    q = 1.0 / sim.cap
    j = np.arange(1, M + 1)
    pj = q * (1 - q) ** (j - 1)
    pj[-1] = (1 - q) ** (M - 1)
    w_rej = float(np.sum(pj * (j - 1)) / (M - 1))
    rej = sim.p_z if q >= 1 else np.maximum(sim.p_z - sim.row * q, 0.0) / (1.0 - q)
    wrong = w_rej * rej + (1 - w_rej) * sim.p_z
    return (1 - eps_coding) * sr_row + eps_coding * wrong


# ---------------------------------------------------------------- pipeline

@dataclass
class ProtocolReport:
    n: int
    k: int
    r: float
    mode: str
    R: float
    R_effective: float
    window: tuple
    delta_n: float
    gamma_n: float
    M: int
    cap: float
    alpha_mix: float
    eps_coding: float
    eps_simulation: float
    eps_rounding: float
    eps_total: float
    eps_end_to_end: float | None
    input_type: tuple
    input_string: tuple
    unit: str
    rounding_halfwidth: float | None = None
    seed: int | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["input_type"] = list(self.input_type)
        d["input_string"] = list(self.input_string)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ProtocolReport":
        d = dict(d)
        for key in ("window", "input_type", "input_string"):
            d[key] = tuple(d[key])
        return cls(**d)


def round_type(p_s, k: int) -> TypeClass:
    """Largest-remainder rounding of ``k * P_S`` to integer counts."""
    p = _vec(p_s)
    raw = p * k
    counts = np.floor(raw).astype(int)
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[: k - counts.sum()]] += 1
    return TypeClass(tuple(counts.tolist()))


def run_pipeline(w, t, r: float, n: int, p_x, p_s, seed=None, mode: str = "exact", *,
                 unit: LogUnit = NATS, slack_scale: float = 1.0, trials: int = 2000,
                 tol: Tolerances = DEFAULTS) -> ProtocolReport:
    """Run rate choice, coding, simulation and rounding for one blocklength.

    ``exact`` uses the ensemble ML error of a random ``P_X^n`` code (the code
    is part of the shared randomness) and the analytic rounding bound;
    ``monte_carlo`` (alias ``mc``) samples one codebook and ``trials``
    candidate lists.
    """
    mode = {"mc": "monte_carlo"}.get(mode, mode)
    if mode not in ("exact", "monte_carlo"):
        raise ValueError(f"unknown mode {mode!r}")
    unit = LogUnit.parse(unit)
    w, t = _mat(w), _mat(t)
    rc = choose_rate(w, p_x, t, p_s, r, n, unit, slack_scale=slack_scale)
    M = message_count(rc.R, n, unit, tol)
    k = math.ceil(r * n - 1e-12)
    if k < 1:
        raise ValueError("the target block is empty (r * n rounds to 0)")
    ss = np.random.SeedSequence(seed)
    code_seed, round_seed = ss.spawn(2)

    typ = round_type(p_s, k)
    pz = typ.empirical().probs @ t
    worst = None
    for s in strings_of_type(typ):
        sim = build_simulation(t, s, 0.0, n, pz, M=M, tol=tol)
        if worst is None or sim.tv_error > worst.tv_error:
            worst = sim

    if mode == "exact":
        eps_coding = random_coding_error_exact(w, p_x, n, M, tol=tol)
        rounding = sr_rounding(worst, mode="analytic")
        sr_row = sr_rounding(worst, mode="exact").row
        half = None
    else:
        cb = sample_codebook(p_x, n, M, code_seed)
        if w.shape[1] ** n <= tol.enumeration_outputs:
            eps_coding = coding_error_exact(w, cb, tol=tol)
        else:
            eps_coding = coding_error_mc(w, cb, trials, code_seed)
        rounding = sr_rounding(worst, seed=round_seed, mode="empirical", lists=trials, tol=tol)
        sr_row = rounding.row
        half = rounding.halfwidth
    out = end_to_end_row(worst, sr_row, eps_coding)
    e2e = 0.5 * float(np.abs(out - worst.target).sum())
    total = eps_coding + worst.tv_error + rounding.eps_rounding
    f = unit.from_nats
    return ProtocolReport(
        n=n, k=k, r=float(r), mode=mode, R=rc.R, R_effective=f(math.log(M) / n),
        window=(rc.lower, rc.upper), delta_n=rc.delta_n, gamma_n=rc.gamma_n, M=M, cap=worst.cap,
        alpha_mix=float(worst.alpha_mix), eps_coding=eps_coding, eps_simulation=worst.tv_error,
        eps_rounding=rounding.eps_rounding, eps_total=total, eps_end_to_end=e2e,
        input_type=typ.counts, input_string=worst.s_string, unit=unit.value,
        rounding_halfwidth=half, seed=seed if isinstance(seed, int) else None)


def x_marginal(p_x, n: int, M: int, cap: float) -> np.ndarray:
    """Law of the transmitted codeword, averaged over the shared randomness.

    The selected index ``J`` depends only on the candidate list, and every
    codeword is an independent ``P_X^n`` draw, so the mixture over ``J``
    reproduces ``P_X^n``.
    """
    q = 1.0 / cap
    j = np.arange(1, M + 1)
    pj = q * (1 - q) ** (j - 1)
    pj[-1] = (1 - q) ** (M - 1)
    law = product_distribution(p_x, n).probs
    return np.sum(pj[:, None] * law[None, :], axis=0)


def codebook_x_marginal(cb: Codebook, cap: float) -> np.ndarray:
    """Transmitted-codeword law for one fixed codebook (index mixture over ``J``)."""
    M = cb.M
    q = 1.0 / cap
    j = np.arange(1, M + 1)
    pj = q * (1 - q) ** (j - 1)
    pj[-1] = (1 - q) ** (M - 1)
    X = int(cb.p_x.shape[0])
    idx = (cb.codewords * (X ** np.arange(cb.n - 1, -1, -1))[None, :]).sum(axis=1)
    out = np.zeros(X ** cb.n)
    np.add.at(out, idx, pj)
    return out


__all__ = [
    "RateWindowError", "RateChoice", "choose_rate", "Codebook", "sample_codebook",
    "coding_error_exact", "coding_error_mc", "random_coding_error_exact", "SimBuild",
    "build_simulation", "RoundingResult", "sr_rounding", "end_to_end_row", "ProtocolReport",
    "run_pipeline", "round_type", "message_count", "x_marginal", "codebook_x_marginal",
]
