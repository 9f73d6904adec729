"""Randomised property suites for the inequalities the exponent bounds rest on.

Each suite draws its instances from a Philox generator, so a ``(suite, trials,
seed)`` triple reproduces the same instances.  A violation records the
serialised inputs together with both sides of the inequality.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exponents import CapacityProfile
from .measures import (
    ConvergenceWarning,
    augustin,
    dmax_smooth,
    fidelity,
    kl,
    product_distribution,
    renyi,
)

SLACK = 1e-8


@dataclass
class CheckResult:
    suite: str
    trials: int
    seed: int | None
    violations: int = 0
    max_excess: float = -math.inf
    first_violation: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, lhs: float, rhs: float, inputs: dict, slack: float) -> None:
        """Register the claim ``lhs <= rhs``."""
        excess = lhs - rhs
        if math.isnan(excess):
            excess = 0.0 if lhs == rhs else math.inf
        self.max_excess = max(self.max_excess, excess)
        if excess > slack:
            self.violations += 1
            if self.first_violation is None:
                self.first_violation = {"lhs": lhs, "rhs": rhs, "inputs": _plain(inputs)}

    def to_json(self) -> dict:
        return {"suite": self.suite, "trials": self.trials, "seed": self.seed,
                "passed": self.passed, "violations": self.violations,
                "max_excess": self.max_excess, "first_violation": self.first_violation}


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _dist(rng: np.random.Generator, k: int, sparse: float = 0.2) -> np.ndarray:
    """Dirichlet draw; with probability ``sparse`` some entries are zeroed."""
    p = rng.dirichlet(np.ones(k))
    if k > 1 and rng.random() < sparse:
        mask = rng.random(k) < 0.3
        if mask.all():
            mask[rng.integers(k)] = False
        p[mask] = 0.0
        p /= p.sum()
    return p


def _channel(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return np.array([_dist(rng, cols, sparse=0.1) for _ in range(rows)])


# ---------------------------------------------------------------- suites

def reverse_chernoff(trials: int = 100, seed=None, slack: float = SLACK) -> CheckResult:
    """``sum min(P,Q) >= (1-2 eta) exp(-max(Dmax^eta(V||P), Dmax^eta(V||Q)))``.

    The infimum over ``alpha in (0,1)`` of an exponential of an affine
    function is the smaller endpoint value, so it is taken in closed form.
    """
    res = CheckResult("reverse-chernoff", trials, seed)
    rng = _rng(seed)
    for _ in range(trials):
        k = int(rng.integers(2, 7))
        p, q, v = _dist(rng, k), _dist(rng, k), _dist(rng, k)
        eta = float(rng.uniform(0.0, 0.45))
        a, b = dmax_smooth(v, p, eta), dmax_smooth(v, q, eta)
        rhs = (1 - 2 * eta) * math.exp(-max(a, b))
        res.record(rhs, float(np.minimum(p, q).sum()), {"P": p, "Q": q, "V": v, "eta": eta}, slack)
    return res


def smooth_max_iid(trials: int = 100, seed=None, slack: float = SLACK) -> CheckResult:
    """``Dmax^eta(p^n||q^n) <= n D_a(p||q) + g(eta)/(a-1)`` at ``a = 1 + 1/sqrt(n)``.

    ``g(eta) = -log(1 - sqrt(1 - eta^2))``; this is the explicit bound behind
    the ``n D(p||q) + O(sqrt n)`` statement.
    """
    res = CheckResult("smooth-max-iid", trials, seed)
    rng = _rng(seed)
    for i in range(trials):
        n = (1, 2, 4, 8)[i % 4]
        p = rng.dirichlet(np.ones(2))
        q = rng.dirichlet(np.ones(2))
        eta = float(rng.uniform(0.01, 0.9))
        a = 1 + 1 / math.sqrt(n)
        g = -math.log(1 - math.sqrt(1 - eta * eta))
        lhs = dmax_smooth(product_distribution(p, n), product_distribution(q, n), eta)
        rhs = n * renyi(p, q, a) + g / (a - 1)
        res.record(lhs, rhs, {"p": p, "q": q, "n": n, "eta": eta}, slack)
    return res


def fidelity_kl(trials: int = 100, seed=None, slack: float = SLACK) -> CheckResult:
    """``-log F(p,q) <= D(v||p) + D(v||q)`` with ``F`` the squared Bhattacharyya overlap."""
    res = CheckResult("fidelity-kl", trials, seed)
    rng = _rng(seed)
    for i in range(trials):
        k = int(rng.integers(2, 7))
        p, q = _dist(rng, k), _dist(rng, k)
        if i % 4 == 0:
            # the minimising v, where the bound is tight
            v = np.sqrt(p * q)
            v = v / v.sum() if v.sum() > 0 else _dist(rng, k)
        else:
            v = _dist(rng, k)
        f = fidelity(p, q)
        lhs = math.inf if f <= 0 else -math.log(f)
        res.record(lhs, kl(v, p) + kl(v, q), {"p": p, "q": q, "v": v}, slack)
    return res


def dpi(trials: int = 100, seed=None, slack: float = SLACK) -> CheckResult:
    """Data processing under stochastic maps and under non-signaling strategies.

    Odd trials push ``p, q`` through a random stochastic matrix and compare KL
    and Rényi divergences at a random order.  Even trials build a
    shared-randomness strategy ``N`` (hence non-signaling) and check
    ``D(P_X T1 || P_X T2) >= D(P_S (N o T1) || P_S (N o T2))`` with
    ``P_X = sum_s P_S(s) N(x|s)``.
    """
    res = CheckResult("dpi", trials, seed)
    rng = _rng(seed)
    for i in range(trials):
        alpha = float(rng.choice([rng.uniform(0.05, 0.95), rng.uniform(1.05, 6.0)]))
        if i % 2:
            k, m = int(rng.integers(2, 7)), int(rng.integers(2, 7))
            p, q = _dist(rng, k), _dist(rng, k)
            mp = _channel(rng, k, m)
            inputs = {"p": p, "q": q, "map": mp, "alpha": alpha}
            res.record(kl(p @ mp, q @ mp), kl(p, q), inputs, slack)
            res.record(renyi(p @ mp, q @ mp, alpha), renyi(p, q, alpha), inputs, slack)
            continue
        S, X, Y, Z = (int(v) for v in rng.integers(2, 4, size=4))
        t1, t2 = _channel(rng, X, Y), _channel(rng, X, Y)
        ps = _dist(rng, S)
        lam = rng.dirichlet(np.ones(3))
        enc = [_channel(rng, S, X) for _ in lam]
        dec = [_channel(rng, Y, Z) for _ in lam]
        px = sum(l * ps @ e for l, e in zip(lam, enc))
        big1 = (px[:, None] * t1).ravel()
        big2 = (px[:, None] * t2).ravel()
        # (N o T)(z|s) = sum_l lam_l (e_l T d_l)(z|s)
        c1 = sum(l * e @ t1 @ d for l, e, d in zip(lam, enc, dec))
        c2 = sum(l * e @ t2 @ d for l, e, d in zip(lam, enc, dec))
        small1 = (ps[:, None] * c1).ravel()
        small2 = (ps[:, None] * c2).ravel()
        inputs = {"P_S": ps, "T1": t1, "T2": t2, "weights": lam, "encoders": enc,
                  "decoders": dec, "alpha": alpha}
        res.record(kl(small1, small2), kl(big1, big2), inputs, slack)
        res.record(renyi(small1, small2, alpha), renyi(big1, big2, alpha), inputs, slack)
    return res


def _f(profile: CapacityProfile, a: float, d: float) -> float:
    if d == 0:
        return 0.0
    return d * profile.one((1 - a) / (1 + d - a))


def _g(px: np.ndarray, w: np.ndarray, a: float, d: float) -> float:
    if d == 0:
        return 0.0
    return -d * augustin(px, w, a / (a - d))


def concavity(trials: int = 100, seed=None, slack: float = SLACK,
              mesh: int = 20) -> CheckResult:
    """Midpoint concavity of the two auxiliary maps on ``{0 <= delta <= alpha <= 1}``.

    ``f(a, d) = d * I_{(1-a)/(1+d-a)}(T)`` (Rényi capacity) and
    ``g(a, d) = -d * I^A_{a/(a-d)}(P_X, W)`` (Augustin information).  Points
    come from a triangular grid of step ``1/mesh`` restricted to
    ``d <= 0.9 a`` so the Augustin order stays at most 10.
    """
    res = CheckResult("concavity", trials, seed)
    rng = _rng(seed)
    grid = [(i / mesh, j / mesh) for i in range(1, mesh + 1) for j in range(0, i + 1)
            if j <= 0.9 * i and (i + j) % 2 == 0]
    # (i + j) even keeps every midpoint on the grid
    grid = np.array(grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for _ in range(trials):
            t = _channel(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)))
            w = _channel(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)))
            px = rng.dirichlet(np.ones(w.shape[0]))
            prof = CapacityProfile(t)
            i, j = rng.choice(len(grid), size=2, replace=False)
            (a1, d1), (a2, d2) = grid[i], grid[j]
            am, dm = 0.5 * (a1 + a2), 0.5 * (d1 + d2)
            inputs = {"T": t, "W": w, "P_X": px, "p1": [a1, d1], "p2": [a2, d2]}
            fm = _f(prof, am, dm)
            res.record(0.5 * (_f(prof, a1, d1) + _f(prof, a2, d2)), fm, inputs, slack)
            gm = _g(px, w, am, dm)
            res.record(0.5 * (_g(px, w, a1, d1) + _g(px, w, a2, d2)), gm, inputs, slack)
    return res


SUITES = {
    "reverse-chernoff": reverse_chernoff,
    "smooth-max-iid": smooth_max_iid,
    "fidelity-kl": fidelity_kl,
    "dpi": dpi,
    "concavity": concavity,
}


def run_suite(name: str, trials: int = 100, seed=None, slack: float = SLACK) -> CheckResult:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return fn(trials, seed, slack)
