"""Acceptance criteria, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` and look for lines starting with
``CRITERION``.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from interconvert import checks
from interconvert import exponents as ex
from interconvert import measures as m
from interconvert import ns_lp
from interconvert import protocol as P
from interconvert.measures import BITS, NATS

RATES = (0.5, 1.0, 2.0)


def _pairs():
    rng = np.random.default_rng(20240601)
    out = []
    for _ in range(3):
        w = m.Channel(rng.dirichlet([1, 1], size=2))
        t = m.Channel(rng.dirichlet([1, 1], size=2))
        out.append((w, t))
    return out


def _report(capsys, number, ok, detail, started):
    with capsys.disabled():
        verdict = "PASS" if ok else "FAIL"
        print(f"\nCRITERION {number}: {verdict} ({time.perf_counter() - started:.1f}s) {detail}")
    assert ok, detail


def test_criterion_1_closed_form_vs_variational(capsys):
    start = time.perf_counter()
    worst_tv = worst_pur = 0.0
    for w, t in _pairs():
        for r in RATES:
            q = ex.ExponentQuery(w, t, r)
            worst_tv = max(worst_tv, abs(ex.sce(q).raw - ex.variational_sce(q, A=(0, 1)).value))
            pur = ex.sce(ex.ExponentQuery(w, t, r, ex.PUR)).raw
            half = ex.variational_sce(q, A=0.5).value
            worst_pur = max(worst_pur, abs(pur - 2 * half))
    elapsed = time.perf_counter() - start
    ok = worst_tv <= 2e-2 and worst_pur <= 2e-2 and elapsed <= 600
    _report(capsys, 1, ok, f"max|tv-var|={worst_tv:.2e} max|pur-2var(1/2)|={worst_pur:.2e}", start)


def test_criterion_2_finite_n_sandwich(capsys):
    start = time.perf_counter()
    worst = math.inf
    for w, t in _pairs():
        for r in RATES:
            bound = ex.sce(ex.ExponentQuery(w, t, r)).raw
            for n in (1, 2):
                k = math.ceil(r * n)
                opt = ns_lp.ns_success_tv(m.product_channel(w, n), m.product_channel(t, k)).optimum
                worst = min(worst, ns_lp.lp_exponent(opt, n) - bound)
    ident = []
    for r in (1.5, 2.0):
        for n in (1, 2):
            k = math.ceil(r * n)
            opt = ns_lp.ns_success_tv(m.product_channel(m.identity(2), n),
                                      m.product_channel(m.identity(2), k)).optimum
            ident.append(abs(opt - 2.0 ** -(k - n)))
    exact_r2 = abs(ex.sce(ex.ExponentQuery(m.identity(2), m.identity(2), 2.0, unit=BITS)).raw - 1.0)
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-9 and max(ident) <= 1e-9 and exact_r2 <= 1e-9 and elapsed <= 300
    _report(capsys, 2, ok, f"min(lp-sce)={worst:.3e} identity LP err={max(ident):.1e} "
            f"identity sce err={exact_r2:.1e}", start)


def test_criterion_3_reductions(capsys):
    start = time.perf_counter()
    w = m.bsc(0.1)
    positive = ex.reduction_coding(w, 1.0, "tv", BITS).raw
    c = m.capacity(w, BITS).value
    at_c = ex.reduction_coding(w, c, "tv", BITS).raw
    sim_err = max(abs(ex.reduction_simulation(m.identity(2), r, "tv", BITS).raw - (r - 1))
                  for r in (1.5, 2.0, 3.0))
    ok = positive > 0 and abs(at_c) <= 1e-3 and sim_err <= 1e-6
    _report(capsys, 3, ok, f"coding(R=1)={positive:.4f} coding(R=C)={at_c:.1e} "
            f"simulation err={sim_err:.1e}", start)


def test_criterion_4_lemma_suites(capsys):
    start = time.perf_counter()
    results = [checks.run_suite(name, trials=100, seed=2024, slack=1e-8) for name in checks.SUITES]
    bad = [r.suite for r in results if not r.passed]
    ok = not bad and all(r.trials >= 100 for r in results) and time.perf_counter() - start <= 120
    detail = ", ".join(f"{r.suite}:{r.violations}" for r in results)
    _report(capsys, 4, ok, f"violations {detail}", start)


def _grid_capacity(w, alpha, mesh=200):
    grid = m.simplex_grid(w.shape[0], mesh)
    wa = np.power(w, alpha)
    inner = np.power(grid @ wa, 1.0 / alpha).sum(axis=1)
    return float((alpha / (alpha - 1.0) * np.log(inner)).max())


def test_criterion_5_renyi_capacity(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(77)
    worst_grid = worst_add = 0.0
    for _ in range(5):
        w = rng.dirichlet(np.ones(3), size=3)
        for alpha in (0.5, 0.75, 2.0, 4.0):
            val = m.renyi_capacity(w, alpha)
            worst_grid = max(worst_grid, abs(val - _grid_capacity(w, alpha)))
            double = m.renyi_capacity(m.product_channel(w, 2), alpha)
            worst_add = max(worst_add, abs(double - 2 * val))
    elapsed = time.perf_counter() - start
    ok = worst_grid <= 1e-4 and worst_add <= 1e-6 and elapsed <= 300
    _report(capsys, 5, ok, f"max|arimoto-grid|={worst_grid:.2e} max additivity err={worst_add:.1e}",
            start)


def test_criterion_6_protocol_trend(capsys):
    # nats message base, no finite-n slacks: see README for why
    start = time.perf_counter()
    reports = [P.run_pipeline(m.bsc(0.05), m.bsc(0.3), 0.25, n, [0.5, 0.5], [0.5, 0.5],
                              seed=0, mode="exact", unit=NATS, slack_scale=0.0)
               for n in (6, 8, 10, 12)]
    tot = [r.eps_total for r in reports]
    monotone = all(b <= a + 1e-12 for a, b in zip(tot, tot[1:]))
    budget = all(r.eps_end_to_end <= r.eps_total + 1e-12 and
                 r.eps_total <= r.eps_coding + r.eps_simulation + r.eps_rounding + 1e-12
                 for r in reports)
    ok = monotone and tot[-1] < tot[0] and budget and time.perf_counter() - start <= 600
    _report(capsys, 6, ok, "eps_total " + " ".join(f"n={r.n}:{r.eps_total:.4f}" for r in reports),
            start)
