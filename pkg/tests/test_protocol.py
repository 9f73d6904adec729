from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from interconvert import measures as m
from interconvert import protocol as P
from interconvert.measures import BITS, NATS

ID2 = m.identity(2)
U = [0.5, 0.5]


def test_choose_rate_identity_window():
    rc = P.choose_rate(ID2, U, ID2, U, 0.5, 100, BITS)
    assert (rc.lower, rc.upper) == pytest.approx((0.5, 1.0), abs=1e-12)
    assert rc.R == pytest.approx(0.75, abs=1e-12)
    assert rc.delta_n == 0.0 and rc.gamma_n == 0.0


def test_choose_rate_zero_variance_row_constant():
    w = m.constant_channel([0.3, 0.7], 2)
    with pytest.raises(P.RateWindowError) as err:
        P.choose_rate(w, U, ID2, U, 0.5, 50)
    assert err.value.upper == pytest.approx(0.0, abs=1e-15)


def test_choose_rate_infeasible_carries_endpoints():
    with pytest.raises(P.RateWindowError) as err:
        P.choose_rate(ID2, U, ID2, U, 2.0, 100, BITS)
    assert (err.value.lower, err.value.upper) == pytest.approx((2.0, 1.0))


def test_choose_rate_slacks_match_formula():
    w, t, n, r = m.bsc(0.05), m.bsc(0.3), 10 ** 8, 0.25
    rc = P.choose_rate(w, U, t, U, r, n, NATS)
    vt, vw = m.mi_variance(U, t), m.mi_variance(U, w)
    assert rc.delta_n == pytest.approx(2 * math.sqrt(math.log(n) * r * vt) / n ** 0.25)
    assert rc.gamma_n == pytest.approx(2 * math.sqrt(math.log(n) * vw) / n ** 0.25)


def _ml_error_oracle(w, words):
    # plain loops over every output string
    w = np.asarray(w)
    M, n = words.shape
    correct = 0.0
    for y in itertools.product(range(w.shape[1]), repeat=n):
        lik = [math.prod(w[x, b] for x, b in zip(word, y)) for word in words]
        best = max(lik)
        winner = next(i for i, v in enumerate(lik) if v >= best * (1 - 1e-12))
        correct += lik[winner]
    return 1 - correct / M


def test_coding_error_examples():
    distinct = P.Codebook(np.array([[0, 0], [1, 1], [0, 1]]), np.array(U))
    assert P.coding_error_exact(ID2, distinct) == 0.0
    same = P.Codebook(np.array([[0, 1, 1], [0, 1, 1]]), np.array(U))
    assert P.coding_error_exact(m.bsc(0.2), same) == pytest.approx(0.5, abs=1e-12)


def test_coding_error_matches_loop_oracle_and_is_deterministic():
    cb = P.sample_codebook(U, 8, 4, seed=12)
    assert np.array_equal(cb.codewords, P.sample_codebook(U, 8, 4, seed=12).codewords)
    w = m.bsc(0.1)
    val = P.coding_error_exact(w, cb)
    assert val == P.coding_error_exact(w, cb)
    assert val == pytest.approx(_ml_error_oracle(w.matrix, cb.codewords), abs=1e-12)


def test_coding_error_cap():
    from interconvert.config import Tolerances
    cb = P.sample_codebook(U, 6, 2, seed=0)
    with pytest.raises(ValueError, match="monte_carlo"):
        P.coding_error_exact(ID2, cb, tol=Tolerances(enumeration_outputs=16))


def test_random_coding_error_is_codebook_average():
    # enumerate every codebook of M words from X^n with its P_X^n probability
    w = np.array([[0.8, 0.2], [0.3, 0.7]])
    px = np.array([0.6, 0.4])
    n, M = 2, 3
    strings = list(itertools.product(range(2), repeat=n))
    probs = [math.prod(px[s] for s in x) for x in strings]
    avg = 0.0
    for idx in itertools.product(range(len(strings)), repeat=M):
        weight = math.prod(probs[i] for i in idx)
        avg += weight * _ml_error_oracle(w, np.array([strings[i] for i in idx]))
    assert P.random_coding_error_exact(w, px, n, M) == pytest.approx(avg, abs=1e-12)
    assert P.random_coding_error_exact(w, px, n, 1) == pytest.approx(0.0, abs=1e-12)


def test_coding_error_mc_close_to_exact():
    cb = P.sample_codebook(U, 6, 8, seed=3)
    exact = P.coding_error_exact(m.bsc(0.1), cb)
    est = P.coding_error_mc(m.bsc(0.1), cb, 4000, seed=5)
    assert abs(est - exact) < 4 * math.sqrt(exact * (1 - exact) / 4000) + 1e-3


def test_build_simulation_cap_dominates():
    sim = P.build_simulation(m.bsc(0.3), (0, 1), 0.0, 2, U, M=8)
    assert sim.good.all() and sim.tv_error == 0.0 and sim.alpha_mix == 1.0
    np.testing.assert_allclose(sim.row, sim.target, atol=1e-15)


def test_build_simulation_identity_hand_value():
    sim = P.build_simulation(ID2, (0, 1), 0.0, 1, U, M=2)
    assert sim.cap == 2.0
    oracle = sum(max(0.0, t - 2 * 0.25) for t in (0, 1, 0, 0))
    assert sim.tv_error == pytest.approx(oracle) == pytest.approx(0.5)


def test_build_simulation_invariants_random():
    rng = np.random.default_rng(8)
    t = np.array([rng.dirichlet(np.ones(3)) for _ in range(2)])
    pz = np.array([0.5, 0.5]) @ t
    sim = P.build_simulation(t, (0, 1, 1), 0.0, 3, pz, M=5)
    assert abs(sim.row.sum() - 1) <= 1e-12
    assert np.all(sim.row <= sim.cap * sim.p_z + 1e-15)
    assert 0 <= sim.alpha_mix <= 1
    assert sim.tv_error == pytest.approx(0.5 * np.abs(sim.row - sim.target).sum(), abs=1e-12)


def test_build_simulation_rejects_small_cap():
    with pytest.raises(ValueError, match="cap"):
        P.build_simulation(ID2, (0,), 0.0, 4, U, M=2)


def test_message_count_bases():
    assert P.message_count(0.75, 8, BITS) == 64
    assert P.message_count(0.5, 8, NATS) == math.floor(math.exp(4))
    assert P.message_count(10.0, 8, BITS) == 2 ** 12


def test_sr_rounding_analytic():
    sim = P.build_simulation(ID2, (0,), 0.0, 10, U, M=32)
    row, eps = P.sr_rounding(sim, mode="analytic")
    assert row is None and eps == pytest.approx(math.exp(-10)) == pytest.approx(4.54e-5, abs=1e-7)


def test_sr_rounding_empirical_c_one():
    t = m.bsc(0.2)
    sim = P.build_simulation(t, (0, 1), 0.0, 4, [0.5, 0.5], M=4)
    assert sim.cap == 1.0
    exact = P.sr_rounding(sim, mode="exact")
    np.testing.assert_array_equal(exact.row, sim.p_z)
    assert exact.tv_to_target == pytest.approx(sim.tv_error, abs=1e-15)
    # every list outputs its first candidate, so the estimate is an empirical P_Z
    res = P.sr_rounding(sim, seed=1, mode="empirical", lists=2000)
    assert abs(res.tv_to_target - sim.tv_error) <= res.halfwidth
    assert 0.5 * np.abs(res.row - sim.p_z).sum() <= res.halfwidth


def test_sr_rounding_empirical_identity_within_halfwidth():
    sim = P.build_simulation(ID2, (0, 1), 0.0, 32, U, M=64)
    exact = P.sr_rounding(sim, mode="exact")
    emp = P.sr_rounding(sim, seed=9, mode="empirical", lists=2000)
    assert abs(emp.tv_to_target - exact.tv_to_target) <= emp.halfwidth
    again = P.sr_rounding(sim, seed=9, mode="empirical", lists=2000)
    assert np.array_equal(emp.row, again.row)
    # the exact failure term never exceeds the analytic guarantee
    assert exact.eps_rounding <= math.exp(-sim.n)


def test_end_to_end_within_budget():
    rep = P.run_pipeline(m.bsc(0.05), m.bsc(0.3), 0.25, 8, U, U, seed=0, slack_scale=0)
    assert rep.eps_end_to_end <= rep.eps_total + 1e-12
    assert rep.eps_total <= rep.eps_coding + rep.eps_simulation + rep.eps_rounding + 1e-12


@pytest.mark.xfail(strict=True, reason="i.i.d. codebooks collide: ensemble coding error alone is about 0.24")
def test_identity_pipeline_small_total():
    rep = P.run_pipeline(ID2, ID2, 0.5, 8, U, U, seed=0)
    assert rep.eps_total < 0.01


def test_identity_pipeline_exact_stages():
    rep = P.run_pipeline(ID2, ID2, 0.5, 8, U, U, seed=0)
    assert rep.eps_simulation == 0.0
    assert rep.eps_rounding == pytest.approx(math.exp(-8))
    # noiseless channel: message i is decoded iff no earlier message shares its codeword
    N, M = 2 ** 8, rep.M
    oracle = 1 - sum((1 - 1 / N) ** i for i in range(M)) / M
    assert rep.eps_coding == pytest.approx(oracle, abs=1e-12)


def test_pipeline_determinism_and_json():
    a = P.run_pipeline(m.bsc(0.05), m.bsc(0.3), 0.25, 6, U, U, seed=4, mode="mc",
                       slack_scale=0, trials=200)
    b = P.run_pipeline(m.bsc(0.05), m.bsc(0.3), 0.25, 6, U, U, seed=4, mode="mc",
                       slack_scale=0, trials=200)
    assert a == b
    assert a.mode == "monte_carlo"
    assert P.ProtocolReport.from_json(a.to_json()) == a


def test_pipeline_infeasible():
    with pytest.raises(P.RateWindowError):
        P.run_pipeline(ID2, ID2, 2.0, 8, U, U)


def test_type_robustness():
    t = m.bsc(0.3)
    n, r = 8, 0.25
    rep = P.run_pipeline(m.bsc(0.05), t, r, n, U, U, seed=0, slack_scale=0)
    typ = m.TypeClass(rep.input_type)
    pz = typ.empirical().probs @ t.matrix
    base = P.build_simulation(t, rep.input_string, 0.0, n, pz, M=rep.M).tv_error
    s = list(rep.input_string)
    for i in range(len(s)):
        swapped = s.copy()
        swapped[i] = 1 - swapped[i]
        other = P.build_simulation(t, swapped, 0.0, n, pz, M=rep.M).tv_error
        assert abs(other - base) <= 0.1


def test_worst_string_is_type_invariant():
    t = m.bsc(0.3)
    typ = m.TypeClass((2, 1))
    pz = typ.empirical().probs @ t.matrix
    errs = {P.build_simulation(t, s, 0.0, 3, pz, M=6).tv_error for s in m.strings_of_type(typ)}
    assert max(errs) - min(errs) < 1e-15


def test_x_marginal_is_product():
    px = np.array([0.3, 0.7])
    law = P.x_marginal(px, 4, 16, 2.0)
    np.testing.assert_allclose(law, m.product_distribution(px, 4).probs, rtol=1e-14, atol=0)
    # averaging fixed codebooks over the shared randomness approaches the same law
    avg = np.mean([P.codebook_x_marginal(P.sample_codebook(px, 2, 4, s), 2.0)
                   for s in range(4000)], axis=0)
    np.testing.assert_allclose(avg, m.product_distribution(px, 2).probs, atol=0.02)


def test_round_type():
    assert P.round_type([0.5, 0.5], 3).counts in ((2, 1), (1, 2))
    assert sum(P.round_type([0.2, 0.3, 0.5], 7).counts) == 7
