from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from interconvert import measures as m
from interconvert.measures import BITS, NATS


def h2(d):
    return -d * math.log2(d) - (1 - d) * math.log2(1 - d)


def test_distribution_validation():
    with pytest.raises(m.ValidationError):
        m.Distribution([0.5, 0.6])
    with pytest.raises(m.ValidationError):
        m.Distribution([1.2, -0.2])
    d = m.Distribution([0.25, 0.75])
    assert d.alphabet_size == 2
    with pytest.raises(ValueError):
        d.probs[0] = 1.0


def test_channel_error_names_row():
    with pytest.raises(m.ValidationError, match="row 1"):
        m.Channel([[0.5, 0.5], [0.3, 0.3]])


def test_type_class():
    t = m.TypeClass((1, 3))
    assert t.n == 4
    np.testing.assert_allclose(t.empirical().probs, [0.25, 0.75])


def test_tv_examples():
    assert m.tv([0.5, 0.5], [0.5, 0.5]) == 0
    assert m.tv([1, 0], [0, 1]) == 1
    assert m.tv([0.7, 0.3], [0.4, 0.6]) == pytest.approx(0.3, abs=1e-15)


def test_fidelity_examples():
    p = [0.2, 0.3, 0.5]
    assert m.fidelity(p, p) == pytest.approx(1.0)
    assert m.fidelity([1, 0], [0, 1]) == 0
    oracle = (math.sqrt(0.45) + math.sqrt(0.05)) ** 2
    assert m.fidelity([0.5, 0.5], [0.9, 0.1]) == pytest.approx(oracle, abs=1e-14)
    assert oracle == pytest.approx(0.8, abs=1e-12)


def test_kl_examples():
    assert m.kl([0.3, 0.7], [0.3, 0.7]) == 0
    assert m.kl([1, 0], [0.5, 0.5], BITS) == pytest.approx(1.0)
    assert m.kl([0.5, 0.5], [1, 0]) == math.inf


def test_renyi_examples():
    for a in (0.3, 2.0, 7.0):
        assert m.renyi([0.4, 0.6], [0.4, 0.6], a) == pytest.approx(0.0, abs=1e-14)
    assert m.renyi([1, 0], [0.5, 0.5], 2.0, BITS) == pytest.approx(1.0)
    mpmath.mp.dps = 40
    oracle = float(-2 * mpmath.log(mpmath.sqrt(mpmath.mpf("0.35")) + mpmath.sqrt(mpmath.mpf("0.15")), 2))
    assert m.renyi([0.7, 0.3], [0.5, 0.5], 0.5, BITS) == pytest.approx(oracle, abs=1e-13)
    assert 0.055 < oracle < 0.065
    with pytest.raises(ValueError):
        m.renyi([0.5, 0.5], [0.5, 0.5], 1.0)
    assert m.renyi([0.5, 0.5], [1, 0], 2.0) == math.inf


def test_dmax_examples():
    assert m.dmax([0.3, 0.7], [0.3, 0.7]) == 0
    assert m.dmax([0.75, 0.25], [0.5, 0.5], BITS) == pytest.approx(math.log2(1.5))
    assert m.dmax([1, 0], [0, 1]) == math.inf


def _dmax_smooth_grid(p, q, eps, step=1e-3):
    # brute force over normalised p~ in the TV ball on a 2-point alphabet
    best = math.inf
    for a in np.arange(0, 1 + step / 2, step):
        pt = np.array([a, 1 - a])
        if 0.5 * np.abs(pt - p).sum() <= eps + 1e-12:
            with np.errstate(divide="ignore"):
                best = min(best, float(np.max(np.where(pt > 0, pt / q, 0))))
    return math.log2(best)


def test_dmax_smooth_examples():
    p, q = np.array([1.0, 0.0]), np.array([0.5, 0.5])
    oracle = _dmax_smooth_grid(p, q, 0.25)
    assert oracle == pytest.approx(math.log2(1.5), abs=1e-3)
    assert m.dmax_smooth(p, q, 0.25, BITS) == pytest.approx(oracle, abs=2e-3)
    assert m.dmax_smooth(p, q, 0.25, BITS) == pytest.approx(math.log2(1.5), abs=1e-8)
    assert m.dmax_smooth([0.75, 0.25], [0.5, 0.5], 0.0) == pytest.approx(m.dmax([0.75, 0.25], [0.5, 0.5]))
    assert m.dmax_smooth([0.3, 0.7], [0.3, 0.7], 0.2) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        m.dmax_smooth(p, q, 1.0)


def test_dmax_smooth_random_vs_grid():
    rng = np.random.default_rng(4)
    for _ in range(10):
        p, q = rng.dirichlet([1, 1]), rng.dirichlet([1, 1])
        eps = rng.uniform(0, 0.4)
        oracle = max(0.0, _dmax_smooth_grid(p, q, eps, 1e-4))
        assert m.dmax_smooth(p, q, eps, BITS) == pytest.approx(oracle, abs=1e-3)


def test_mi_examples():
    assert m.mi([0.5, 0.5], m.identity(2), BITS) == pytest.approx(1.0)
    assert m.mi([0.5, 0.5], m.bsc(0.25), BITS) == pytest.approx(1 - h2(0.25), abs=1e-12)
    assert m.mi([0.2, 0.8], m.constant_channel([0.3, 0.7], 2)) == pytest.approx(0.0, abs=1e-15)


def test_mi_is_min_over_output_grid():
    rng = np.random.default_rng(0)
    p, w = rng.dirichlet([1, 1]), np.array([rng.dirichlet([1, 1]) for _ in range(2)])
    joint = (p[:, None] * w).ravel()
    best = min(m.kl(joint, (p[:, None] * np.array([a, 1 - a])[None, :]).ravel())
               for a in np.arange(0.01, 1.0, 0.01))
    assert m.mi(p, w) <= best + 1e-12
    assert best - m.mi(p, w) < 1e-3


def test_sibson_examples():
    for a in (0.5, 2.0, 5.0):
        assert m.sibson([0.5, 0.5], m.identity(2), a, BITS) == pytest.approx(1.0)
    oracle = 1 + math.log2(0.25 ** 2 + 0.75 ** 2)
    assert oracle == pytest.approx(1 + math.log2(0.625))
    assert m.sibson([0.5, 0.5], m.bsc(0.25), 2.0, BITS) == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(0.321928, abs=1e-6)


def test_sibson_dominated_by_any_product_output():
    rng = np.random.default_rng(1)
    p = rng.dirichlet(np.ones(3))
    w = np.array([rng.dirichlet(np.ones(3)) for _ in range(3)])
    for a in (0.5, 2.0):
        s = m.sibson(p, w, a)
        joint = (p[:, None] * w).ravel()
        for _ in range(20):
            qy = rng.dirichlet(np.ones(3))
            assert s <= m.renyi(joint, (p[:, None] * qy[None, :]).ravel(), a) + 1e-12


def test_augustin_examples():
    for a in (0.4, 3.0):
        assert m.augustin([0.5, 0.5], m.identity(2), a, BITS) == pytest.approx(1.0, abs=1e-9)
    for a in (0.5, 2.0, 4.0):
        assert m.augustin([0.5, 0.5], m.bsc(0.2), a) == pytest.approx(
            m.sibson([0.5, 0.5], m.bsc(0.2), a), abs=1e-9)
    w = m.bsc(0.25)
    for a in (1 - 1e-4, 1 + 1e-4):
        assert abs(m.augustin([0.3, 0.7], w, a) - m.mi([0.3, 0.7], w)) <= 1e-3


def test_augustin_against_output_grid():
    rng = np.random.default_rng(2)
    p = rng.dirichlet([1, 1])
    w = np.array([rng.dirichlet([1, 1]) for _ in range(2)])
    for a in (0.5, 2.0):
        grid = min(sum(p[x] * m.renyi(w[x], [b, 1 - b], a) for x in range(2))
                   for b in np.linspace(1e-4, 1 - 1e-4, 20001))
        assert m.augustin(p, w, a) == pytest.approx(grid, abs=1e-7)


def test_renyi_capacity_examples():
    for k in (2, 3):
        for a in (0.3, 2.0):
            assert m.renyi_capacity(m.identity(k), a, BITS) == pytest.approx(math.log2(k), abs=1e-9)
    assert m.renyi_capacity(m.bsc(0.25), 2.0, BITS) == pytest.approx(1 + math.log2(0.625), abs=1e-9)


def test_renyi_capacity_is_sup_of_augustin():
    rng = np.random.default_rng(11)
    for _ in range(5):
        w = np.array([rng.dirichlet(np.ones(3)) for _ in range(3)])
        for a in (0.5, 2.0):
            cap = m.renyi_capacity(w, a)
            grid = m.simplex_grid(3, 30)
            best = max(m.augustin(p, w, a) for p in grid if p.min() > 0)
            assert best <= cap + 1e-6
            # the maximiser found by Arimoto attains the capacity as Augustin information
            fp = m.renyi_capacity(w, a, full=True)
            assert m.augustin(fp.argument, w, a) == pytest.approx(cap, abs=1e-6)


def test_renyi_capacity_monotone_and_additive():
    rng = np.random.default_rng(5)
    w = np.array([rng.dirichlet(np.ones(3)) for _ in range(3)])
    vals = [m.renyi_capacity(w, a) for a in (0.2, 0.5, 0.8, 1.5, 3.0, 8.0)]
    assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))
    w2 = m.product_channel(w, 2)
    for a in (0.5, 2.0):
        assert m.renyi_capacity(w2, a) == pytest.approx(2 * m.renyi_capacity(w, a), abs=1e-6)


def test_extreme_order_capacities():
    assert m.renyi_capacity_zero(m.identity(2), BITS) == pytest.approx(1.0)
    assert m.renyi_capacity_zero(m.bsc(0.1)) == 0.0
    assert m.renyi_capacity_inf(m.bsc(0.1), BITS) == pytest.approx(math.log2(1.8))


def test_capacity_examples():
    assert m.capacity(m.identity(2), BITS).value == pytest.approx(1.0)
    assert m.capacity(m.bsc(0.1), BITS).value == pytest.approx(1 - h2(0.1), abs=1e-9)
    assert m.capacity(m.constant_channel([0.2, 0.8], 3)).value == pytest.approx(0.0, abs=1e-12)


def test_mi_variance_examples():
    assert m.mi_variance([0.5, 0.5], m.identity(2)) == pytest.approx(0.0, abs=1e-15)
    assert m.mi_variance([0.3, 0.7], m.constant_channel([0.4, 0.6], 2)) == pytest.approx(0.0, abs=1e-15)
    # four-cell oracle
    w = np.array([[0.9, 0.1], [0.1, 0.9]])
    p = np.array([0.5, 0.5])
    py = p @ w
    cells = [(p[x] * w[x, y], math.log(w[x, y] / py[y])) for x in range(2) for y in range(2)]
    mean = sum(a * b for a, b in cells)
    oracle = sum(a * (b - mean) ** 2 for a, b in cells)
    assert m.mi_variance(p, w) == pytest.approx(oracle, abs=1e-14)
    assert m.mi_variance(p, w, BITS) == pytest.approx(oracle / math.log(2) ** 2, abs=1e-14)


def test_channel_variance_grid_bounds_capacity_point():
    w = m.bsc(0.1)
    assert m.channel_variance_grid(w) >= m.channel_variance(w) - 1e-12


def test_types():
    ts = m.enumerate_types(2, 2)
    assert [t.counts for t in ts] == [(2, 0), (1, 1), (0, 2)]
    assert m.type_class_size((1, 1)) == 2
    assert len(m.enumerate_types(4, 3)) == math.comb(6, 2)
    strings = m.strings_of_type(m.TypeClass((2, 1)))
    assert strings.shape == (3, 3)
    assert all(sorted(s) == [0, 0, 1] for s in strings.tolist())


def test_product_channel():
    w = m.bsc(0.1)
    np.testing.assert_array_equal(m.product_channel(w, 1).matrix, w.matrix)
    np.testing.assert_array_equal(m.product_channel(m.identity(2), 2).matrix, np.eye(4))
    assert m.product_channel(w, 2).matrix[0, 1] == pytest.approx(0.09)
    with pytest.raises(ValueError):
        m.product_channel(w, 20, cap=1 << 10)


def test_units_convert_at_boundary():
    p, q = [0.8, 0.2], [0.3, 0.7]
    assert m.kl(p, q, BITS) == pytest.approx(m.kl(p, q, NATS) / math.log(2))
    assert m.LogUnit.parse("bits") is BITS


def test_json_round_trip(tmp_path):
    w = m.bsc(0.2)
    m.dump(w, tmp_path / "w.json")
    assert np.array_equal(m.load_channel(tmp_path / "w.json").matrix, w.matrix)
    (tmp_path / "bad.json").write_text('{"rows": [[0.5, 0.5], [0.2, 0.2]]}')
    with pytest.raises(m.ValidationError, match="row 1"):
        m.load(tmp_path / "bad.json")
    (tmp_path / "junk.json").write_text("{nope")
    with pytest.raises(m.ValidationError):
        m.load(tmp_path / "junk.json")
