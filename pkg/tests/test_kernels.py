from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from interconvert import _pykernels, kernels

compiled = kernels.backends().get("compiled")
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _channels(seed, count=4, shape=(3, 4)):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        w = rng.dirichlet(np.ones(shape[1]), size=shape[0])
        w[rng.random(w.shape) < 0.15] = 0.0
        w[:, 0] += 1e-3
        out.append(w / w.sum(axis=1, keepdims=True))
    return out


@needs_ext
def test_sibson_batch_backends_agree():
    alphas = np.array([0.3, 0.5, 0.9, 1.5, 2.0, 6.0])
    for w in _channels(0):
        a = _pykernels.sibson_capacity_batch(w, alphas, 1e-10, 100000)
        b = compiled.sibson_capacity_batch(w, alphas, 1e-10, 100000)
        np.testing.assert_allclose(a[0], b[0], atol=1e-12)
        # the objective is flat near the achiever; only the value is certified
        np.testing.assert_allclose(a[1], b[1], atol=1e-6)
        assert np.array_equal(a[3], b[3])


@needs_ext
def test_augustin_backends_agree():
    rng = np.random.default_rng(1)
    for w in _channels(1):
        p = rng.dirichlet(np.ones(3))
        for alpha in (0.4, 0.8):
            a = _pykernels.augustin_mi(p, w, alpha, 1e-12, 20000)
            b = compiled.augustin_mi(p, w, alpha, 1e-12, 20000)
            assert a[0] == pytest.approx(b[0], abs=1e-12)
            np.testing.assert_allclose(a[1], b[1], atol=1e-10)


@needs_ext
def test_pair_min_backends_agree():
    rng = np.random.default_rng(2)
    dw, iw = rng.random(50), rng.random(50)
    dt, it = rng.random(40), rng.random(40)
    for lo, hi in ((0.0, 1.0), (0.5, 0.5), (0.2, 0.7)):
        a = _pykernels.pair_min(dw, iw, dt, it, 1.7, lo, hi)
        b = compiled.pair_min(dw, iw, dt, it, 1.7, lo, hi)
        assert a[0] == pytest.approx(b[0], abs=1e-14)
        assert a[1:] == b[1:]


def test_pair_min_brute_force():
    rng = np.random.default_rng(3)
    dw, iw, dt, it = (rng.random(6) for _ in range(4))
    r, lo, hi = 1.3, 0.25, 0.75
    best = min(
        max(al * (dw[i] + max(r * it[j] - iw[i], 0)) + (1 - al) * r * dt[j]
            for al in np.linspace(lo, hi, 101))
        for i in range(6) for j in range(6)
    )
    for mod in kernels.backends().values():
        assert mod.pair_min(dw, iw, dt, it, r, lo, hi)[0] == pytest.approx(best, abs=1e-12)


def test_fallback_selected_by_environment():
    env = dict(os.environ, INTERCONVERT_PURE_PYTHON="1")
    code = ("import interconvert as ic, interconvert.measures as m;"
            "print(ic.BACKEND, round(m.capacity(m.bsc(0.1)).value, 9))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out[0] == "python"
    h = -(0.1 * np.log(0.1) + 0.9 * np.log(0.9))
    assert float(out[1]) == pytest.approx(np.log(2) - h, abs=1e-8)
