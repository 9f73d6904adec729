"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from interconvert import kernels


def _cases(rng):
    w = rng.dirichlet(np.ones(4), size=4)
    alphas = np.linspace(0.05, 0.95, 40)
    p = rng.dirichlet(np.ones(4))
    dw, iw, dt, it = (rng.random(n) for n in (400, 400, 300, 300))
    return {
        "sibson_capacity_batch (4x4, 40 orders)":
            lambda mod: mod.sibson_capacity_batch(w, alphas, 1e-9, 200000),
        "augustin_mi (4x4, alpha=0.6)":
            lambda mod: mod.augustin_mi(p, w, 0.6, 1e-12, 20000),
        "pair_min (400 x 300 candidates)":
            lambda mod: mod.pair_min(dw, iw, dt, it, 1.5, 0.2, 0.8),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    mods = kernels.backends()
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':42s}" + "".join(f"{name:>12s}" for name in mods) + "     speedup")
    for label, fn in cases.items():
        best = {}
        for name, mod in mods.items():
            fn(mod)  # warm up
            best[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        cols = "".join(f"{best[n] * 1e3:10.2f}ms" for n in mods)
        speed = f"{best['python'] / best['compiled']:10.1f}x" if "compiled" in best else "       n/a"
        print(f"{label:42s}{cols}{speed}")


if __name__ == "__main__":
    main()
