"""Compare the compiled and numpy backends of the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each case is checked for bit-identical output before it is timed.
"""

import argparse
import json
import timeit

import numpy as np

from aeta_lab import _kernels_py, kernels
from aeta_lab.keystream import LfsrSpec

CASES = [
    # (label, trials, symbols, bases, register length)
    ("known-plaintext sweep", 512, 12, 4, 8),
    ("one keystream period", 64, 128, 2, 8),
    ("wide key space", 32, 16, 4, 14),
    ("long ciphertext", 8, 1024, 16, 10),
]


def loglik_inputs(T, n, B, L, rng):
    W = rng.normal(size=(T, n, B))
    bad = (rng.random((T, n, B)) < 0.1).astype(np.uint8)
    KS = rng.integers(0, B, size=((1 << L) - 1, n)).astype(np.int32)
    return W, bad, KS


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    if kernels.BACKEND != "cython":
        print("compiled extension not available; only the numpy backend can be timed")
    rng = np.random.default_rng(0)
    rows = []
    for label, T, n, B, L in CASES:
        W, bad, KS = loglik_inputs(T, n, B, L, rng)
        a = kernels.key_loglik(W, bad, KS, backend="python")
        b = kernels.key_loglik(W, bad, KS, backend="cython")
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        t_py = best_of(lambda: kernels.key_loglik(W, bad, KS, backend="python"), args.repeat)
        t_cy = best_of(lambda: kernels.key_loglik(W, bad, KS, backend="cython"), args.repeat)
        rows.append({"kernel": "key_loglik", "case": label, "shape": [T, (1 << L) - 1, n],
                     "python_s": t_py, "cython_s": t_cy, "speedup": t_py / t_cy})

    for L in (16, 20):
        spec = LfsrSpec.default(L)
        t_py = best_of(lambda: _kernels_py.lfsr_period(L, spec.tap_mask, 1), 1)
        t_cy = best_of(lambda: kernels.lfsr_period(L, spec.tap_mask, 1), args.repeat)
        rows.append({"kernel": "lfsr_period", "case": f"L={L}", "shape": [(1 << L) - 1],
                     "python_s": t_py, "cython_s": t_cy, "speedup": t_py / t_cy})

    print(f"{'kernel':<12} {'case':<24} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for r in rows:
        print(f"{r['kernel']:<12} {r['case']:<24} {1e3 * r['python_s']:12.2f} "
              f"{1e3 * r['cython_s']:12.2f} {r['speedup']:8.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"backend": kernels.BACKEND, "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
