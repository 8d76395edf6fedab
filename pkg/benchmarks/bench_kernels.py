"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from wiae import _kernels_py as py

try:
    from wiae import _kernels as cy
except ImportError:
    cy = None


def cases(rng):
    u = rng.uniform(-1, 1, 21000)
    seq = rng.random(20000)
    samples = rng.normal(size=(200, 1000))
    obs = rng.normal(size=200)
    a, b = np.sort(rng.normal(size=20000)), np.sort(rng.normal(size=15000))
    return {
        "ar1_filter (21k)": lambda k: k.ar1_filter(u, 0.5),
        "markov2_chain (21k)": lambda k: k.markov2_chain(u * 0.5 + 0.5, 0.6, 0),
        "runs_up_down (20k)": lambda k: k.runs_up_down(seq),
        "crps_rows (200 x 1000)": lambda k: k.crps_rows(samples, obs),
        "wasserstein_sorted (20k vs 15k)": lambda k: k.wasserstein_sorted(a, b),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:34s} {t_py:10.2f} {'n/a':>10s} {'':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:34s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
