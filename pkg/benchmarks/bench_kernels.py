"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Times ``kernels.orbit`` (one new variable, N consecutive powers) and a full
``entangled_average`` with elimination width 2 on each available backend,
and checks that the backends agree.
"""

import argparse
import time

import numpy as np

from entangled_ergodic import kernels
from entangled_ergodic.engine import EntangledProblem, EntanglementMap, entangled_average
from entangled_ergodic.measure_space import FiniteMeasureSpace
from entangled_ergodic.operators import random_ds, volterra_discrete


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends() + [None]
    print(f"backends: {', '.join(kernels.available_backends())} (default {kernels.BACKEND}); 'auto' picks per call by shape")
    label = lambda b: b or "auto"

    cases = [(8, 1, 50000), (32, 1, 20000), (64, 1, 5000), (8, 64, 4096), (32, 16, 2048), (128, 4, 1024)]
    print(f"\n{'orbit d,M,N':<20}" + "".join(f"{label(b):>12}" for b in backends) + f"{'py/compiled':>13}")
    for d, M, N in cases:
        T = random_ds(d, 0, "signed_contraction").entries
        G = np.random.default_rng(0).normal(size=(M, d)) + 0j
        exps = np.arange(1, N + 1)
        res = {b: best_of(lambda b=b: kernels.orbit(T, G, exps, backend=b), args.repeat) for b in backends}
        ref = res["python"][1]
        for b in backends:
            assert np.allclose(res[b][1], ref, rtol=1e-12, atol=1e-13), b
        times = [res[b][0] for b in backends]
        speed = res["python"][0] / res["cython"][0] if "cython" in res else 1.0
        print(f"{f'{d},{M},{N}':<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times) + f"{speed:>12.2f}x")

    d = 16
    X = FiniteMeasureSpace.uniform(d)
    T = [random_ds(d, s, "signed_contraction", X) for s in range(3)]
    A = [volterra_discrete(d, X)] * 2
    p = EntangledProblem(T, A, EntanglementMap([1, 2, 1]))
    f = np.random.default_rng(1).normal(size=d)
    print(f"\n{'average width 2, N':<20}" + "".join(f"{label(b):>12}" for b in backends))
    for N in (64, 256):
        res = {b: best_of(lambda b=b: entangled_average(p, f, N, backend=b).values, args.repeat) for b in backends}
        for b in backends:
            assert np.allclose(res[b][1], res["python"][1], rtol=1e-12, atol=1e-13), b
        print(f"{N:<20}" + "".join(f"{res[b][0] * 1e3:>10.2f}ms" for b in backends))


if __name__ == "__main__":
    main()
