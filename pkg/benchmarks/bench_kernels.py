"""Time the path kernels with numba and with the numpy fallback.

    python benchmarks/bench_kernels.py [--paths 10000] [--points 512] [--repeat 3]
"""
import argparse
import os
import time

import numpy as np

from orlicz_sup import kernels, mc_lab
from orlicz_sup.ou_model import OUModel


def best_of(fn, repeat):
    fn()  # warm-up, includes numba compilation
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def run(paths, points, repeat):
    m = OUModel(1.0, 1.0, 0.8, 0.9)
    batch = mc_lab.sample_ou_batch(m, points, paths, seed=1)
    f0 = np.zeros(points)
    w = np.full(points, 1.0 / points)
    jobs = {
        "sample_ou_batch": lambda: mc_lab.sample_ou_batch(m, points, paths, seed=1),
        "refine_batch": lambda: mc_lab.refine_batch(m, batch),
        "sup_abs_deviation": lambda: kernels.sup_abs_deviation(batch.values, f0),
        "averaged_deviation": lambda: kernels.averaged_deviation(batch.values, f0, w, 1.0),
    }
    out = {}
    for backend, flag in (("numba", "0"), ("numpy", "1")):
        os.environ["ORLICZ_DISABLE_NUMBA"] = flag
        out[backend] = {name: best_of(fn, repeat) for name, fn in jobs.items()}
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--points", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    res = run(args.paths, args.points, args.repeat)
    print(f"{'kernel':<20}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for name in res["numba"]:
        a, b = res["numba"][name], res["numpy"][name]
        print(f"{name:<20}{a:>10.4f}{b:>10.4f}{b / a:>9.1f}")


if __name__ == "__main__":
    main()
