"""Benchmark the numba backend against the pure-numpy fallback.

The backend is frozen at import time, so each timing runs in a fresh
subprocess with PROPA_BACKEND set.  Usage:

    python benchmarks/bench_backend.py [--length 400] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORK = r"""
import json, os, time
import propa
from propa._backend import pair_sup_parallel

length = %(length)d
space = propa.gen_path(length)
P = propa.mix_kernels([0.5, 0.25, 0.25],
                      [propa.build_ball_witness(space, r) for r in (2, 24, 40)])

t0 = time.perf_counter()
Pn = propa.power(P, 8)
t_power = time.perf_counter() - t0

core = space.core(60)
xs, ys = [], []
for i, x in enumerate(core):
    for y in core[i + 1:]:
        if space.d(x, y) < 24:
            xs.append(x); ys.append(y)
import numpy as np
xs = np.array(xs); ys = np.array(ys)
t0 = time.perf_counter()
sup, _ = pair_sup_parallel(xs, ys, Pn.indptr, Pn.indices, Pn.data)
t_sup = time.perf_counter() - t0

print(json.dumps({"backend": propa.BACKEND, "power8_s": t_power,
                  "pair_sup_s": t_sup, "sup": sup}))
"""


def time_backend(backend, length, repeat):
    env = dict(os.environ, PROPA_BACKEND=backend)
    best = None
    for _ in range(repeat):
        out = subprocess.run([sys.executable, "-c", WORK % {"length": length}],
                             env=env, capture_output=True, text=True, check=True)
        res = json.loads(out.stdout.strip().splitlines()[-1])
        if best is None or res["power8_s"] + res["pair_sup_s"] < best["power8_s"] + best["pair_sup_s"]:
            best = res
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--length", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    results = {}
    for backend in ("numba", "numpy"):
        res = time_backend(backend, args.length, args.repeat)
        results[backend] = res
        print(f"{backend:>6}: power^8 {res['power8_s'] * 1e3:8.1f} ms   "
              f"pair sup {res['pair_sup_s'] * 1e3:8.1f} ms   sup={res['sup']:.12f}")
    if abs(results["numba"]["sup"] - results["numpy"]["sup"]) > 1e-12:
        raise SystemExit("backends disagree!")
    speedup = ((results["numpy"]["power8_s"] + results["numpy"]["pair_sup_s"])
               / (results["numba"]["power8_s"] + results["numba"]["pair_sup_s"]))
    print(f"numba speedup: {speedup:.1f}x (results agree to 1e-12)")


if __name__ == "__main__":
    main()
