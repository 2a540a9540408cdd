"""Compare the numba kernels with their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--skip-pipeline]

Kernel timings run both implementations in-process on identical inputs and
report the max abs difference.  The pipeline timing launches the same job in
two subprocesses, one with TOMOSTAB_DISABLE_NUMBA=1.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from tomostab import _accel
from tomostab.bodies import cube
from tomostab.config import cached_grid, refine_targets
from tomostab.sphere import gegenbauer_index

# first call pays JIT / cache loading; the second (fresh body, no memo hit) is warm
PIPELINE = ("from tomostab.bodies import cube; from tomostab.sections import intersection_certificate;"
            "import time; t=time.perf_counter(); c=intersection_certificate(cube(5));"
            "t1=time.perf_counter(); c=intersection_certificate(cube(5));"
            "print(t1-t, time.perf_counter()-t1, c.min_g)")


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def bench_zonal(n, res, L, repeat):
    g = cached_grid(n, res)
    half = g.half
    nodes = np.ascontiguousarray(g.nodes[half])
    wf = np.ascontiguousarray(2.0 * g.weights[half] * np.cos(g.nodes[half, 0]) ** 2)
    targets = np.ascontiguousarray(refine_targets(n))
    nu = gegenbauer_index(n)
    _accel._zonal_moments_numba(targets[:2], nodes[:10], wf[:10], L, nu)  # compile
    t_nb, a = best_of(lambda: _accel._zonal_moments_numba(targets, nodes, wf, L, nu), repeat)
    t_np, b = best_of(lambda: _accel._zonal_moments_numpy(targets, nodes, wf, L, nu), repeat)
    return f"zonal_moments n={n} res={res} L={L} ({len(targets)}x{len(nodes)})", t_nb, t_np, \
        float(np.abs(a - b).max() / np.abs(b).max())


def bench_contract(K, R, A, repeat):
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(A, K, K, R)) + 1j * rng.normal(size=(A, K, K, R))
    S = np.tril(rng.normal(size=(K, K)))[:, :, None] * rng.normal(size=(1, 1, A))
    _accel._contract_level_numba(Z[:1, :2, :2, :2].copy(), S[:2, :2, :1].copy())
    t_nb, a = best_of(lambda: _accel._contract_level_numba(Z, S), repeat)
    t_np, b = best_of(lambda: _accel._contract_level_numpy(Z, S), repeat)
    return f"contract_level K={K} R={R} targets={A}", t_nb, t_np, \
        float(np.abs(a - b).max() / np.abs(b).max())


def bench_radial(n, m, repeat):
    body = cube(n)
    rng = np.random.default_rng(0)
    u = rng.normal(size=(m, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    N, b = body.facets.normals, body.facets.offsets
    _accel._polytope_radial_numba(u[:2], N, b)
    t_nb, a = best_of(lambda: _accel._polytope_radial_numba(u, N, b), repeat)
    t_np, c = best_of(lambda: _accel._polytope_radial_numpy(u, N, b), repeat)
    return f"polytope_radial cube{n} m={m}", t_nb, t_np, float(np.abs(a - c).max())


def pipeline(disable):
    env = dict(os.environ, TOMOSTAB_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return float(out[0]), float(out[1]), float(out[2])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-pipeline", action="store_true")
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        sys.exit("numba unavailable (or disabled); nothing to compare")
    rows = [bench_zonal(3, 32, 16, args.repeat), bench_zonal(4, 20, 20, args.repeat),
            bench_contract(17, 17, 32, args.repeat), bench_contract(17, 17 * 17, 32, args.repeat),
            bench_radial(4, 200_000, args.repeat), bench_radial(6, 200_000, args.repeat)]
    print(f"{'kernel':58s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s} {'rel diff':>9s}")
    for name, t_nb, t_np, diff in rows:
        print(f"{name:58s} {t_nb:9.4f} {t_np:9.4f} {t_np / t_nb:8.1f} {diff:9.1e}")
    if not args.skip_pipeline:
        (c1, w1, g1), (c0, w0, g0) = pipeline(False), pipeline(True)
        for label, a, b in (("cold", c1, c0), ("warm", w1, w0)):
            print(f"{'intersection_certificate(cube5), ' + label:58s} {a:9.4f} {b:9.4f} "
                  f"{b / a:8.1f} {abs(g1 - g0):9.1e}")


if __name__ == "__main__":
    main()
