"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 16,64,256] [--repeat 5]

Per-kernel timings exclude JIT compilation (each kernel is warmed up
first). The end-to-end line runs one aggregation cell in a subprocess per
backend, with JASMINE_SWARM_DISABLE_NUMBA selecting the fallback.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from jasmine_swarm import _kernels

CELL = ("import time; from jasmine_swarm.experiments import AggregationParams, run_aggregation_cell;"
        "t=time.perf_counter(); run_aggregation_cell({n}, 0, {ticks}, AggregationParams());"
        "print(time.perf_counter()-t)")


def kernel_args(n, rng):
    pos = rng.uniform(0, 1.2, (n, 2))
    adj = _kernels.NUMPY.within_radius(pos, 0.25)
    motion = (pos, rng.uniform(0, 2 * np.pi, n), np.full(n, 0.1), rng.uniform(-1, 1, n),
              rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), 0.1, 0.06, 0.11, 1.2, 1.2, 0.018)
    light = (pos, np.array([[0.6, 0.6]]), np.ones(1), np.array([0.13]))
    return {"within_radius": (pos, 0.25), "component_labels": (adj,),
            "integrate_motion": motion, "light_intensity": light}


def best_time(fn, args, repeat):
    fn(*args)
    number = 20
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def end_to_end(n, ticks, disable):
    env = dict(os.environ)
    env.pop("JASMINE_SWARM_DISABLE_NUMBA", None)
    if disable:
        env["JASMINE_SWARM_DISABLE_NUMBA"] = "1"
    subprocess.run([sys.executable, "-c", CELL.format(n=n, ticks=5)], env=env, check=True,
                   capture_output=True)
    out = subprocess.run([sys.executable, "-c", CELL.format(n=n, ticks=ticks)], env=env,
                         check=True, capture_output=True, text=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,64,256")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--ticks", type=int, default=1500)
    args = ap.parse_args()
    if _kernels.NUMBA is None:
        sys.exit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>6}{'numpy us':>12}{'numba us':>12}{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, fargs in kernel_args(n, rng).items():
            a = best_time(getattr(_kernels.NUMPY, name), fargs, args.repeat)
            b = best_time(getattr(_kernels.NUMBA, name), fargs, args.repeat)
            print(f"{name:<18}{n:>6}{a * 1e6:>12.1f}{b * 1e6:>12.1f}{a / b:>9.1f}x")
    for n in (24, 48):
        a = end_to_end(n, args.ticks, disable=True)
        b = end_to_end(n, args.ticks, disable=False)
        print(f"aggregation cell n={n}, {args.ticks} ticks: numpy {a:.2f}s, numba {b:.2f}s, "
              f"{a / b:.1f}x")


if __name__ == "__main__":
    main()
