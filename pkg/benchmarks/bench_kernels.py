"""Compare the compiled and NumPy kernels, and time a full DD solve per backend.

    python benchmarks/bench_kernels.py [--sizes 32 64 128] [--iters 300]
"""

import argparse
import logging
import time
import warnings

from tvdd import bench
from tvdd._backend import BACKENDS
from tvdd.cli import ExperimentConfig, prepare
from tvdd.decomposition import Partition
from tvdd.solvers import OuterParams, dd_solve


def time_dd(task="denoise-l2", partition="4x4"):
    model, _ = prepare(ExperimentConfig(task))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        outer = OuterParams.for_variant(model.variant, max_outer=50, jump_tol=None, outer_tol=0.0)
    out = {}
    for name in BACKENDS:
        t0 = time.perf_counter()
        dd_solve(model, Partition.parse(partition, model.shape), outer, backend=name)
        out[name] = time.perf_counter() - t0
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--iters", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    logging.getLogger("tvdd").setLevel(logging.ERROR)

    print(bench.format_table(bench.run(args.sizes, args.iters, args.repeat)))
    print()
    for name, sec in time_dd().items():
        print(f"dd_solve denoise-l2 64x64 4x4, 50 outer steps, {name:<7} {sec:.3f}s")


if __name__ == "__main__":
    main()
