"""Time the compiled kernels against the pure-numpy fallback.

Each mode runs in its own interpreter because ``HADAMARD_DISABLE_JIT`` is
read at import time::

    python3 benchmarks/bench_kernels.py            # both modes, side by side
    python3 benchmarks/bench_kernels.py --worker   # current mode only, JSON out

The workload is a cyclic Frechet mean with a fixed step count on one
instance per backend; the compiled timing excludes the first (compiling)
call.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

CASES = [
    ("euclidean:3", 20_000),
    ("spider:4", 20_000),
    ("spd:3", 2_000),
    ("bhv:5", 2_000),
]


def _instance(desc, rng):
    from hadamard import BHV, SPD, AnchorConfiguration, Euclidean, Spider

    kind, size = desc.split(":")
    size = int(size)
    if kind == "euclidean":
        space = Euclidean(size)
        pts = [space.point(rng.normal(size=size)) for _ in range(5)]
    elif kind == "spider":
        space = Spider(size)
        pts = [space.point(int(rng.integers(size)), float(rng.uniform(0, 3))) for _ in range(5)]
    elif kind == "spd":
        space = SPD(size)
        pts = []
        for _ in range(5):
            a = rng.normal(size=(size, size))
            pts.append(space.point(a @ a.T + size * np.eye(size)))
    else:
        space = BHV(size)
        trees = ["((A:1,B:1):0.7,(C:1,(D:1,E:1):0.4):0.3);", "((A:1,C:1):0.5,(B:1,(D:1,E:1):0.9):0.2);",
                 "(((A:1,B:1):0.3,C:1):0.6,(D:1,E:1):0.8);", "((A:1,(B:1,C:1):0.4):0.5,(D:1,E:1):0.2);",
                 "(((A:1,D:1):0.5,B:1):0.3,(C:1,E:1):0.7);"]
        pts = [space.parse(t) for t in trees]
    return space, AnchorConfiguration(pts, rng.uniform(0.5, 2.0, len(pts)))


def worker(repeats):
    from hadamard import RunConfig, frechet_mean
    from hadamard._jit import backend_name

    rng = np.random.default_rng(0)
    out = {"backend": backend_name(), "cases": {}}
    for desc, cycles in CASES:
        space, data = _instance(desc, rng)
        config = RunConfig(budget=cycles, record_every=10**9)
        frechet_mean(space, data, config=RunConfig(budget=2, record_every=10**9))  # compile / warm up
        best = float("inf")
        for _ in range(repeats):
            start = time.perf_counter()
            x, trace = frechet_mean(space, data, config=config)
            best = min(best, time.perf_counter() - start)
        out["cases"][desc] = {"steps": trace.steps_taken, "seconds": best,
                              "point": json.dumps(space.encode(x))}
    return out


def _spawn(disable, repeats):
    env = dict(os.environ, HADAMARD_DISABLE_JIT="1" if disable else "0")
    cmd = [sys.executable, os.path.abspath(__file__), "--worker", "--repeats", str(repeats)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--worker", action="store_true", help="time the current mode and print JSON")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)
    if args.worker:
        print(json.dumps(worker(args.repeats)))
        return 0
    from hadamard.spaces import parse_space
    from hadamard.treespace import BHV

    fast = _spawn(False, args.repeats)
    slow = _spawn(True, 1)
    print(f"{'case':<14}{'steps':>8}{fast['backend'] + ' us/step':>16}{'python us/step':>16}{'speedup':>10}"
          f"{'result gap':>12}")
    for desc, _ in CASES:
        f, s = fast["cases"][desc], slow["cases"][desc]
        uf, us = 1e6 * f["seconds"] / f["steps"], 1e6 * s["seconds"] / s["steps"]
        kind, size = desc.split(":")
        space = BHV(int(size)) if kind == "bhv" else parse_space(desc)
        gap = space.distance(space.decode(json.loads(f["point"])), space.decode(json.loads(s["point"])))
        print(f"{desc:<14}{f['steps']:>8}{uf:>16.2f}{us:>16.2f}{us / uf:>9.1f}x{gap:>12.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
