"""Compare the numba and numpy relation kernels on random contexts.

    python3 benchmarks/bench_kernels.py --n 200000 --repeat 5
"""

import argparse
import time

import numpy as np

from spatialprobe import kernels
from spatialprobe.annotation import CanonicalRelation
from spatialprobe.batch import evaluate_batch, random_contexts


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    batch = random_contexts(args.n, seed=args.seed)
    backends = {"numpy": kernels.numpy_backend}
    if kernels.numba_backend is not None:
        backends["numba"] = kernels.numba_backend
        for rel in CanonicalRelation:  # compile outside the timed region
            evaluate_batch(rel, random_contexts(8, seed=1), backend=kernels.numba_backend)

    print(f"{args.n} contexts, best of {args.repeat} (ms)")
    print(f"{'relation':<16}" + "".join(f"{name:>10}" for name in backends) + f"{'speedup':>10}")
    totals = dict.fromkeys(backends, 0.0)
    for rel in CanonicalRelation:
        row = {}
        for name, backend in backends.items():
            row[name] = best_of(lambda: evaluate_batch(rel, batch, backend=backend), args.repeat)
            totals[name] += row[name]
        speed = f"{row['numpy'] / row['numba']:>9.1f}x" if "numba" in row else ""
        print(f"{rel.value:<16}" + "".join(f"{1e3 * t:>10.1f}" for t in row.values()) + speed)
    speed = f"{totals['numpy'] / totals['numba']:>9.1f}x" if "numba" in totals else ""
    print(f"{'total':<16}" + "".join(f"{1e3 * t:>10.1f}" for t in totals.values()) + speed)

    if "numba" in backends:
        for rel in CanonicalRelation:
            a = evaluate_batch(rel, batch, backend=kernels.numba_backend)
            b = evaluate_batch(rel, batch, backend=kernels.numpy_backend)
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]), rel
        print("backends agree on every relation")


if __name__ == "__main__":
    main()
