#!/usr/bin/env python3
"""Compare the compiled and pure-Python enumeration kernels.

Runs identical workloads through ``presh._kernel_c`` and ``presh._kernel_py``
and prints wall times plus the speedup.  Workloads mirror the shapes that
dominate real use: unconstrained products (emission-bound), chain constraints
(pruning-bound) and dense random tables.

    python3 benchmarks/benchmark_backends.py [--repeat 5]
"""

import argparse
import random
import time

from presh import _kernel_py

try:
    from presh import _kernel_c
except ImportError:
    _kernel_c = None


def chain_mask(width: int, spread: int) -> bytes:
    mask = bytearray(width * width)
    for i in range(width):
        for j in range(width):
            if abs(i - j) <= spread:
                mask[i * width + j] = 1
    return bytes(mask)


def workload_product(n=8, width=6):
    return [width] * n, [[] for _ in range(n)]


def workload_chain(n=11, width=6):
    sizes = [width] * n
    checks = [[] for _ in range(n)]
    mask = chain_mask(width, 1)
    for j in range(1, n):
        checks[j].append(((j - 1, j), (width, 1), mask))
    return sizes, checks


def workload_dense(n=7, width=5, tables=6, seed=0):
    rng = random.Random(seed)
    sizes = [width] * n
    checks = [[] for _ in range(n)]
    for _ in range(tables):
        scope = sorted(rng.sample(range(n), 3))
        strides = (width * width, width, 1)
        mask = bytes(int(rng.random() < 0.7) for _ in range(width**3))
        checks[max(scope)].append((tuple(scope), strides, mask))
    return sizes, checks


WORKLOADS = {
    "product 6^8": workload_product,
    "chain 6^11": workload_chain,
    "dense 5^7": workload_dense,
}


def best_of(fn, args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    print(f"{'workload':<14} {'python':>10} {'compiled':>10} {'speedup':>9}  solutions")
    for name, build in WORKLOADS.items():
        sizes, checks = build()
        decoders = [tuple(f"v{i}" for i in range(s)) for s in sizes]
        py_t, py_out = best_of(
            _kernel_py.enumerate_assignments, (sizes, checks, decoders), args.repeat
        )
        if _kernel_c is None:
            print(f"{name:<14} {py_t:>9.3f}s {'n/a':>10} {'n/a':>9}  {len(py_out)}")
            continue
        c_t, c_out = best_of(
            _kernel_c.enumerate_assignments, (sizes, checks, decoders), args.repeat
        )
        assert c_out == py_out, f"backend disagreement on {name}"
        print(
            f"{name:<14} {py_t:>9.3f}s {c_t:>9.3f}s {py_t / c_t:>8.1f}x  {len(py_out)}"
        )
    if _kernel_c is None:
        print("\ncompiled kernel not built; install with a C toolchain to compare")


if __name__ == "__main__":
    main()
