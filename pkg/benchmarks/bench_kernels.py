#!/usr/bin/env python3
"""Time the compiled block-assembly kernel against the numpy fallback.

Assembles k-site density blocks for a seeded dense chain with random phases
and reports wall time per backend plus the entrywise agreement.  Run after
an editable install; the compiled backend row is skipped when the extension
did not build.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from emc._kernels import _block_py

try:
    from emc._kernels import _block_cy
except ImportError:
    _block_cy = None

from emc.classical import decompose, make_stochastic, mix_stationary
from emc.entangled import identity_image, lift, quantum_measure, random_phases


def build_inputs(n: int, seed: int):
    rng = np.random.default_rng(seed)
    p = rng.random((n, n)) + 0.05
    p /= p.sum(axis=1, keepdims=True)
    matrix = make_stochastic(p)
    stationary = mix_stationary(decompose(matrix), [1.0])
    op = lift(matrix, random_phases(n, seed + 1))
    measure = quantum_measure(op, stationary)
    head = np.ascontiguousarray(np.conj(measure.matrix))
    w = np.ascontiguousarray(op.w.astype(complex))
    tail = np.ascontiguousarray(identity_image(op))
    return head, w, tail


def time_backend(fn, head, w, tail, k: int, repeat: int):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(head, w, tail, k)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    cases = [(6, 1), (6, 2), (6, 3), (6, 4), (4, 5), (4, 6)]
    print(f"{'n':>3} {'k':>3} {'dim':>6} {'python':>12} {'cython':>12} {'speedup':>8}  agreement")
    for n, k in cases:
        head, w, tail = build_inputs(n, seed=17)
        t_py, block_py = time_backend(
            _block_py.closed_block_entries, head, w, tail, k, args.repeat
        )
        if _block_cy is None:
            print(f"{n:>3} {k:>3} {n**k:>6} {t_py * 1e3:>10.2f}ms {'n/a':>12}")
            continue
        t_cy, block_cy = time_backend(
            _block_cy.closed_block_entries, head, w, tail, k, args.repeat
        )
        agreement = np.abs(block_py - block_cy).max()
        print(
            f"{n:>3} {k:>3} {n**k:>6} {t_py * 1e3:>10.2f}ms {t_cy * 1e3:>10.2f}ms "
            f"{t_py / t_cy:>7.2f}x  {agreement:.2e}"
        )


if __name__ == "__main__":
    main()
