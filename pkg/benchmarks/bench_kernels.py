"""Timing comparison of the numba and numpy kernel backends.

Runs both hot kernels over realistic and worst-case shapes, taking the
median of several repetitions after a warm-up pass so JIT compilation never
lands in a timed region.

    python3 benchmarks/bench_kernels.py [--repeats 7]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from fkdetect import kernels


def containment_case(rng: np.random.Generator, n_cols: int, n_values: int):
    columns = []
    for _ in range(n_cols):
        size = int(rng.integers(1, n_values))
        values = rng.choice(n_values * 2, size=size, replace=False)
        columns.append(np.sort(values.astype(np.int64)))
    return columns


def distinct_case(rng: np.random.Generator, n_rows: int, n_cols: int):
    return rng.integers(0, max(2, n_rows // 3), size=(n_rows, n_cols)).astype(np.int64)


CASES = [
    ("containment 40 cols x 5k values", "containment", dict(n_cols=40, n_values=5_000)),
    ("containment 120 cols x 20k values", "containment", dict(n_cols=120, n_values=20_000)),
    ("distinct rows 200k x 2", "distinct", dict(n_rows=200_000, n_cols=2)),
    ("distinct rows 500k x 4", "distinct", dict(n_rows=500_000, n_cols=4)),
]


def run_case(kind: str, payload, repeats: int) -> float:
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        if kind == "containment":
            kernels.containment_matrix(payload)
        else:
            kernels.distinct_row_count(payload)
        timings.append(time.perf_counter() - start)
    return statistics.median(timings)


def available_backends() -> list[str]:
    names = []
    for name in kernels.BACKENDS:
        try:
            previous = kernels.use_backend(name)
        except kernels.KernelError:
            continue
        kernels.use_backend(previous)
        names.append(name)
    return names


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7, help="timed repetitions per case")
    parser.add_argument("--seed", type=int, default=11, help="payload generator seed")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}   repeats: {args.repeats}\n")

    rng = np.random.default_rng(args.seed)
    payloads = []
    for label, kind, shape in CASES:
        payload = containment_case(rng, **shape) if kind == "containment" else distinct_case(rng, **shape)
        payloads.append((label, kind, payload))

    results: dict[str, dict[str, float]] = {}
    for backend in backends:
        previous = kernels.use_backend(backend)
        kernels.warm_up()
        for label, kind, payload in payloads:
            run_case(kind, payload, 1)  # warm path, outside timing
            results.setdefault(label, {})[backend] = run_case(kind, payload, args.repeats)
        kernels.use_backend(previous)

    width = max(len(label) for label, _, _ in CASES)
    header = f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, _, _ in payloads:
        row = f"{label:<{width}}  "
        row += "  ".join(f"{results[label][b] * 1000:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            base, fast = results[label]["numpy"], results[label]["numba"]
            row += f"  {base / fast:>8.2f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
