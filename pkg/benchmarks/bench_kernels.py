"""Compare the compiled kernel core against the pure-Python twin.

Usage: python3 benchmarks/bench_kernels.py [--size N] [--repeats R]

Times each hot kernel on a representative workload and prints the speedup.
Run after an editable install; if the extension failed to build, the script
says so and exits.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hypcert import _kernels_py


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(impl, size: int):
    rng = np.random.default_rng(2)
    x0 = float(rng.random())
    seq = rng.normal(-0.2, 0.6, size)
    word = rng.integers(0, 2, size=12).astype(np.int8)
    return [
        ("circle_orbit", lambda: impl.circle_orbit(x0, 1.5, size)),
        ("circle_log_deriv_orbit",
         lambda: impl.circle_log_deriv_orbit(x0, 1.5, size)),
        ("circle_itinerary", lambda: impl.circle_itinerary(x0, 1.5, size)),
        ("circle_newton_periodic",
         lambda: [impl.circle_newton_periodic(x0 + k / 512.0, 1.5, 8)
                  for k in range(64)]),
        ("circle_word_fixed_point",
         lambda: [impl.circle_word_fixed_point(word, 1.5, 0.3)
                  for _ in range(32)]),
        ("min_abs_deriv_scan", lambda: impl.min_abs_deriv_scan(1.5, size)),
        ("hyp_time_indices", lambda: impl.hyp_time_indices(seq, -0.1)),
        ("torus_orbit", lambda: impl.torus_orbit(0.3, 0.4, 0.3, size)),
        ("torus_qr_logs", lambda: impl.torus_qr_logs(0.3, 0.4, 0.3, size)),
    ]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=200000,
                        help="workload length (orbit steps, sequence size)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats; the minimum is reported")
    args = parser.parse_args()

    try:
        from hypcert import _kernels_cy
    except ImportError:
        print("compiled extension not available; nothing to compare")
        return 1

    print(f"workload size {args.size}, best of {args.repeats} repeats")
    print(f"{'kernel':26s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    py_jobs = workloads(_kernels_py, args.size)
    cy_jobs = workloads(_kernels_cy, args.size)
    for (name, py_fn), (_, cy_fn) in zip(py_jobs, cy_jobs):
        t_py = _best_of(py_fn, args.repeats)
        t_cy = _best_of(cy_fn, args.repeats)
        print(f"{name:26s} {t_py * 1e3:9.2f}ms {t_cy * 1e3:9.2f}ms "
              f"{t_py / t_cy:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
