"""Fast vs naive transform timings.

The radix-2 path scales like n log n: doubling the length should cost
barely more than 2x.  The matrix path is quadratic and is only kept as the
oracle the fast path is tested against.
"""

import time

import numpy as np

import mrikacz as mk


def median_seconds(fn, reps=7):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


sizes = [256, 1024, 4096, 16384, 65536]
print(f"{'p_num':>8} {'fast':>12} {'naive':>12} {'fast 2x ratio':>14}")
previous = None
for n in sizes:
    rng = np.random.default_rng(n)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    fast = mk.DftPlan(n, "fast")
    fast.forward_values(x)
    t_fast = median_seconds(lambda: fast.forward_values(x))
    if n <= 4096:
        naive = mk.DftPlan(n, "naive")
        t_naive = f"{median_seconds(lambda: naive.forward_values(x)):12.6f}"
    else:
        t_naive = "     skipped"
    ratio = "" if previous is None else f"{t_fast / previous:14.2f}"
    # sizes step 4x here, so the per-doubling ratio is sqrt of the printed one
    print(f"{n:>8} {t_fast:12.6f} {t_naive} {ratio}")
    previous = t_fast
