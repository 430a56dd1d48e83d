"""Timing comparison of the compiled kernels against the numpy fallbacks.

Runs each hot kernel on planner-shaped inputs (one 4 s horizon of footprint
poses, one dense curve table) through both backends, then replays one loaded
scenario end to end each way. Needs numba installed; the numpy numbers are
what CORMP_NO_NUMBA=1 buys you.

    python3 benchmarks/bench_kernels.py
"""
import pathlib
import statistics
import sys
import time

import numpy as np

from cormp import kernels
from cormp.baselines import make_planner
from cormp.config import PlannerConfig
from cormp.scenario import load_scenario
from cormp.simulator import run

SCENARIO = pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "busy_highway.json"


def bench(fn, repeats):
    for _ in range(3):
        fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def pose_data(rng, n):
    return (rng.uniform(0, 100, n), rng.uniform(-4, 4, n), rng.uniform(-0.3, 0.3, n),
            2.25, 0.9,
            rng.uniform(0, 100, n), rng.uniform(-4, 4, n), rng.uniform(-0.3, 0.3, n),
            2.0, 1.2)


def main():
    if not kernels.NUMBA_ENABLED:
        print("numba is unavailable (or CORMP_NO_NUMBA is set); nothing to compare")
        return 1

    rng = np.random.default_rng(8)
    rows = []

    for n, reps in ((41, 3000), (4001, 200)):
        args = pose_data(rng, n)
        out = np.empty(n)
        jit = bench(lambda: kernels._pose_gaps_jit(*args, out), reps)
        ref = bench(lambda: kernels._pose_gaps_numpy(*args, out), reps)
        rows.append((f"pose_gaps n={n}", jit, ref))

    args = pose_data(rng, 41)
    jit = bench(lambda: kernels._any_overlap_jit(*args), 3000)
    ref = bench(lambda: kernels._any_overlap_numpy(*args), 3000)
    rows.append(("any_overlap n=41", jit, ref))

    ctrl = rng.uniform(-20, 20, (4, 2))
    px = np.ascontiguousarray(ctrl[:, 0])
    py = np.ascontiguousarray(ctrl[:, 1])
    for m, reps in ((41, 3000), (1024, 500)):
        us = np.linspace(0.0, 1.0, m)
        pts = np.empty((m, 2))
        jit = bench(lambda: kernels._bezier_points_jit(px, py, us, pts), reps)
        ref = bench(lambda: kernels._bezier_points_numpy(px, py, us, pts), reps)
        rows.append((f"bezier_points m={m}", jit, ref))

        dx, dy, kappa = np.empty(m), np.empty(m), np.empty(m)
        jit = bench(lambda: kernels._bezier_frames_jit(px, py, us, dx, dy, kappa), reps)
        ref = bench(lambda: kernels._bezier_frames_numpy(px, py, us, dx, dy, kappa), reps)
        rows.append((f"bezier_frames m={m}", jit, ref))

    print(f"{'kernel':<22} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, jit, ref in rows:
        print(f"{name:<22} {jit * 1e6:>8.1f}us {ref * 1e6:>8.1f}us {ref / jit:>7.1f}x")

    # whole-planner effect: one 20 s scenario with 10 other road users
    scenario = load_scenario(str(SCENARIO))
    cfg = PlannerConfig()
    print(f"\nclosed loop ({scenario.name}, {scenario.duration_s:.0f}s):")
    for label, enabled in (("numba", True), ("numpy", False)):
        kernels.NUMBA_ENABLED = enabled
        try:
            log = run(scenario, make_planner("cor-mp", cfg, "regular"), cfg)
        finally:
            kernels.NUMBA_ENABLED = True
        lat = np.asarray(log.latencies_ms)
        print(f"  {label:<6} median plan {np.median(lat):6.2f} ms, "
              f"p99 {np.percentile(lat, 99):6.2f} ms over {len(lat)} plans")
    return 0


if __name__ == "__main__":
    sys.exit(main())
