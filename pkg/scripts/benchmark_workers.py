"""Throughput of the two-firm (B,B) scenario against the worker count."""
import argparse
import os
import time

import numpy as np

from jdfpt.config import RATING_PRESETS
from jdfpt.mc import simulate
from jdfpt.model import FirmSpec, SystemSpec, build_sigma_matrix


def bb_system() -> SystemSpec:
    p = RATING_PRESETS["B"]
    rows = build_sigma_matrix(p["sigma"], p["sigma"], 0.4)
    firms = tuple(FirmSpec(mu=-0.001, sigma_row=tuple(r), jump_mean=p["jump_mean"],
                           jump_std=p["jump_std"], x0=2.0, kappa_log=0.0, gamma=-0.001,
                           name=f"B{i + 1}") for i, r in enumerate(rows))
    return SystemSpec(firms, lam=0.1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=400_000)
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4, 8])
    args = ap.parse_args()
    system = bb_system()
    simulate(system, 1000, 0)  # compile
    print(f"cpus visible: {os.cpu_count()}, usable: {len(os.sched_getaffinity(0))}")
    base, ref = None, None
    for w in args.workers:
        start = time.perf_counter()
        s = simulate(system, args.runs, 1, workers=w)
        dt = time.perf_counter() - start
        base = base or dt
        same = ref is None or np.array_equal(s.times, ref, equal_nan=True)
        ref = s.times if ref is None else ref
        print(f"workers={w:2d}  {args.runs / dt:12.0f} runs/s  speedup {base / dt:5.2f}  identical={same}")


if __name__ == "__main__":
    main()
