"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints per-kernel median wall time for each available backend and the
speed-up of the compiled one. Workloads mirror what the feature catalog
feeds the kernels for a 500 ms window at 16 kHz.
"""
import argparse
import statistics
import time

import numpy as np

from privfeat import _backend
from privfeat.dsp import DB4_HIGHPASS, DB4_LOWPASS, pitch_lag_range


def _workloads():
    rng = np.random.default_rng(0)
    fs = 16000
    t = np.arange(8000) / fs
    voiced = np.sin(2 * np.pi * 140 * t) + 0.1 * rng.normal(size=8000)
    lo, hi = pitch_lag_range(fs)
    lp, hp = np.array(DB4_LOWPASS), np.array(DB4_HIGHPASS)
    frame = rng.normal(size=8192)

    n = 35
    benefit = rng.uniform(0.01, 1, n)
    weight = rng.uniform(0.05, 2, n)
    order = np.argsort(-benefit / weight, kind="stable")
    b, w = benefit[order], weight[order]
    rank = np.arange(n, dtype=np.int64)[order]

    return {
        "nccf_track (500 ms, 10 ms hop)": lambda k: k.nccf_track(voiced, 160, 160, lo, hi),
        "dwt_step (8192 samples)": lambda k: k.dwt_step(frame, lp, hp),
        "knapsack_bb (35 items, budget 10 ms)": lambda k: k.knapsack_bb(b, w, rank, 10.0),
    }


def _time(fn, repeat):
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples) * 1e3


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)
    backends = _backend.available()
    names = sorted(backends)
    print(f"active backend: {_backend.BACKEND}")
    header = f"{'kernel':40s}" + "".join(f"{n + ' ms':>14s}" for n in names)
    if "compiled" in backends:
        header += f"{'speed-up':>10s}"
    print(header)
    for label, call in _workloads().items():
        ms = {n: _time(lambda: call(backends[n]), args.repeat) for n in names}
        line = f"{label:40s}" + "".join(f"{ms[n]:14.4f}" for n in names)
        if "compiled" in backends:
            line += f"{ms['python'] / ms['compiled']:9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
