"""Per-feature extraction latency measurement.

Every feature is timed in isolation on a fresh analysis, so intermediates
such as the FFT are charged to each feature that needs them. That keeps
each latency meaningful on its own, which the selector relies on.
"""
from __future__ import annotations

import gc
import json
import math
import platform
import time
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from . import _backend
from .catalog import Analysis, compute_feature, resolve_selection
from .selector import LATENCY_FILE, write_score_csv
from .signal import Frame, WindowPlan, read_wav, resample, window

OUTLIER_SIGMA = 5.0


@dataclass(frozen=True)
class FeatureTiming:
    mean_ms: float
    std_ms: float
    iterations: int
    dropped: int = 0


@dataclass(frozen=True)
class LatencyProfile:
    timings: Dict[str, FeatureTiming]
    window_ms: float
    sample_rate_hz: int
    environment: str = ""

    @property
    def total_ms(self) -> float:
        return math.fsum(t.mean_ms for t in self.timings.values())

    def to_json(self) -> str:
        doc = {
            "window_ms": self.window_ms,
            "sample_rate_hz": self.sample_rate_hz,
            "environment": self.environment,
            "total_ms": self.total_ms,
            "features": {k: vars(v) for k, v in self.timings.items()},
        }
        return json.dumps(doc, indent=2) + "\n"


def host_descriptor() -> str:
    return (f"{platform.machine()} {platform.processor() or 'cpu'}; "
            f"{platform.system()} {platform.release()}; "
            f"python {platform.python_version()}; kernels={_backend.BACKEND}")


def _workload_frames(plan: WindowPlan, sample_rate_hz: int, workload: str,
                     path: Optional[str], seed: int):
    if workload == "seeded_noise":
        n = plan.window_samples(sample_rate_hz)
        rng = np.random.default_rng(seed)
        x = rng.uniform(-0.5, 0.5, n)
        return [Frame(x, 0, 0.0, sample_rate_hz)]
    if workload == "supplied_file":
        if path is None:
            raise ValueError("supplied_file workload needs a path")
        buf = read_wav(path)
        if buf.sample_rate_hz != sample_rate_hz:
            buf = resample(buf, sample_rate_hz)
        return window(buf, plan)
    raise ValueError(f"unknown workload {workload!r}")


def _summarise(samples_ms: np.ndarray) -> FeatureTiming:
    mu, sd = float(samples_ms.mean()), float(samples_ms.std())
    keep = samples_ms
    if sd > 0:
        keep = samples_ms[np.abs(samples_ms - mu) <= OUTLIER_SIGMA * sd]
    dropped = samples_ms.shape[0] - keep.shape[0]
    mean = max(float(keep.mean()), 1e-9)
    return FeatureTiming(mean, float(keep.std()), int(keep.shape[0]), int(dropped))


def profile(plan: WindowPlan = WindowPlan(), iterations: int = 100,
            workload: str = "seeded_noise", sample_rate_hz: int = 16000,
            path: Optional[str] = None, seed: int = 0, warmup: int = 5,
            selection: Optional[Sequence[str]] = None) -> LatencyProfile:
    """Time each selected feature over ``iterations`` windows after ``warmup`` runs."""
    if iterations < 10:
        raise ValueError("iterations must be >= 10")
    specs = resolve_selection(selection)
    frames = _workload_frames(plan, sample_rate_hz, workload, path, seed)
    timings = {}
    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        for spec in specs:
            timings[spec.id] = _time_one(spec.id, frames, iterations, warmup)
    finally:
        if gc_was_on:
            gc.enable()
    return LatencyProfile(timings, plan.window_ms, sample_rate_hz, host_descriptor())


def _time_one(feature_id, frames, iterations, warmup) -> FeatureTiming:
    clock = time.perf_counter_ns
    for i in range(warmup):
        compute_feature(feature_id, Analysis(frames[i % len(frames)]))
    out = np.empty(iterations)
    for i in range(iterations):
        frame = frames[i % len(frames)]
        t0 = clock()
        compute_feature(feature_id, Analysis(frame))
        out[i] = (clock() - t0) / 1e6
    return _summarise(out)


def write_latency_csv(prof: LatencyProfile, path) -> None:
    """Write a selector-compatible ``latency.csv`` (6 decimal places)."""
    rows = {k: {"latency_ms": v.mean_ms} for k, v in prof.timings.items()}
    try:
        write_score_csv(path, ["latency_ms"], rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


__all__ = ["FeatureTiming", "LatencyProfile", "profile", "write_latency_csv", "LATENCY_FILE"]
