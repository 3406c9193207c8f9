"""Regenerate the bundled placeholder score tables in src/privfeat/data/.

Privacy and utility values are synthetic (seeded, with a mild per-group
bias so voice-quality features leak more). Latencies come from running the
profiler on the current host. None of it is measured classifier data.
"""
import argparse
import os

import numpy as np

from privfeat import catalog
from privfeat.profiler import profile
from privfeat.selector import ATTRIBUTES, CATEGORIES, write_score_csv

BANNER = "NOT-PAPER-DATA: synthetic placeholder scores, regenerate with scripts/make_placeholder_scores.py"

GROUP_PRIVACY = {
    "time_domain": 0.25, "spectral": 0.35, "statistical": 0.30, "perceptual": 0.30,
    "voice_specific": 0.60, "high_level": 0.30, "derived": 0.25,
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..",
                                                  "src", "privfeat", "data"))
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--iterations", type=int, default=100)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    privacy, utility = {}, {}
    for spec in catalog.registry():
        base = GROUP_PRIVACY[spec.group]
        privacy[spec.id] = {a: float(np.clip(base + rng.normal(0, 0.12), 0.02, 1.0))
                            for a in ATTRIBUTES}
        utility[spec.id] = {c: float(rng.uniform(0.05, 0.95)) for c in CATEGORIES}

    prof = profile(iterations=args.iterations)
    latency = {k: {"latency_ms": v.mean_ms} for k, v in prof.timings.items()}

    os.makedirs(args.out, exist_ok=True)
    write_score_csv(os.path.join(args.out, "privacy.csv"), ATTRIBUTES, privacy, BANNER, 4)
    write_score_csv(os.path.join(args.out, "utility.csv"), CATEGORIES, utility, BANNER, 4)
    write_score_csv(os.path.join(args.out, "latency.csv"), ["latency_ms"], latency, BANNER)
    print(f"wrote placeholder tables to {args.out} (total latency {prof.total_ms:.3f} ms)")


if __name__ == "__main__":
    main()
