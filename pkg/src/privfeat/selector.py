"""Latency-budgeted privacy/utility feature selection.

Each feature gets a cost coefficient ``c = -alpha*u + (1 - alpha)*p``
(utility ``u`` for the requested sound category, privacy leakage ``p``
averaged over speaker attributes). Selection maximises ``sum(-c)`` over
features subject to ``sum(latency) <= budget``, solved exactly as a 0/1
knapsack by branch and bound.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _backend
from .catalog import feature_ids
from .errors import MissingFeatureScores, ScoreFileError

CATEGORIES = ("animal", "nature", "human_non_speech", "interior", "exterior")
ATTRIBUTES = ("age", "gender", "ethnicity")
DEFAULT_CATEGORY = "interior"
DEFAULT_ALPHA = 0.5
DEFAULT_BUDGET_MS = 100.0
METRICS_ENV = "FEATURESENSE_METRICS_DIR"

PRIVACY_FILE = "privacy.csv"
UTILITY_FILE = "utility.csv"
LATENCY_FILE = "latency.csv"


@dataclass(frozen=True)
class ScoreTable:
    """Per-feature privacy (by attribute), utility (by category) and latency.

    ``features`` fixes the order used for tie-breaking; for tables loaded
    from disk it is the registry order.
    """

    features: Tuple[str, ...]
    privacy: Mapping[str, Mapping[str, float]]
    utility: Mapping[str, Mapping[str, float]]
    latency_ms: Mapping[str, float]

    def __post_init__(self):
        feats = tuple(self.features)
        if len(set(feats)) != len(feats):
            raise ScoreFileError("duplicate feature ids in score table")
        object.__setattr__(self, "features", feats)
        for f in feats:
            for name, table in (("privacy", self.privacy), ("utility", self.utility)):
                if f not in table:
                    raise MissingFeatureScores(f"feature {f!r} has no {name} scores")
                for k, v in table[f].items():
                    if not (math.isfinite(v) and v >= 0):
                        raise ScoreFileError(f"{name} score {f}.{k} must be finite and >= 0")
            if f not in self.latency_ms:
                raise MissingFeatureScores(f"feature {f!r} has no latency")
            t = self.latency_ms[f]
            if not (math.isfinite(t) and t > 0):
                raise ScoreFileError(f"latency for {f!r} must be finite and > 0")

    @classmethod
    def from_arrays(cls, utility: Sequence[float], privacy: Sequence[float],
                    latency_ms: Sequence[float], ids: Sequence[str] = None,
                    category: str = DEFAULT_CATEGORY, attribute: str = "gender") -> "ScoreTable":
        """Single-category, single-attribute table (handy for experiments and tests)."""
        n = len(utility)
        ids = list(ids) if ids is not None else [f"f{i + 1}" for i in range(n)]
        return cls(
            tuple(ids),
            {i: {attribute: float(p)} for i, p in zip(ids, privacy)},
            {i: {category: float(u)} for i, u in zip(ids, utility)},
            {i: float(t) for i, t in zip(ids, latency_ms)},
        )

    def mean_privacy(self, feature: str, weights: Mapping[str, float] = None) -> float:
        scores = self.privacy[feature]
        if not scores:
            raise MissingFeatureScores(f"feature {feature!r} has no privacy attributes")
        if weights is None:
            return math.fsum(scores.values()) / len(scores)
        missing = set(weights) - set(scores)
        if missing:
            raise MissingFeatureScores(f"feature {feature!r} lacks attributes {sorted(missing)}")
        total = math.fsum(weights.values())
        if total <= 0:
            raise ValueError("attribute weights sum to zero")
        return math.fsum(weights[k] * scores[k] for k in weights) / total

    def utility_for(self, feature: str, category: str) -> float:
        try:
            return self.utility[feature][category]
        except KeyError:
            raise MissingFeatureScores(
                f"feature {feature!r} has no utility for category {category!r}") from None


@dataclass(frozen=True)
class SelectionRequest:
    category: str = DEFAULT_CATEGORY
    alpha: float = DEFAULT_ALPHA
    latency_budget_ms: float = DEFAULT_BUDGET_MS
    attribute_weights: Optional[Mapping[str, float]] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.latency_budget_ms > 0:
            raise ValueError("latency budget must be > 0")


@dataclass(frozen=True)
class SelectionResult:
    selected: Tuple[str, ...]
    coefficients: Dict[str, float]
    objective_benefit: float
    total_latency_ms: float
    candidate_pool: Tuple[str, ...]
    lp_bound: float
    alpha: float
    category: str
    budget_ms: float

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "coefficients": dict(self.coefficients),
            "objective_benefit": self.objective_benefit,
            "total_latency_ms": self.total_latency_ms,
            "alpha": self.alpha,
            "category": self.category,
            "budget_ms": self.budget_ms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def coefficients(table: ScoreTable, req: SelectionRequest) -> Dict[str, float]:
    a = req.alpha
    return {
        f: -a * table.utility_for(f, req.category)
        + (1.0 - a) * table.mean_privacy(f, req.attribute_weights)
        for f in table.features
    }


def lp_relaxation(benefit: Sequence[float], weight: Sequence[float], capacity: float) -> float:
    """Optimal value with ``0 <= x <= 1`` (greedy fractional knapsack)."""
    order = sorted(range(len(benefit)), key=lambda i: -benefit[i] / weight[i])
    room, value = capacity, 0.0
    for i in order:
        if weight[i] <= room:
            room -= weight[i]
            value += benefit[i]
        else:
            value += benefit[i] * room / weight[i]
            break
    return value


def select(table: ScoreTable, req: SelectionRequest = SelectionRequest()) -> SelectionResult:
    """Exact 0/1 optimum under the latency budget.

    Only features with a negative coefficient are candidates. Ties on the
    objective go to the lower total latency, then to the subset holding the
    earliest feature (table order) where they differ.
    """
    coef = coefficients(table, req)
    rank = {f: i for i, f in enumerate(table.features)}
    pool = [f for f in table.features if coef[f] < 0.0]
    benefit = [-coef[f] for f in pool]
    weight = [table.latency_ms[f] for f in pool]
    order = sorted(range(len(pool)),
                   key=lambda i: (-benefit[i] / weight[i], weight[i], rank[pool[i]]))
    mask = _backend.knapsack_bb(
        np.array([benefit[i] for i in order], dtype=np.float64),
        np.array([weight[i] for i in order], dtype=np.float64),
        np.array([rank[pool[i]] for i in order], dtype=np.int64),
        float(req.latency_budget_ms),
    )
    chosen = {pool[order[k]] for k in range(len(order)) if mask[k]}
    selected = tuple(f for f in table.features if f in chosen)
    return SelectionResult(
        selected=selected,
        coefficients=coef,
        objective_benefit=math.fsum(-coef[f] for f in selected),
        total_latency_ms=math.fsum(table.latency_ms[f] for f in selected),
        candidate_pool=tuple(pool),
        lp_bound=lp_relaxation(benefit, weight, req.latency_budget_ms),
        alpha=req.alpha,
        category=req.category,
        budget_ms=req.latency_budget_ms,
    )


def sweep_alpha(table: ScoreTable, req_base: SelectionRequest,
                alphas: Sequence[float]) -> List[SelectionResult]:
    return [select(table, SelectionRequest(req_base.category, float(a),
                                           req_base.latency_budget_ms,
                                           req_base.attribute_weights))
            for a in alphas]


# -- score files -------------------------------------------------------------------------

def default_metrics_dir() -> str:
    env = os.environ.get(METRICS_ENV)
    if env:
        return env
    return str(resources.files("privfeat") / "data")


def _read_csv(path, expected_header: Sequence[str]):
    if not os.path.exists(path):
        raise ScoreFileError(f"missing score file {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)
                if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ScoreFileError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0] != "feature" or any(h not in header for h in expected_header):
        raise ScoreFileError(f"{path}: header must be {','.join(['feature', *expected_header])}")
    out = {}
    for r in rows[1:]:
        if len(r) != len(header):
            raise ScoreFileError(f"{path}: row for {r[0]!r} has {len(r)} fields, expected {len(header)}")
        fid = r[0].strip()
        if fid in out:
            raise ScoreFileError(f"{path}: duplicate row for feature {fid!r}")
        vals = {}
        for h, v in zip(header[1:], r[1:]):
            try:
                x = float(v)
            except ValueError:
                raise ScoreFileError(f"{path}: feature {fid!r} has non-numeric {h}={v!r}") from None
            if not (math.isfinite(x) and x >= 0):
                raise ScoreFileError(f"{path}: feature {fid!r} has invalid {h}={v!r}")
            vals[h] = x
        out[fid] = vals
    return out


def load_score_table(metrics_dir: str = None, features: Sequence[str] = None) -> ScoreTable:
    """Load ``privacy.csv``, ``utility.csv`` and ``latency.csv`` from a directory.

    Every feature in ``features`` (default: the whole registry) must appear
    in all three files.
    """
    d = metrics_dir or default_metrics_dir()
    features = tuple(features) if features is not None else feature_ids()
    priv = _read_csv(os.path.join(d, PRIVACY_FILE), ATTRIBUTES)
    util = _read_csv(os.path.join(d, UTILITY_FILE), CATEGORIES)
    lat = _read_csv(os.path.join(d, LATENCY_FILE), ("latency_ms",))
    for name, table in ((PRIVACY_FILE, priv), (UTILITY_FILE, util), (LATENCY_FILE, lat)):
        missing = [f for f in features if f not in table]
        if missing:
            raise MissingFeatureScores(f"{name}: no row for feature {missing[0]!r}"
                                       + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))
    return ScoreTable(
        features,
        {f: priv[f] for f in features},
        {f: util[f] for f in features},
        {f: lat[f]["latency_ms"] for f in features},
    )


def get_metrics(feature: str, table: ScoreTable = None) -> dict:
    """Privacy map, utility map and latency of one feature."""
    from .catalog import lookup
    lookup(feature)
    table = table or load_score_table()
    return {
        "feature": feature,
        "privacy": dict(table.privacy[feature]),
        "utility": dict(table.utility[feature]),
        "latency_ms": table.latency_ms[feature],
    }


def write_score_csv(path, header: Sequence[str], rows: Mapping[str, Mapping[str, float]],
                    comment: str = None, digits: int = 6) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", *header])
        for f, vals in rows.items():
            w.writerow([f, *(f"{vals[h]:.{digits}f}" for h in header)])
