"""Leakage indices and feature-vs-attribute dependence diagnostics.

``sili`` and ``csli`` turn externally measured classifier accuracies and
ASR/intelligibility scores into bounded indices. ``pearson_correlation``,
``mutual_information`` and ``leakage_report`` rank extracted feature
columns by how much they reveal about a categorical speaker attribute.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyAttributes, InvalidTable, InvalidWeights, NonPositiveBaseline

WEIGHT_TOL = 1e-9
RATE_FLOOR = 1e-6
MIN_ROWS = 10


# -- SILI -------------------------------------------------------------------------------

@dataclass(frozen=True)
class SiliAttribute:
    name: str
    accuracy: float
    baseline_accuracy: float
    weight: float = 1.0


@dataclass(frozen=True)
class SiliInput:
    """Per-attribute accuracies; weights are normalised on construction."""

    attributes: Tuple[SiliAttribute, ...]

    def __post_init__(self):
        attrs = tuple(self.attributes)
        if not attrs:
            raise EmptyAttributes("SILI needs at least one attribute")
        for a in attrs:
            if not a.baseline_accuracy > 0:
                raise NonPositiveBaseline(f"baseline accuracy for {a.name!r} must be > 0")
            if not 0.0 <= a.accuracy <= 1.0:
                raise ValueError(f"accuracy for {a.name!r} must be in [0, 1]")
            if not a.baseline_accuracy <= 1.0:
                raise ValueError(f"baseline accuracy for {a.name!r} must be <= 1")
            if not (a.weight >= 0 and math.isfinite(a.weight)):
                raise InvalidWeights(f"weight for {a.name!r} must be finite and >= 0")
        total = math.fsum(a.weight for a in attrs)
        if total <= 0:
            raise InvalidWeights("SILI weights sum to zero")
        if abs(total - 1.0) > WEIGHT_TOL:
            attrs = tuple(SiliAttribute(a.name, a.accuracy, a.baseline_accuracy,
                                        a.weight / total) for a in attrs)
        object.__setattr__(self, "attributes", attrs)

    @classmethod
    def equal_weights(cls, accuracies: Sequence[float], baselines: Sequence[float],
                      names: Sequence[str] = None) -> "SiliInput":
        if len(accuracies) != len(baselines):
            raise ValueError("accuracies and baselines differ in length")
        names = names or [f"attr{i}" for i in range(len(accuracies))]
        return cls(tuple(SiliAttribute(n, a, b, 1.0)
                         for n, a, b in zip(names, accuracies, baselines)))


@dataclass(frozen=True)
class SiliResult:
    value: float
    clamped: Tuple[str, ...] = ()   # attributes whose accuracy exceeded the baseline

    def __float__(self):
        return self.value


def sili(inp: SiliInput) -> SiliResult:
    """Weighted mean accuracy retention, each ratio clamped at 1."""
    terms, clamped = [], []
    for a in inp.attributes:
        ratio = a.accuracy / a.baseline_accuracy
        if ratio > 1.0:
            ratio = 1.0
            clamped.append(a.name)
        terms.append(a.weight * ratio)
    return SiliResult(min(1.0, max(0.0, math.fsum(terms))), tuple(clamped))


# -- CSLI -------------------------------------------------------------------------------

@dataclass(frozen=True)
class CsliInput:
    wer_raw: float
    wer_method: float
    per_raw: float
    per_method: float
    estoi_raw: float
    estoi_method: float
    weights: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) != 3 or any(not (v >= 0 and math.isfinite(v)) for v in w):
            raise InvalidWeights("CSLI needs three finite non-negative weights")
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise InvalidWeights(f"CSLI weights must sum to 1, got {math.fsum(w)}")
        object.__setattr__(self, "weights", w)
        for name in ("wer_raw", "wer_method", "per_raw", "per_method",
                     "estoi_raw", "estoi_method"):
            v = float(getattr(self, name))
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0")
            if name.startswith("estoi") and v > 1.0:
                raise ValueError(f"{name} must be <= 1")
            object.__setattr__(self, name, max(v, RATE_FLOOR))


def _unit_ratio(num: float, den: float) -> float:
    return min(1.0, max(0.0, num / den))


def csli(inp: CsliInput) -> float:
    """Weighted speech-leakage index in [0, 1]; raw audio scores exactly 1."""
    w1, w2, w3 = inp.weights
    return math.fsum((
        w1 * _unit_ratio(inp.wer_raw, inp.wer_method),
        w2 * _unit_ratio(inp.per_raw, inp.per_method),
        w3 * _unit_ratio(inp.estoi_method, inp.estoi_raw),
    ))


# -- input files ----------------------------------------------------------------------

def _read_rows(path) -> List[Dict[str, str]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    return list(csv.DictReader(lines))


def _num(row, key, where):
    try:
        return float(row[key])
    except (KeyError, TypeError, ValueError):
        raise ValueError(f"{where}: missing or non-numeric {key!r}") from None


def load_sili_input(path) -> SiliInput:
    """CSV ``attribute,accuracy,baseline,weight`` or JSON (list or ``{"attributes": [...]}``)."""
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
        rows = doc["attributes"] if isinstance(doc, dict) else doc
        rows = [{"attribute": r.get("attribute", r.get("name")),
                 "accuracy": r.get("accuracy"),
                 "baseline": r.get("baseline", r.get("baseline_accuracy")),
                 "weight": r.get("weight", 1.0)} for r in rows]
    else:
        rows = _read_rows(path)
        need = {"attribute", "accuracy", "baseline", "weight"}
        if rows and not need <= set(rows[0]):
            raise ValueError(f"{path}: header must be attribute,accuracy,baseline,weight")
    attrs = []
    for i, r in enumerate(rows, start=1):
        where = f"{path} row {i}"
        attrs.append(SiliAttribute(str(r["attribute"]), _num(r, "accuracy", where),
                                   _num(r, "baseline", where), _num(r, "weight", where)))
    return SiliInput(tuple(attrs))


def load_csli_input(path) -> CsliInput:
    """CSV ``metric,raw,method,weight`` (metrics wer, per, estoi) or flat JSON."""
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
        weights = tuple(doc.get("weights", (1 / 3, 1 / 3, 1 / 3)))
        keys = ("wer_raw", "wer_method", "per_raw", "per_method", "estoi_raw", "estoi_method")
        try:
            vals = {k: float(doc[k]) for k in keys}
        except (KeyError, TypeError, ValueError):
            raise ValueError(f"{path}: JSON must define {', '.join(keys)}") from None
        return CsliInput(weights=weights, **vals)
    rows = _read_rows(path)
    if rows and not {"metric", "raw", "method", "weight"} <= set(rows[0]):
        raise ValueError(f"{path}: header must be metric,raw,method,weight")
    by_metric = {}
    for i, r in enumerate(rows, start=1):
        m = (r.get("metric") or "").strip().lower()
        if m not in ("wer", "per", "estoi"):
            raise ValueError(f"{path} row {i}: metric must be wer, per or estoi")
        if m in by_metric:
            raise ValueError(f"{path} row {i}: duplicate metric {m}")
        where = f"{path} row {i}"
        by_metric[m] = (_num(r, "raw", where), _num(r, "method", where), _num(r, "weight", where))
    if set(by_metric) != {"wer", "per", "estoi"}:
        raise ValueError(f"{path}: need one row each for wer, per, estoi")
    return CsliInput(
        wer_raw=by_metric["wer"][0], wer_method=by_metric["wer"][1],
        per_raw=by_metric["per"][0], per_method=by_metric["per"][1],
        estoi_raw=by_metric["estoi"][0], estoi_method=by_metric["estoi"][1],
        weights=(by_metric["wer"][2], by_metric["per"][2], by_metric["estoi"][2]),
    )


# -- feature/attribute dependence -----------------------------------------------------

@dataclass(frozen=True)
class LabeledFeatureTable:
    """Feature columns (one value per row) with a categorical label per row."""

    columns: Mapping[str, np.ndarray]
    labels: np.ndarray
    classes: Tuple = field(init=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise InvalidTable("labels must be one-dimensional")
        cols = {}
        for k, v in self.columns.items():
            arr = np.asarray(v, dtype=np.float64)
            if arr.shape != labels.shape:
                raise InvalidTable(f"column {k!r} has {arr.shape[0]} rows, labels have {labels.shape[0]}")
            if not np.all(np.isfinite(arr)):
                raise InvalidTable(f"column {k!r} has non-finite values")
            cols[k] = arr
        classes = tuple(sorted(set(labels.tolist())))
        if len(classes) < 2:
            raise InvalidTable("labels need at least two classes")
        if labels.shape[0] < MIN_ROWS:
            raise InvalidTable(f"need at least {MIN_ROWS} rows, got {labels.shape[0]}")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", classes)

    def label_codes(self) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.classes)}
        return np.array([index[v] for v in self.labels.tolist()], dtype=np.int64)

    def column(self, component_id: str) -> np.ndarray:
        try:
            return self.columns[component_id]
        except KeyError:
            raise KeyError(f"no column {component_id!r} in table") from None


class Correlation(NamedTuple):
    value: float
    flag: Optional[str] = None   # None | "one_vs_rest" | "zero_variance"


def _pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    # fsum keeps every sum independent of row order
    n = x.shape[0]
    dx = x - math.fsum(x) / n
    dy = y - math.fsum(y) / n
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx <= 0.0 or syy <= 0.0:
        return None
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def pearson_correlation(table: LabeledFeatureTable, component_id: str) -> Correlation:
    """Point-biserial correlation with the 0/1 label encoding.

    With more than two classes each class is scored one-vs-rest and the
    largest-magnitude value is returned, flagged ``"one_vs_rest"``.
    """
    x = table.column(component_id)
    codes = table.label_codes()
    if np.ptp(x) == 0.0:
        return Correlation(0.0, "zero_variance")
    if len(table.classes) == 2:
        r = _pearson(x, codes.astype(np.float64))
        return Correlation(0.0, "zero_variance") if r is None else Correlation(r)
    best = 0.0
    for k in range(len(table.classes)):
        r = _pearson(x, (codes == k).astype(np.float64))
        if r is not None and abs(r) > abs(best):
            best = r
    return Correlation(best, "one_vs_rest")


def mutual_information(table: LabeledFeatureTable, component_id: str, bins: int = 16) -> float:
    """Plug-in MI (bits) between the equal-width-binned column and the label."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    x = table.column(component_id)
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi <= lo:
        return 0.0
    b = np.minimum(((x - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    codes = table.label_codes()
    k = len(table.classes)
    joint = np.bincount(b * k + codes, minlength=bins * k).reshape(bins, k).astype(np.float64)
    n = float(x.shape[0])
    pxy = joint / n
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    mi = float(np.sum(pxy[nz] * np.log2(pxy[nz] / (px @ py)[nz])))
    return max(0.0, mi)


@dataclass(frozen=True)
class LeakageRecord:
    component: str
    correlation: float
    correlation_flag: Optional[str]
    mi: float


def leakage_report(table: LabeledFeatureTable, bins: int = 16) -> List[LeakageRecord]:
    """One record per column, highest mutual information first (ties: column order)."""
    recs = []
    for cid in table.columns:
        c = pearson_correlation(table, cid)
        recs.append(LeakageRecord(cid, c.value, c.flag, mutual_information(table, cid, bins)))
    order = sorted(range(len(recs)), key=lambda i: (-round(recs[i].mi, 12), i))
    return [recs[i] for i in order]


def read_labels(path) -> Dict[str, str]:
    """Label CSV ``row_id,label`` -> mapping."""
    rows = _read_rows(path)
    if rows and not {"row_id", "label"} <= set(rows[0]):
        raise ValueError(f"{path}: header must be row_id,label")
    out = {}
    for i, r in enumerate(rows, start=1):
        rid = (r.get("row_id") or "").strip()
        if not rid:
            raise ValueError(f"{path} row {i}: empty row_id")
        if rid in out:
            raise ValueError(f"{path} row {i}: duplicate row_id {rid}")
        out[rid] = (r.get("label") or "").strip()
    return out
