import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privfeat.catalog import feature_ids
from privfeat.errors import MissingFeatureScores, ScoreFileError, UnknownFeatureId
from privfeat.selector import (
    ATTRIBUTES,
    CATEGORIES,
    METRICS_ENV,
    ScoreTable,
    SelectionRequest,
    coefficients,
    default_metrics_dir,
    get_metrics,
    load_score_table,
    select,
    sweep_alpha,
    write_score_csv,
)

from .helpers import brute_force_optimum, random_instance

U, P = (0.9, 0.5, 0.1), (0.1, 0.5, 0.9)


def small(t=(10, 10, 10)):
    return ScoreTable.from_arrays(U, P, t)


class TestCoefficients:
    def test_hand_value(self):
        t = ScoreTable.from_arrays([0.9], [0.1], [1])
        assert coefficients(t, SelectionRequest(alpha=0.5))["f1"] == pytest.approx(-0.40)

    def test_boundaries(self):
        t = small()
        c1 = coefficients(t, SelectionRequest(alpha=1.0))
        c0 = coefficients(t, SelectionRequest(alpha=0.0))
        assert [c1[f] for f in t.features] == [-u for u in U]
        assert [c0[f] for f in t.features] == list(P)

    def test_attribute_mean_and_weights(self):
        t = ScoreTable(("a",), {"a": {"age": 0.2, "gender": 0.4, "ethnicity": 0.9}},
                       {"a": {"interior": 0.0}}, {"a": 1.0})
        assert coefficients(t, SelectionRequest(alpha=0.0))["a"] == pytest.approx(0.5)
        w = SelectionRequest(alpha=0.0, attribute_weights={"gender": 3.0, "age": 1.0})
        assert coefficients(t, w)["a"] == pytest.approx((3 * 0.4 + 0.2) / 4)

    def test_missing_category(self):
        with pytest.raises(MissingFeatureScores):
            coefficients(small(), SelectionRequest(category="nature"))


class TestSelect:
    def test_example_half(self):
        r = select(small(), SelectionRequest(alpha=0.5, latency_budget_ms=30))
        assert r.selected == ("f1",)
        assert r.objective_benefit == pytest.approx(0.4)
        assert r.total_latency_ms == 10
        assert r.candidate_pool == ("f1",)

    def test_example_all(self):
        r = select(small(), SelectionRequest(alpha=1.0, latency_budget_ms=30))
        assert r.selected == ("f1", "f2", "f3")
        assert r.objective_benefit == pytest.approx(1.5)

    def test_example_budget_binding(self):
        r = select(small((20, 20, 20)), SelectionRequest(alpha=1.0, latency_budget_ms=30))
        assert r.selected == ("f1",)
        assert r.objective_benefit == pytest.approx(0.9)

    def test_empty_is_legal(self):
        r = select(small(), SelectionRequest(alpha=0.0))
        assert r.selected == () and r.objective_benefit == 0 and r.total_latency_ms == 0

    def test_tie_breaks(self):
        # equal benefit: lower latency wins
        t = ScoreTable.from_arrays([0.5, 0.5], [0, 0], [10, 5])
        assert select(t, SelectionRequest(alpha=1, latency_budget_ms=12)).selected == ("f2",)
        # equal benefit and latency: earlier feature wins
        t = ScoreTable.from_arrays([0.5, 0.5, 0.5], [0, 0, 0], [5, 5, 5])
        assert select(t, SelectionRequest(alpha=1, latency_budget_ms=11)).selected == ("f1", "f2")

    def test_result_json(self):
        r = select(small(), SelectionRequest(alpha=0.5, latency_budget_ms=30))
        doc = json.loads(r.to_json())
        assert set(doc) == {"selected", "coefficients", "objective_benefit",
                            "total_latency_ms", "alpha", "category", "budget_ms"}
        assert r.to_json() == r.to_json()

    def test_request_validation(self):
        with pytest.raises(ValueError):
            SelectionRequest(alpha=1.5)
        with pytest.raises(ValueError):
            SelectionRequest(latency_budget_ms=0)

    @pytest.mark.parametrize("seed", range(120))
    def test_exact_against_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        u, p, t, budget, alpha = random_instance(rng)
        table = ScoreTable.from_arrays(u, p, t)
        r = select(table, SelectionRequest(alpha=alpha, latency_budget_ms=budget))
        c = coefficients(table, SelectionRequest(alpha=alpha))
        ids = table.features
        benefit = [max(0.0, -c[f]) for f in ids]
        assert r.objective_benefit == pytest.approx(
            brute_force_optimum(benefit, list(t), budget), abs=1e-9)
        assert r.total_latency_ms <= budget
        assert all(c[f] < 0 for f in r.selected)
        assert set(r.selected) <= set(r.candidate_pool)
        assert r.lp_bound >= r.objective_benefit - 1e-9

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 20), k=st.floats(0.01, 100))
    def test_scaling_invariance(self, seed, k):
        rng = np.random.default_rng(seed)
        u, p, t, budget, alpha = random_instance(rng)
        req = SelectionRequest(alpha=alpha, latency_budget_ms=budget)
        a = select(ScoreTable.from_arrays(u, p, t), req).selected
        # powers of two keep the scaled scores exact, so ties stay ties
        k2 = 2.0 ** round(math.log2(k))
        b = select(ScoreTable.from_arrays(u * k2, p * k2, t), req).selected
        assert a == b

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 20))
    def test_pool_monotone_in_alpha(self, seed):
        rng = np.random.default_rng(seed)
        u, p, t, budget, _ = random_instance(rng)
        table = ScoreTable.from_arrays(u, p, t)
        alphas = np.sort(rng.uniform(0, 1, 6))
        results = sweep_alpha(table, SelectionRequest(latency_budget_ms=budget), alphas)
        pools = [set(r.candidate_pool) for r in results]
        assert all(a <= b for a, b in zip(pools, pools[1:]))

    def test_sweep_boundaries(self):
        rs = sweep_alpha(small(), SelectionRequest(), [0.0, 1.0])
        assert rs[0].candidate_pool == () and rs[1].candidate_pool == ("f1", "f2", "f3")

    def test_count_grows_when_budget_loose(self):
        rng = np.random.default_rng(7)
        table = ScoreTable.from_arrays(rng.uniform(0.05, 1, 35), rng.uniform(0.05, 1, 35),
                                       rng.uniform(0.1, 1, 35))
        counts = [len(r.selected) for r in
                  sweep_alpha(table, SelectionRequest(latency_budget_ms=1e6), [0.3, 0.5, 0.8, 1.0])]
        assert counts == sorted(counts) and counts[-1] == 35


class TestScoreFiles:
    def test_shipped_tables(self):
        t = load_score_table()
        assert t.features == feature_ids()
        for f in t.features:
            assert set(t.privacy[f]) == set(ATTRIBUTES)
            assert set(t.utility[f]) == set(CATEGORIES)
        with open(f"{default_metrics_dir()}/privacy.csv") as fh:
            assert "NOT-PAPER-DATA" in fh.readline()

    def test_default_selection_on_shipped_tables(self):
        r = select(load_score_table())
        assert r.total_latency_ms <= 100
        assert select(load_score_table(), SelectionRequest(alpha=1, latency_budget_ms=1e9)).selected \
            == feature_ids()

    def _write(self, d, drop=None, bad=None):
        ids = list(feature_ids())
        priv = {f: {a: 0.5 for a in ATTRIBUTES} for f in ids}
        util = {f: {c: 0.5 for c in CATEGORIES} for f in ids}
        lat = {f: {"latency_ms": 1.0} for f in ids}
        if drop:
            del util[drop]
        write_score_csv(d / "privacy.csv", ATTRIBUTES, priv)
        write_score_csv(d / "utility.csv", CATEGORIES, util)
        write_score_csv(d / "latency.csv", ["latency_ms"], lat, comment="test")
        if bad:
            text = (d / "latency.csv").read_text().replace(f"{bad},1.000000", f"{bad},nan")
            (d / "latency.csv").write_text(text)

    def test_roundtrip_and_env(self, tmp_path, monkeypatch):
        self._write(tmp_path)
        monkeypatch.setenv(METRICS_ENV, str(tmp_path))
        assert default_metrics_dir() == str(tmp_path)
        t = load_score_table()
        assert t.latency_ms["rms"] == 1.0
        m = get_metrics("rms", t)
        assert len(m["privacy"]) == 3 and len(m["utility"]) == 5 and m["latency_ms"] == 1.0

    def test_missing_row_named(self, tmp_path):
        self._write(tmp_path, drop="jitter")
        with pytest.raises(MissingFeatureScores, match="jitter"):
            load_score_table(str(tmp_path))

    def test_bad_value_named(self, tmp_path):
        self._write(tmp_path, bad="zcr")
        with pytest.raises(ScoreFileError, match="zcr"):
            load_score_table(str(tmp_path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScoreFileError):
            load_score_table(str(tmp_path))

    def test_bad_header(self, tmp_path):
        self._write(tmp_path)
        (tmp_path / "utility.csv").write_text("feature,animal\nrms,0.1\n")
        with pytest.raises(ScoreFileError):
            load_score_table(str(tmp_path))

    def test_unknown_feature(self):
        with pytest.raises(UnknownFeatureId):
            get_metrics("mfcc")

    def test_table_validation(self):
        with pytest.raises(ScoreFileError):
            ScoreTable.from_arrays([0.1], [0.1], [0.0])
        with pytest.raises(ScoreFileError):
            ScoreTable.from_arrays([-0.1], [0.1], [1.0])
