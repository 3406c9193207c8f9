import json
import subprocess
import sys

import numpy as np
import pytest

from privfeat.cli import main
from privfeat.selector import ATTRIBUTES, CATEGORIES, METRICS_ENV, write_score_csv
from privfeat.catalog import feature_ids
from privfeat.signal import AudioBuffer, encode_wav


@pytest.fixture
def wav(tmp_path):
    rng = np.random.default_rng(5)
    t = np.arange(32000) / 16000
    x = 0.3 * np.sin(2 * np.pi * 440 * t) + 0.05 * rng.normal(size=32000)
    p = tmp_path / "a.wav"
    p.write_bytes(encode_wav(AudioBuffer(x, 16000)))
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestExtract:
    def test_rows(self, capsys, wav, tmp_path):
        out = tmp_path / "f.csv"
        code, _, err = run(capsys, "extract", "--input", wav, "--out", out)
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 8
        assert len(lines[0].split(",")) == 42
        assert "frames=7" in err and "wall_s=" in err

    def test_feature_subset(self, capsys, wav):
        code, out, _ = run(capsys, "extract", "--input", wav, "--features", "rms,zcr")
        assert code == 0
        assert out.splitlines()[0] == "window_index,start_time_s,rms,zcr"

    def test_json(self, capsys, wav):
        code, out, _ = run(capsys, "extract", "--input", wav, "--features", "rms",
                           "--format", "json", "--window-ms", "1000", "--hop-ms", "1000")
        assert code == 0
        assert len(json.loads(out)) == 2

    def test_feature_file_unknown(self, capsys, wav, tmp_path):
        lst = tmp_path / "list.txt"
        lst.write_text("rms\nmfcc\n")
        out = tmp_path / "never.csv"
        code, _, err = run(capsys, "extract", "--input", wav, "--features", f"@{lst}",
                           "--out", out)
        assert code == 3
        assert not out.exists()
        assert "mfcc" in err

    def test_feature_file_ok(self, capsys, wav, tmp_path):
        lst = tmp_path / "list.txt"
        lst.write_text("# chosen\nzcr, rms\n")
        code, out, _ = run(capsys, "extract", "--input", wav, "--features", f"@{lst}")
        assert code == 0 and out.splitlines()[0].endswith("rms,zcr")

    def test_resamples_input(self, capsys, tmp_path):
        p = tmp_path / "b.wav"
        p.write_bytes(encode_wav(AudioBuffer(np.zeros(44100), 44100), "float32"))
        code, out, _ = run(capsys, "extract", "--input", p, "--features", "rms")
        assert code == 0 and len(out.splitlines()) == 4

    @pytest.mark.parametrize("args,code", [
        (["--input", "/nonexistent.wav"], 2),
        (["--window-ms", "-1"], 3),
        (["--hop-ms", "900"], 3),
        (["--device", "mic0"], 2),
    ])
    def test_errors(self, capsys, wav, args, code):
        argv = ["extract", "--input", wav] + args if "--input" not in args else ["extract"] + args
        assert run(capsys, *argv)[0] == code

    def test_garbage_wav(self, capsys, tmp_path):
        p = tmp_path / "bad.wav"
        p.write_bytes(b"not a wav at all" * 4)
        assert run(capsys, "extract", "--input", p)[0] == 2

    def test_too_short_audio(self, capsys, tmp_path):
        p = tmp_path / "s.wav"
        p.write_bytes(encode_wav(AudioBuffer(np.zeros(100), 16000)))
        assert run(capsys, "extract", "--input", p)[0] == 2


class TestSelect:
    def test_defaults(self, capsys):
        code, out, _ = run(capsys, "select")
        doc = json.loads(out)
        assert code == 0 and doc["total_latency_ms"] <= 100
        assert doc["alpha"] == 0.5 and doc["category"] == "interior"

    def test_alpha_zero(self, capsys):
        code, out, _ = run(capsys, "select", "--alpha", "0")
        assert code == 0 and json.loads(out)["selected"] == []

    def test_alpha_one(self, capsys):
        code, out, _ = run(capsys, "select", "--alpha", "1", "--budget-ms", "1e9")
        assert code == 0 and len(json.loads(out)["selected"]) == 35

    def test_bad_alpha(self, capsys):
        assert run(capsys, "select", "--alpha", "1.5")[0] == 3

    def test_env_metrics_dir(self, capsys, tmp_path, monkeypatch):
        ids = feature_ids()
        write_score_csv(tmp_path / "privacy.csv", ATTRIBUTES,
                        {f: {a: 0.0 for a in ATTRIBUTES} for f in ids})
        write_score_csv(tmp_path / "utility.csv", CATEGORIES,
                        {f: {c: 1.0 if f == "rms" else 0.0 for c in CATEGORIES} for f in ids})
        write_score_csv(tmp_path / "latency.csv", ["latency_ms"], {f: {"latency_ms": 1.0} for f in ids})
        monkeypatch.setenv(METRICS_ENV, str(tmp_path))
        code, out, _ = run(capsys, "select", "--alpha", "1")
        assert code == 0 and json.loads(out)["selected"] == ["rms"]

    def test_broken_metrics(self, capsys, tmp_path):
        (tmp_path / "privacy.csv").write_text("feature,age,gender,ethnicity\nrms,0.1,0.1,0.1\n")
        code, _, err = run(capsys, "select", "--metrics-dir", tmp_path)
        assert code == 2


class TestInfo:
    def test_registry(self, capsys):
        code, out, _ = run(capsys, "registry")
        lines = out.splitlines()
        assert code == 0 and len(lines) == 35
        assert lines[0].split("\t")[:3] == ["amplitude_envelope", "time_domain", "1"]

    def test_get_metrics(self, capsys):
        code, out, _ = run(capsys, "get-metrics", "--feature", "rms")
        doc = json.loads(out)
        assert code == 0
        assert len(doc["privacy"]) == 3 and len(doc["utility"]) == 5 and doc["latency_ms"] > 0

    def test_get_metrics_unknown(self, capsys):
        assert run(capsys, "get-metrics", "--feature", "chroma")[0] == 3

    def test_profile(self, capsys, tmp_path):
        out = tmp_path / "lat.csv"
        code, _, err = run(capsys, "profile", "--iterations", "10", "--features", "rms,zcr",
                           "--out", out)
        assert code == 0
        assert out.read_text().splitlines()[0] == "feature,latency_ms"
        assert "total_ms=" in err
        assert run(capsys, "profile", "--iterations", "3")[0] == 3


class TestIndices:
    def test_sili(self, capsys, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("attribute,accuracy,baseline,weight\nage,0.6,0.6,1\ngender,0.9,0.9,1\n")
        code, out, _ = run(capsys, "sili", "--input", p)
        assert code == 0 and out.strip() == "1"
        assert float(out) == 1.0

    def test_sili_bad(self, capsys, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("attribute,accuracy\nage,0.6\n")
        assert run(capsys, "sili", "--input", p)[0] == 2

    def test_csli(self, capsys, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("metric,raw,method,weight\nwer,0.2,0.2,0.5\nper,0.1,0.1,0.25\n"
                     "estoi,0.8,0.8,0.25\n")
        code, out, _ = run(capsys, "csli", "--input", p)
        assert code == 0 and float(out) == 1.0

    def test_analyze(self, capsys, tmp_path):
        rng = np.random.default_rng(2)
        y = np.array(["f", "m"] * 30)
        feats = tmp_path / "f.csv"
        rows = ["window_index,start_time_s,noise,signal,other"]
        for i, lab in enumerate(y):
            sig = (1.0 if lab == "m" else 0.0) + 0.05 * rng.normal()
            rows.append(f"{i},{i * 0.25},{rng.normal()},{sig},{rng.normal()}")
        feats.write_text("\n".join(rows) + "\n")
        labels = tmp_path / "l.csv"
        labels.write_text("row_id,label\n" + "".join(f"{i},{lab}\n" for i, lab in enumerate(y)))
        code, out, _ = run(capsys, "analyze", "--input", feats, "--labels", labels)
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == "component,correlation,correlation_flag,mi_bits"
        assert lines[1].startswith("signal,")
        assert len(lines) == 4

    def test_analyze_missing_label(self, capsys, tmp_path):
        feats = tmp_path / "f.csv"
        feats.write_text("id,a\n" + "".join(f"{i},{i}\n" for i in range(12)))
        labels = tmp_path / "l.csv"
        labels.write_text("row_id,label\n0,a\n")
        assert run(capsys, "analyze", "--input", feats, "--labels", labels)[0] == 2


def test_module_entry_point(wav, tmp_path):
    out1, out2 = tmp_path / "1.csv", tmp_path / "2.csv"
    for out in (out1, out2):
        proc = subprocess.run([sys.executable, "-m", "privfeat", "extract", "--input", str(wav),
                               "--out", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    assert out1.read_bytes() == out2.read_bytes()
