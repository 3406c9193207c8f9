"""The privacy-aware feature catalog and the per-window extraction engine.

Thirty-five features in seven groups. ``wavelet_features`` expands to six
components, so a full vector has forty values. Registry order is frozen:
new features may be appended, never inserted.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _backend, dsp
from .errors import UnknownFeatureId
from .signal import AudioBuffer, Frame, WindowPlan, as_frame, window

GROUPS = ("time_domain", "spectral", "statistical", "perceptual",
          "voice_specific", "high_level", "derived")

# Never part of the catalog: these carry speech content or speaker identity.
ELIMINATED = ("timbre", "chroma", "mfcc", "lpc", "lpcc", "pitch",
              "fundamental_frequency", "formants", "spectral_envelope",
              "filter_bank")

DEGENERATE_ENERGY = 1e-12
EPS = 1e-12
SILENCE_THRESHOLD = 0.01
SILENCE_SUBFRAME_MS = 10.0
VOICING_SUBFRAME_MS = 10.0
VOICING_MIN_CORR = 0.45
VOICING_REL_RMS = 0.1
HNR_RANGE_DB = (-20.0, 40.0)
HIST_BINS = 64
CONTRAST_QUANTILE = 0.2
CONTRAST_LOW_HZ = 200.0
CONTRAST_BANDS = 6
ROUGHNESS_PEAKS = 20
TEXTURE_LEVELS = 4
REL_FLOOR = 1e-20          # power floor relative to the spectral maximum

# Zwicker critical-band edges (Hz), 24 bands
BARK_EDGES = np.array([0, 100, 200, 300, 400, 510, 630, 770, 920, 1080, 1270,
                       1480, 1720, 2000, 2320, 2700, 3150, 3700, 4400, 5300,
                       6400, 7700, 9500, 12000, 15500], dtype=np.float64)


@dataclass(frozen=True)
class FeatureSpec:
    id: str
    display_name: str
    group: str
    arity: int = 1
    privacy_class: str = "non_invasive"
    unit: str = ""

    @property
    def component_ids(self) -> Tuple[str, ...]:
        if self.arity == 1:
            return (self.id,)
        stem = self.id[:-len("_features")] if self.id.endswith("_features") else self.id
        return tuple(f"{stem}_e{i}" for i in range(self.arity))


_REGISTRY = (
    FeatureSpec("amplitude_envelope", "Amplitude Envelope", "time_domain"),
    FeatureSpec("rms", "RMS", "time_domain"),
    FeatureSpec("zcr", "Zero Crossing Rate", "time_domain"),
    FeatureSpec("short_term_energy", "Short-Term Energy", "time_domain"),
    FeatureSpec("temporal_centroid", "Temporal Centroid", "time_domain"),
    FeatureSpec("envelope_modulation_rate", "Envelope Modulation Rate", "time_domain", unit="1/s"),
    FeatureSpec("silence_ratio", "Silence Ratio", "time_domain"),
    FeatureSpec("spectral_centroid", "Spectral Centroid", "spectral", unit="Hz"),
    FeatureSpec("spectral_flatness", "Spectral Flatness", "spectral"),
    FeatureSpec("spectral_contrast", "Spectral Contrast", "spectral", unit="dB"),
    FeatureSpec("spectral_spread", "Spectral Spread", "spectral", unit="Hz"),
    FeatureSpec("spectral_entropy", "Spectral Entropy", "spectral"),
    FeatureSpec("spectral_irregularity", "Spectral Irregularity", "spectral"),
    FeatureSpec("spectral_roughness", "Spectral Roughness", "spectral"),
    FeatureSpec("mean", "Mean", "statistical"),
    FeatureSpec("variance", "Variance", "statistical"),
    FeatureSpec("std_dev", "Standard Deviation", "statistical"),
    FeatureSpec("kurtosis", "Kurtosis", "statistical"),
    FeatureSpec("skewness", "Skewness", "statistical"),
    FeatureSpec("entropy", "Entropy", "statistical"),
    FeatureSpec("sharpness", "Sharpness", "perceptual", unit="Bark"),
    FeatureSpec("reverberation", "Reverberation", "perceptual", unit="dB/s"),
    FeatureSpec("tonality_index", "Tonality Index", "perceptual"),
    FeatureSpec("hnr", "HNR", "voice_specific", privacy_class="gray_zone", unit="dB"),
    FeatureSpec("jitter", "Jitter", "voice_specific", privacy_class="gray_zone"),
    FeatureSpec("shimmer", "Shimmer", "voice_specific", privacy_class="gray_zone"),
    FeatureSpec("group_delay", "Group Delay", "high_level", unit="s"),
    FeatureSpec("wavelet_features", "Wavelet Features", "high_level", arity=6),
    FeatureSpec("temporal_spectral_slope", "Temporal Spectral Slope", "high_level", unit="Hz/s"),
    FeatureSpec("transient_to_sustained", "Transient-to-Sustained Ratio", "derived"),
    FeatureSpec("spectral_texture", "Spectral Texture", "derived", unit="dB"),
    FeatureSpec("low_band_energy", "Low Band Energy", "derived"),
    FeatureSpec("mid_band_energy", "Mid Band Energy", "derived"),
    FeatureSpec("high_band_energy", "High Band Energy", "derived"),
    FeatureSpec("lh1000", "Low-to-High Ratio (LH1000)", "derived"),
)
_BY_ID = {s.id: s for s in _REGISTRY}
_RANK = {s.id: i for i, s in enumerate(_REGISTRY)}


def registry() -> Tuple[FeatureSpec, ...]:
    return _REGISTRY


def feature_ids() -> Tuple[str, ...]:
    return tuple(s.id for s in _REGISTRY)


def component_ids(selection: Optional[Iterable[str]] = None) -> Tuple[str, ...]:
    return tuple(c for s in resolve_selection(selection) for c in s.component_ids)


def lookup(feature_id: str) -> FeatureSpec:
    try:
        return _BY_ID[feature_id]
    except KeyError:
        raise UnknownFeatureId(f"unknown feature id {feature_id!r}") from None


def resolve_selection(selection: Optional[Iterable[str]] = None) -> Tuple[FeatureSpec, ...]:
    """Validate a feature selection and return its specs in registry order.

    ``None`` (or ``"all"``) selects the whole catalog.
    """
    if selection is None or selection == "all":
        return _REGISTRY
    if isinstance(selection, str):
        selection = [s for s in selection.split(",") if s.strip()]
    ids = [s.strip() for s in selection]
    if not ids:
        raise ValueError("feature selection is empty")
    if len(set(ids)) != len(ids):
        raise ValueError("feature selection contains duplicates")
    specs = [lookup(i) for i in ids]
    return tuple(sorted(specs, key=lambda s: _RANK[s.id]))


# -- per-frame analysis ------------------------------------------------------------

def _ls_slope(t: np.ndarray, y: np.ndarray) -> float:
    if t.shape[0] < 2:
        return 0.0
    tc = t - t.mean()
    den = float(np.dot(tc, tc))
    if den <= 0.0:
        return 0.0
    return float(np.dot(tc, y - y.mean()) / den)


def _sethares(f1, f2):
    fmin = np.minimum(f1, f2)
    s = 0.24 / (0.0207 * fmin + 18.96)
    df = np.abs(f2 - f1)
    return np.exp(-3.5 * s * df) - np.exp(-5.75 * s * df)


def _sharpness_weight(z):
    z = np.asarray(z, dtype=np.float64)
    high = 0.00012 * z ** 4 - 0.0056 * z ** 3 + 0.1 * z ** 2 - 0.81 * z + 3.5
    return np.where(z <= 14, 1.0, high)


class Analysis:
    """Lazily computed intermediates for one frame.

    Each intermediate (spectrum, envelope, pitch track, ...) is evaluated at
    most once, however many features consume it.
    """

    def __init__(self, frame: Frame):
        self.frame = frame
        self.x = frame.samples
        self.fs = frame.sample_rate_hz
        self.n = self.x.shape[0]

    @cached_property
    def energy(self) -> float:
        return float(np.dot(self.x, self.x))

    @cached_property
    def degenerate(self) -> bool:
        return self.energy < DEGENERATE_ENERGY

    @cached_property
    def spectrum(self) -> dsp.Spectrum:
        return dsp.fft_spectrum(self.frame, "hann")

    @cached_property
    def power(self) -> np.ndarray:
        return self.spectrum.power()

    @cached_property
    def freqs(self) -> np.ndarray:
        return self.spectrum.freqs

    @cached_property
    def total_power(self) -> float:
        return float(self.power.sum())

    @cached_property
    def spectral_degenerate(self) -> bool:
        return self.degenerate or self.total_power <= 0.0

    @cached_property
    def floored_power(self) -> np.ndarray:
        p = self.power
        return np.maximum(p, REL_FLOOR * p.max())

    @cached_property
    def log_magnitude_db(self) -> np.ndarray:
        return 10.0 * np.log10(self.floored_power)

    @cached_property
    def envelope(self) -> np.ndarray:
        return dsp.analytic_envelope(self.frame, dsp.DEFAULT_SMOOTHING_MS).values

    @cached_property
    def centered_moments(self):
        mu = float(np.mean(self.x))
        d = self.x - mu
        d2 = d * d
        m2 = float(np.mean(d2))
        m3 = float(np.mean(d2 * d))
        m4 = float(np.mean(d2 * d2))
        flat = self.degenerate or m2 <= 1e-20 * (self.energy / self.n)
        return mu, m2, m3, m4, flat

    @cached_property
    def pitch_track(self):
        lo, hi = dsp.pitch_lag_range(self.fs)
        sub = int(round(VOICING_SUBFRAME_MS * self.fs / 1000.0))
        return _backend.nccf_track(self.x, sub, sub, lo, hi)

    @cached_property
    def voiced(self):
        lags, rmax, rms, peak = self.pitch_track
        if self.degenerate or lags.shape[0] == 0:
            return lags[:0], peak[:0]
        frame_rms = math.sqrt(self.energy / self.n)
        mask = (rmax > VOICING_MIN_CORR) & (rms > VOICING_REL_RMS * frame_rms)
        return lags[mask].astype(np.float64), peak[mask]

    @cached_property
    def subframe_len(self) -> int:
        return int(round(dsp.DEFAULT_SUBFRAME_MS * self.fs / 1000.0))

    @cached_property
    def subframe_mags(self) -> np.ndarray:
        return dsp.subframe_spectra(self.x, self.subframe_len)

    @cached_property
    def band_fractions(self):
        if self.spectral_degenerate:
            return 0.0, 0.0, 0.0
        f, p = self.freqs, self.power
        total = self.total_power
        low = float(p[f <= 500.0].sum()) / total
        mid = float(p[(f > 500.0) & (f <= 2000.0)].sum()) / total
        high = float(p[f > 2000.0].sum()) / total
        return low, mid, high

    @cached_property
    def flatness(self) -> float:
        if self.spectral_degenerate:
            return 1.0
        p = self.floored_power
        geo = math.exp(float(np.mean(np.log(p))))
        return min(1.0, geo / float(np.mean(p)))


# -- feature functions ---------------------------------------------------------------

def _amplitude_envelope(a):
    return float(np.max(np.abs(a.x))) if a.n else 0.0


def _rms(a):
    return math.sqrt(a.energy / a.n)


def _zcr(a):
    if a.n < 2:
        return 0.0
    nonneg = a.x >= 0.0
    return float(np.count_nonzero(nonneg[1:] != nonneg[:-1])) / (a.n - 1)


def _short_term_energy(a):
    return a.energy


def _temporal_centroid(a):
    if a.degenerate:
        return 0.0
    return float(np.dot(np.arange(a.n), a.x * a.x)) / a.energy / a.n


def _envelope_modulation_rate(a):
    env = a.envelope
    if env.shape[0] < 2:
        return 0.0
    return a.fs * float(np.mean(np.abs(np.diff(env))))


def _silence_ratio(a):
    sub = int(round(SILENCE_SUBFRAME_MS * a.fs / 1000.0))
    count = a.n // sub
    if count == 0:
        return float(_rms(a) < SILENCE_THRESHOLD)
    blocks = a.x[:count * sub].reshape(count, sub)
    rms = np.sqrt(np.mean(blocks * blocks, axis=1))
    return float(np.count_nonzero(rms < SILENCE_THRESHOLD)) / count


def _spectral_centroid(a):
    if a.spectral_degenerate:
        return 0.0
    return float(np.dot(a.freqs, a.power)) / a.total_power


def _spectral_flatness(a):
    return a.flatness


def _spectral_contrast(a):
    if a.spectral_degenerate:
        return 0.0
    db = a.log_magnitude_db
    f = a.freqs
    values = []
    lo = CONTRAST_LOW_HZ
    for _ in range(CONTRAST_BANDS):
        band = np.sort(db[(f >= lo) & (f < 2.0 * lo)])
        lo *= 2.0
        if band.shape[0] < 2:
            continue
        q = max(1, int(round(CONTRAST_QUANTILE * band.shape[0])))
        values.append(float(band[-q:].mean() - band[:q].mean()))
    return float(np.mean(values)) if values else 0.0


def _spectral_spread(a):
    if a.spectral_degenerate:
        return 0.0
    p = a.power / a.total_power
    c = float(np.dot(a.freqs, p))
    return math.sqrt(max(0.0, float(np.dot((a.freqs - c) ** 2, p))))


def _spectral_entropy(a):
    if a.spectral_degenerate:
        return 0.0
    p = a.power / a.total_power
    p = p[p > 0]
    h = -float(np.dot(p, np.log(p)))
    return min(1.0, max(0.0, h / math.log(a.power.shape[0])))


def _spectral_irregularity(a):
    if a.spectral_degenerate:
        return 0.0
    m = a.spectrum.magnitudes
    return float(np.sum(np.diff(m) ** 2) / np.dot(m, m))


def _spectral_roughness(a):
    if a.spectral_degenerate:
        return 0.0
    peaks = dsp.spectral_peaks(a.spectrum, ROUGHNESS_PEAKS)
    if len(peaks) < 2:
        return 0.0
    f = np.array([p[0] for p in peaks])
    # Hann coherent gain is 1/2: scale magnitudes back to sinusoid amplitudes
    amp = np.array([p[1] for p in peaks]) * 4.0 / a.n
    i, j = np.triu_indices(f.shape[0], k=1)
    return float(np.sum(_sethares(f[i], f[j]) * amp[i] * amp[j]))


def _mean(a):
    return a.centered_moments[0]


def _variance(a):
    return a.centered_moments[1]


def _std_dev(a):
    return math.sqrt(a.centered_moments[1])


def _kurtosis(a):
    _, m2, _, m4, flat = a.centered_moments
    return 0.0 if flat else m4 / (m2 * m2) - 3.0


def _skewness(a):
    _, m2, m3, _, flat = a.centered_moments
    return 0.0 if flat else m3 / m2 ** 1.5


def _entropy(a):
    peak = _amplitude_envelope(a)
    if peak <= 0.0:
        return 0.0
    hist = np.bincount(
        np.minimum(((a.x / peak + 1.0) * (HIST_BINS / 2.0)).astype(np.int64), HIST_BINS - 1),
        minlength=HIST_BINS)
    p = hist[hist > 0] / a.n
    return -float(np.dot(p, np.log(p))) / math.log(HIST_BINS)


def _sharpness(a):
    if a.spectral_degenerate:
        return 0.0
    band = np.searchsorted(BARK_EDGES, a.freqs, side="right")   # 1..24 inside the table
    ok = (band >= 1) & (band <= 24)
    bp = np.bincount(band[ok], weights=a.power[ok], minlength=25)[1:25]
    s = bp ** 0.23
    total = float(s.sum())
    if total <= 0.0:
        return 0.0
    z = np.arange(1, 25, dtype=np.float64)
    return float(np.sum(s * _sharpness_weight(z) * z)) / total


def _reverberation(a):
    if a.degenerate:
        return 0.0
    env = a.envelope
    k = int(np.argmax(env))
    tail = env[k:]
    if tail.shape[0] < 2 or env[k] <= 0.0:
        return 0.0
    db = 20.0 * np.log10(np.maximum(tail, env[k] * 1e-6))
    t = np.arange(tail.shape[0]) / a.fs
    return -_ls_slope(t, db)


def _tonality_index(a):
    return min(1.0, max(0.0, 10.0 * math.log10(a.flatness) / -60.0))


def _hnr(a):
    lo_db, hi_db = HNR_RANGE_DB
    if a.degenerate:
        return lo_db
    lo, hi = dsp.pitch_lag_range(a.fs)
    hi = min(hi, a.n - 1)
    if lo >= hi:
        return lo_db
    r = float(np.max(dsp.autocorrelation(a.frame, lo, hi)))
    if r <= 0.0:
        return lo_db
    if r >= 1.0:
        return hi_db
    return min(hi_db, max(lo_db, 10.0 * math.log10(r / (1.0 - r))))


def _relative_variation(v):
    if v.shape[0] < 3:
        return 0.0
    m = float(np.mean(v))
    return float(np.mean(np.abs(np.diff(v)))) / m if m > 0 else 0.0


def _jitter(a):
    return _relative_variation(a.voiced[0])


def _shimmer(a):
    return _relative_variation(a.voiced[1])


def _group_delay(a):
    if a.spectral_degenerate:
        return 0.0
    f = a.freqs
    sel = (f >= 100.0) & (f <= 6000.0)
    if np.count_nonzero(sel) < 2:
        return 0.0
    phi = np.unwrap(a.spectrum.phases[sel])
    dw = 2.0 * math.pi * a.spectrum.bin_hz
    return float(np.mean(-np.diff(phi) / dw))


def _wavelet_features(a):
    if a.degenerate:
        return np.zeros(dsp.DEFAULT_DWT_LEVELS + 1)
    return dsp.dwt_energies(a.frame, dsp.DEFAULT_DWT_LEVELS).relative_energies


def _temporal_spectral_slope(a):
    if a.degenerate:
        return 0.0
    mags = a.subframe_mags
    if mags.shape[0] < 2:
        return 0.0
    p = mags * mags
    tot = p.sum(axis=1)
    ok = tot > REL_FLOOR * tot.max()
    if np.count_nonzero(ok) < 2:
        return 0.0
    f = np.arange(p.shape[1]) * a.fs / a.subframe_len
    cent = (p[ok] @ f) / tot[ok]
    t = (np.flatnonzero(ok) + 0.5) * a.subframe_len / a.fs
    return _ls_slope(t, cent)


def _transient_to_sustained(a):
    mags = a.subframe_mags
    count = mags.shape[0]
    if count < 2 or a.degenerate:
        return 0.0
    flux = dsp.flux_from_spectra(mags)
    med = float(np.median(flux))
    mad = float(np.median(np.abs(flux - med)))
    transient = np.zeros(count, dtype=bool)
    transient[1:] = flux > med + 3.0 * mad
    blocks = a.x[:count * a.subframe_len].reshape(count, a.subframe_len)
    e = np.einsum("ij,ij->i", blocks, blocks)
    return float(e[transient].sum()) / max(float(e[~transient].sum()), EPS)


def _spectral_texture(a):
    if a.spectral_degenerate:
        return 0.0
    details = dsp.dwt(a.log_magnitude_db, TEXTURE_LEVELS)[:-1]
    return float(np.mean([np.std(d) for d in details]))


def _low_band_energy(a):
    return a.band_fractions[0]


def _mid_band_energy(a):
    return a.band_fractions[1]


def _high_band_energy(a):
    return a.band_fractions[2]


def _lh1000(a):
    if a.spectral_degenerate:
        return 0.0
    # guard scaled by total power so the ratio stays level-invariant
    f, p = a.freqs, a.power
    return float(p[f < 1000.0].sum()) / max(float(p[f >= 1000.0].sum()), EPS * a.total_power)


_COMPUTE: Dict[str, Callable[[Analysis], object]] = {
    s.id: globals()["_" + s.id] for s in _REGISTRY
}


# -- vectors ------------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureVector:
    window_index: int
    start_time_s: float
    components: Dict[str, float]

    def values(self) -> np.ndarray:
        return np.array(list(self.components.values()), dtype=np.float64)


def compute_feature(feature_id: str, analysis: Analysis) -> List[float]:
    """Evaluate one feature on a prepared analysis; returns its components."""
    raw = _COMPUTE[feature_id](analysis)
    vals = np.atleast_1d(np.asarray(raw, dtype=np.float64))
    vals = np.where(np.isfinite(vals), vals, 0.0)
    return [float(v) + 0.0 for v in vals]   # + 0.0 folds -0.0


def extract_features(frame, selection: Optional[Iterable[str]] = None,
                     sample_rate_hz: int = None) -> FeatureVector:
    """Compute the selected features for a single frame."""
    specs = resolve_selection(selection)
    frame = as_frame(frame, sample_rate_hz or 16000)
    if sample_rate_hz is not None and frame.sample_rate_hz != sample_rate_hz:
        frame = Frame(frame.samples, frame.index, frame.start_time_s, int(sample_rate_hz))
    a = Analysis(frame)
    comps: Dict[str, float] = {}
    for s in specs:
        for cid, v in zip(s.component_ids, compute_feature(s.id, a)):
            comps[cid] = v
    return FeatureVector(frame.index, frame.start_time_s, comps)


def extract_stream(buf: AudioBuffer, plan: WindowPlan = WindowPlan(),
                   selection: Optional[Iterable[str]] = None) -> List[FeatureVector]:
    specs = resolve_selection(selection)
    ids = [s.id for s in specs]
    return [extract_features(f, ids) for f in window(buf, plan)]


# -- serialisation ----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(v, ".9g")


def vectors_to_csv(vectors: Sequence[FeatureVector], columns: Sequence[str] = None) -> str:
    if columns is None:
        columns = list(vectors[0].components) if vectors else list(component_ids())
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["window_index", "start_time_s", *columns])
    for v in vectors:
        w.writerow([v.window_index, _fmt(v.start_time_s),
                    *(_fmt(v.components[c]) for c in columns)])
    return out.getvalue()


def vectors_to_json(vectors: Sequence[FeatureVector]) -> str:
    rows = []
    for v in vectors:
        row = {"window_index": v.window_index, "start_time_s": float(_fmt(v.start_time_s))}
        row.update((k, float(_fmt(x))) for k, x in v.components.items())
        rows.append(row)
    return json.dumps(rows, indent=1) + "\n"


def read_feature_csv(path) -> Tuple[List[str], Dict[str, np.ndarray]]:
    """Load a feature CSV: returns row ids (first column) and component columns.

    The ``start_time_s`` column, when present, is not treated as a feature.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise ValueError(f"{path}: need an id column and at least one feature column")
    cols = [c for c in header[1:] if c != "start_time_s"]
    pos = [header.index(c) for c in cols]
    ids, data = [], []
    for ln, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}:{ln}: expected {len(header)} fields, got {len(r)}")
        ids.append(r[0])
        try:
            data.append([float(r[p]) for p in pos])
        except ValueError:
            raise ValueError(f"{path}:{ln}: non-numeric value") from None
    arr = np.array(data, dtype=np.float64).reshape(len(body), len(cols))
    return ids, {c: arr[:, i] for i, c in enumerate(cols)}
