"""Numerical primitives shared by the feature catalog.

All functions are pure; cached tables (tapers, wavelet filters) are
read-only arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import _backend
from .errors import DegenerateFrame, FrameTooShort
from .signal import MIN_WINDOW_SAMPLES, as_frame, taper_window

# Daubechies wavelet with 4 vanishing moments (8 taps), reconstruction low-pass.
DB4_LOWPASS = np.array([
    0.23037781330885523,
    0.7148465705525415,
    0.6308807679295904,
    -0.02798376941698385,
    -0.18703481171888114,
    0.030841381835986965,
    0.032883011666982945,
    -0.010597401784997278,
])
# quadrature-mirror high-pass: g[k] = (-1)^k h[L-1-k]
DB4_HIGHPASS = DB4_LOWPASS[::-1] * np.array([(-1.0) ** k for k in range(8)])
DB4_LOWPASS.setflags(write=False)
DB4_HIGHPASS.setflags(write=False)

DEFAULT_DWT_LEVELS = 5
DEFAULT_SMOOTHING_MS = 10.0
DEFAULT_SUBFRAME_MS = 50.0
PEAK_MEDIAN_BINS = 9


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided spectrum of a (tapered, zero-padded) frame."""

    magnitudes: np.ndarray
    phases: np.ndarray
    bin_hz: float
    fft_size: int
    sample_rate_hz: int

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.magnitudes.shape[0]) * self.bin_hz

    def power(self) -> np.ndarray:
        """Per-bin energy; sums to the time-domain energy of the input."""
        p = self.magnitudes ** 2 / self.fft_size
        p[1:-1] *= 2.0
        return p

    def complex(self) -> np.ndarray:
        return self.magnitudes * np.exp(1j * self.phases)

    def inverse(self, length: int = None) -> np.ndarray:
        x = np.fft.irfft(self.complex(), n=self.fft_size)
        return x if length is None else x[:length]


def fft_spectrum(frame, taper: str = "hann", sample_rate_hz: int = None) -> Spectrum:
    frame = as_frame(frame, sample_rate_hz or 16000)
    fs = sample_rate_hz or frame.sample_rate_hz
    x = frame.samples
    n = x.shape[0]
    if n < MIN_WINDOW_SAMPLES:
        raise FrameTooShort(f"frame has {n} samples, need {MIN_WINDOW_SAMPLES}")
    if taper != "rectangular":
        x = x * taper_window(taper, n)
    size = next_pow2(n)
    X = np.fft.rfft(x, n=size)
    X[0] = X[0].real
    X[-1] = X[-1].real
    mag = np.abs(X)
    ph = np.angle(X)
    ph[ph <= -np.pi] = np.pi
    return Spectrum(mag, ph, fs / size, size, fs)


@dataclass(frozen=True, eq=False)
class EnvelopeSeries:
    values: np.ndarray
    smoothing_ms: float


def moving_average(x: np.ndarray, width: int) -> np.ndarray:
    """Centred moving average; windows are truncated (not zero-padded) at the ends."""
    n = x.shape[0]
    if width <= 1 or n == 0:
        return x.astype(np.float64, copy=True)
    c = np.concatenate(([0.0], np.cumsum(x, dtype=np.float64)))
    idx = np.arange(n)
    lo = np.clip(idx - width // 2, 0, n)
    hi = np.clip(idx + (width - 1) // 2 + 1, 0, n)
    return (c[hi] - c[lo]) / (hi - lo)


def analytic_envelope(frame, smoothing_ms: float = DEFAULT_SMOOTHING_MS,
                      sample_rate_hz: int = None) -> EnvelopeSeries:
    """Rectify-and-smooth approximation of the analytic-signal magnitude."""
    if smoothing_ms < 0:
        raise ValueError("smoothing_ms must be non-negative")
    frame = as_frame(frame, sample_rate_hz or 16000)
    fs = sample_rate_hz or frame.sample_rate_hz
    width = int(round(smoothing_ms * fs / 1000.0))
    env = moving_average(np.abs(frame.samples), width)
    np.maximum(env, 0.0, out=env)
    return EnvelopeSeries(env, float(smoothing_ms))


def autocorrelation(frame, min_lag: int, max_lag: int) -> np.ndarray:
    """Energy-normalised autocorrelation ``r[tau]`` for ``tau`` in ``[min_lag, max_lag]``.

    Raises :class:`DegenerateFrame` (carrying an all-zero result) on a
    zero-energy frame.
    """
    x = as_frame(frame).samples
    n = x.shape[0]
    if not 0 < min_lag < max_lag < n:
        raise ValueError(f"need 0 < min_lag < max_lag < {n}, got {min_lag}, {max_lag}")
    energy = float(np.dot(x, x))
    if energy <= 0.0:
        raise DegenerateFrame("zero-energy frame",
                              correlations=np.zeros(max_lag - min_lag + 1))
    size = next_pow2(2 * n)
    X = np.fft.rfft(x, n=size)
    acf = np.fft.irfft(X.real ** 2 + X.imag ** 2, n=size)[min_lag:max_lag + 1]
    return np.clip(acf / energy, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class DwtEnergies:
    relative_energies: np.ndarray   # detail levels 1..L (finest first), then approximation


def dwt(x: np.ndarray, levels: int, lo=DB4_LOWPASS, hi=DB4_HIGHPASS):
    """Periodised multi-level DWT. Returns ``[d1, ..., dL, aL]``.

    Odd-length intermediate signals are extended by one repeated sample.
    """
    a = np.asarray(x, dtype=np.float64)
    out = []
    for _ in range(levels):
        if a.shape[0] % 2:
            a = np.append(a, a[-1])
        a, d = _backend.dwt_step(a, lo, hi)
        out.append(np.asarray(d))
        a = np.asarray(a)
    out.append(a)
    return out


def dwt_energies(frame, levels: int = DEFAULT_DWT_LEVELS) -> DwtEnergies:
    x = as_frame(frame).samples
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if x.shape[0] < 2 ** levels:
        raise FrameTooShort(f"{levels} DWT levels need {2 ** levels} samples")
    e = np.array([float(np.dot(c, c)) for c in dwt(x, levels)])
    total = e.sum()
    if total <= 0.0:
        return DwtEnergies(np.zeros(levels + 1))
    return DwtEnergies(e / total)


def spectral_peaks(spec: Spectrum, max_peaks: int = 20,
                   min_prominence_db: float = 10.0) -> List[Tuple[float, float]]:
    """Local maxima standing ``min_prominence_db`` above the 9-bin local median.

    Sorted by magnitude (descending), truncated to ``max_peaks``.
    """
    if max_peaks < 1:
        raise ValueError("max_peaks must be >= 1")
    m = spec.magnitudes
    k = m.shape[0]
    if k < 3:
        return []
    cand = np.flatnonzero((m[1:-1] > m[:-2]) & (m[1:-1] > m[2:])) + 1
    if cand.size == 0:
        return []
    half = PEAK_MEDIAN_BINS // 2
    padded = np.pad(m, half, mode="edge")
    local = np.median(
        np.lib.stride_tricks.sliding_window_view(padded, PEAK_MEDIAN_BINS)[cand], axis=1)
    ratio = min_prominence_db / 20.0
    keep = m[cand] >= local * 10.0 ** ratio
    cand = cand[keep]
    order = np.lexsort((cand, -m[cand]))
    cand = cand[order][:max_peaks]
    return [(float(i * spec.bin_hz), float(m[i])) for i in cand]


def subframe_spectra(x: np.ndarray, sub_len: int) -> np.ndarray:
    """Hann-tapered magnitude spectra of consecutive non-overlapping sub-frames."""
    count = x.shape[0] // sub_len
    blocks = x[:count * sub_len].reshape(count, sub_len) * taper_window("hann", sub_len)
    return np.abs(np.fft.rfft(blocks, axis=1))


def subframe_flux(frame, subframe_ms: float = DEFAULT_SUBFRAME_MS,
                  sample_rate_hz: int = None) -> np.ndarray:
    """Positive spectral flux between consecutive sub-frames (length = count - 1)."""
    frame = as_frame(frame, sample_rate_hz or 16000)
    fs = sample_rate_hz or frame.sample_rate_hz
    if subframe_ms < 5:
        raise ValueError("subframe_ms must be >= 5")
    sub_len = int(round(subframe_ms * fs / 1000.0))
    if len(frame) // sub_len < 2:
        raise FrameTooShort("fewer than two sub-frames fit in the frame")
    mags = subframe_spectra(frame.samples, sub_len)
    return flux_from_spectra(mags)


def flux_from_spectra(mags: np.ndarray) -> np.ndarray:
    return np.maximum(mags[1:] - mags[:-1], 0.0).sum(axis=1)


def pitch_lag_range(sample_rate_hz: int, fmin: float = 60.0, fmax: float = 400.0):
    return int(math.ceil(sample_rate_hz / fmax)), int(math.floor(sample_rate_hz / fmin))
