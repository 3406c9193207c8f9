"""Audio ingestion: WAV decoding, resampling and sliding-window framing."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import List

import numpy as np

from .errors import (
    BufferTooShort,
    MalformedHeader,
    TruncatedData,
    UnsupportedEncoding,
)

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_WINDOW_MS = 500.0
MIN_WINDOW_SAMPLES = 32

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

TAPERS = ("rectangular", "hann")


@dataclass(frozen=True)
class AudioBuffer:
    """Mono sample stream, amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if int(self.sample_rate_hz) <= 0:
            raise ValueError("sample_rate_hz must be positive")
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("AudioBuffer holds mono audio only")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x = np.clip(x, -1.0, 1.0)
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class WindowPlan:
    window_ms: float = DEFAULT_WINDOW_MS
    hop_ms: float = None
    taper: str = "rectangular"

    def __post_init__(self):
        if not self.window_ms > 0:
            raise ValueError("window_ms must be positive")
        if self.hop_ms is None:
            object.__setattr__(self, "hop_ms", self.window_ms / 2.0)
        if not 0 < self.hop_ms <= self.window_ms:
            raise ValueError("hop_ms must satisfy 0 < hop_ms <= window_ms")
        if self.taper not in TAPERS:
            raise ValueError(f"taper must be one of {TAPERS}")

    def window_samples(self, sample_rate_hz: int) -> int:
        n = int(round(self.window_ms * sample_rate_hz / 1000.0))
        if n < MIN_WINDOW_SAMPLES:
            raise ValueError(
                f"window of {self.window_ms} ms at {sample_rate_hz} Hz is {n} samples; "
                f"at least {MIN_WINDOW_SAMPLES} required"
            )
        return n

    def hop_samples(self, sample_rate_hz: int) -> int:
        return max(1, int(round(self.hop_ms * sample_rate_hz / 1000.0)))


@dataclass(frozen=True, eq=False)
class Frame:
    samples: np.ndarray
    index: int
    start_time_s: float
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("frame must be one-dimensional")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.shape[0]


def as_frame(x, sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> Frame:
    """Wrap a bare array (or pass a Frame through) for kernel calls."""
    if isinstance(x, Frame):
        return x
    return Frame(np.asarray(x, dtype=np.float64), 0, 0.0, int(sample_rate_hz))


# -- WAV ------------------------------------------------------------------------

def _iter_chunks(data: bytes, offset: int):
    n = len(data)
    while offset + 8 <= n:
        cid, size = struct.unpack_from("<4sI", data, offset)
        yield cid, offset + 8, size
        offset += 8 + size + (size & 1)


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode a RIFF/WAVE byte string to a mono :class:`AudioBuffer`.

    Supports 16-bit integer PCM and 32-bit IEEE float, any channel count.
    Channels are averaged. 16-bit samples are divided by 32768.
    """
    data = bytes(data)
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedHeader("not a RIFF/WAVE stream")

    fmt = None
    pcm = None
    for cid, start, size in _iter_chunks(data, 12):
        if cid == b"fmt ":
            if size < 16 or start + 16 > len(data):
                raise MalformedHeader("fmt chunk too short")
            tag, channels, rate, _, block_align, bits = struct.unpack_from(
                "<HHIIHH", data, start)
            if tag == _WAVE_FORMAT_EXTENSIBLE:
                if size < 40 or start + 40 > len(data):
                    raise MalformedHeader("extensible fmt chunk too short")
                # first two bytes of the sub-format GUID carry the real tag
                tag = struct.unpack_from("<H", data, start + 24)[0]
            fmt = (tag, channels, rate, block_align, bits)
        elif cid == b"data":
            if fmt is None:
                raise MalformedHeader("data chunk precedes fmt chunk")
            end = start + size
            if end > len(data):
                raise TruncatedData(
                    f"data chunk declares {size} bytes, {len(data) - start} present")
            pcm = data[start:end]
            break
    if fmt is None:
        raise MalformedHeader("missing fmt chunk")
    if pcm is None:
        raise MalformedHeader("missing data chunk")

    tag, channels, rate, block_align, bits = fmt
    if channels < 1 or rate <= 0:
        raise MalformedHeader("invalid channel count or sample rate")
    if tag == _WAVE_FORMAT_PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / 32768.0
    elif tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedEncoding(f"format tag {tag:#06x} with {bits} bits per sample")

    frame_bytes = dtype.itemsize * channels
    if len(pcm) % frame_bytes:
        raise TruncatedData("data chunk ends inside a sample frame")
    x = np.frombuffer(pcm, dtype=dtype).astype(np.float64) * scale
    x = x.reshape(-1, channels).mean(axis=1)
    return AudioBuffer(x, rate)


def encode_wav(buf: AudioBuffer, encoding: str = "pcm16") -> bytes:
    """Inverse of :func:`decode_wav` for mono buffers (used by tests and tools)."""
    x = np.asarray(buf.samples, dtype=np.float64)
    if encoding == "pcm16":
        payload = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        tag, bits = _WAVE_FORMAT_PCM, 16
    elif encoding == "float32":
        payload = x.astype("<f4").tobytes()
        tag, bits = _WAVE_FORMAT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, buf.sample_rate_hz,
                      buf.sample_rate_hz * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def read_wav(path) -> AudioBuffer:
    with open(path, "rb") as fh:
        return decode_wav(fh.read())


# -- resampling -------------------------------------------------------------------

_KERNEL_TAPS = 64          # kernel width, in samples of the slower rate
_KAISER_BETA = 5.65        # ~60 dB stopband
_ROLLOFF = 0.94            # passband edge as a fraction of the output Nyquist


@lru_cache(maxsize=16)
def _phase_table(up: int, down: int):
    """Per-phase interpolation weights for the rational ratio ``up/down``.

    Output sample ``m`` sits at input position ``m*down/up``; its fractional
    part takes one of ``up`` values, so one weight row per phase suffices.
    Rows are normalised to unit sum so DC passes exactly.
    """
    stretch = max(1.0, down / up)            # >1 when decimating
    half = int(math.ceil(_KERNEL_TAPS / 2 * stretch))
    offsets = np.arange(-half + 1, half + 1)
    frac = np.arange(up) * down % up / up
    t = offsets[None, :] - frac[:, None]     # distance from each tap, input samples
    cutoff = _ROLLOFF / stretch              # relative to input Nyquist
    w = np.i0(_KAISER_BETA * np.sqrt(np.clip(1.0 - (t / half) ** 2, 0.0, None)))
    h = np.sinc(cutoff * t) * w / np.i0(_KAISER_BETA)
    h /= h.sum(axis=1, keepdims=True)
    h.setflags(write=False)
    offsets.setflags(write=False)
    return offsets, h


def resample(buf: AudioBuffer, target_hz: int, chunk: int = 1 << 14) -> AudioBuffer:
    """Windowed-sinc polyphase resampling to ``target_hz``.

    Signal ends are extended by repeating the edge sample, so constants
    survive resampling unchanged.
    """
    target_hz = int(target_hz)
    if target_hz <= 0:
        raise ValueError("target_hz must be positive")
    src = buf.sample_rate_hz
    if target_hz == src:
        return buf
    g = math.gcd(src, target_hz)
    up, down = target_hz // g, src // g
    x = np.asarray(buf.samples, dtype=np.float64)
    n_out = int(round(len(x) * target_hz / src))
    if len(x) == 0 or n_out == 0:
        return AudioBuffer(np.zeros(0), target_hz)

    offsets, table = _phase_table(up, down)
    out = np.empty(n_out)
    last = len(x) - 1
    for lo in range(0, n_out, chunk):
        m = np.arange(lo, min(lo + chunk, n_out), dtype=np.int64)
        base = m * down // up
        phase = m * down % up
        idx = np.clip(base[:, None] + offsets[None, :], 0, last)
        out[lo:lo + len(m)] = np.einsum("ij,ij->i", x[idx], table[phase])
    return AudioBuffer(out, target_hz)


# -- framing -------------------------------------------------------------------------

def frame_count(n_samples: int, window: int, hop: int) -> int:
    if n_samples < window:
        return 0
    return (n_samples - window) // hop + 1


def taper_window(name: str, n: int) -> np.ndarray:
    if name == "rectangular":
        return np.ones(n)
    if name == "hann":
        return _hann(n)
    raise ValueError(f"unknown taper {name!r}")


@lru_cache(maxsize=32)
def _hann(n: int) -> np.ndarray:
    # periodic Hann: no zero at both ends, sums to n/2
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    w.setflags(write=False)
    return w


def window(buf: AudioBuffer, plan: WindowPlan = WindowPlan()) -> List[Frame]:
    """Cut ``buf`` into equal-length frames; the trailing partial window is dropped."""
    fs = buf.sample_rate_hz
    w = plan.window_samples(fs)
    h = plan.hop_samples(fs)
    n = len(buf)
    if n < w:
        raise BufferTooShort(f"buffer has {n} samples, window needs {w}")
    taper = None if plan.taper == "rectangular" else taper_window(plan.taper, w)
    frames = []
    for i in range(frame_count(n, w, h)):
        seg = buf.samples[i * h:i * h + w]
        if taper is not None:
            seg = seg * taper
        frames.append(Frame(seg, i, i * plan.hop_ms / 1000.0, fs))
    return frames
