"""Privacy-aware acoustic feature extraction.

Top-level API::

    extract_privacy_features(source, feature_list=None, window_size=500.0, sampling_rate=16000)
    get_metrics(feature_name)
    optimize_features_with_puc_tradeoff(category="interior", latency=100.0, alpha=0.5)
"""
from typing import Dict, List, Optional, Sequence

import numpy as np

from ._backend import BACKEND
from .catalog import (
    FeatureSpec,
    FeatureVector,
    component_ids,
    extract_features,
    extract_stream,
    registry,
)
from .errors import PrivfeatError
from .leakage import CsliInput, SiliAttribute, SiliInput, csli, sili
from .selector import (
    ScoreTable,
    SelectionRequest,
    SelectionResult,
    load_score_table,
    select,
    sweep_alpha,
)
from .signal import AudioBuffer, Frame, WindowPlan, decode_wav, read_wav, resample, window

__version__ = "0.1.0"


def _as_buffer(source, sampling_rate: int) -> AudioBuffer:
    if isinstance(source, AudioBuffer):
        buf = source
    elif isinstance(source, (bytes, bytearray)):
        buf = decode_wav(source)
    elif isinstance(source, np.ndarray):
        buf = AudioBuffer(source, sampling_rate)
    else:
        buf = read_wav(source)
    return buf if buf.sample_rate_hz == sampling_rate else resample(buf, sampling_rate)


def extract_privacy_features(source, feature_list: Optional[Sequence[str]] = None,
                             window_size: float = 500.0, sampling_rate: int = 16000,
                             hop_size: Optional[float] = None) -> List[Dict[str, float]]:
    """Extract features window by window.

    ``source`` is a WAV path, WAV bytes, an :class:`AudioBuffer`, or a numpy
    array already sampled at ``sampling_rate``. ``window_size`` and
    ``hop_size`` are in milliseconds. Returns one dict per window.
    """
    buf = _as_buffer(source, sampling_rate)
    vectors = extract_stream(buf, WindowPlan(window_size, hop_size), feature_list)
    return [dict(v.components) for v in vectors]


def get_metrics(feature_name: str, metrics_dir: Optional[str] = None) -> dict:
    from .selector import get_metrics as _get
    return _get(feature_name, load_score_table(metrics_dir))


def optimize_features_with_puc_tradeoff(category: str = "interior", latency: float = 100.0,
                                        alpha: float = 0.5,
                                        metrics_dir: Optional[str] = None) -> List[str]:
    """Feature subset for ``category`` within ``latency`` milliseconds per window."""
    req = SelectionRequest(category, alpha, latency)
    return list(select(load_score_table(metrics_dir), req).selected)


__all__ = [
    "AudioBuffer", "BACKEND", "CsliInput", "FeatureSpec", "FeatureVector", "Frame",
    "PrivfeatError", "ScoreTable", "SelectionRequest", "SelectionResult", "SiliAttribute",
    "SiliInput", "WindowPlan", "component_ids", "csli", "decode_wav",
    "extract_features", "extract_privacy_features", "extract_stream", "get_metrics",
    "load_score_table", "optimize_features_with_puc_tradeoff", "read_wav", "registry",
    "resample", "select", "sili", "sweep_alpha", "window",
]
