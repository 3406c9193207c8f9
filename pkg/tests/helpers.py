import numpy as np

FS = 16000
WIN = 8000  # 500 ms at 16 kHz

ACCEPTANCE_LINES = []


def record_acceptance(number, title, passed, detail=""):
    ACCEPTANCE_LINES.append((number, title, passed, detail))


def tone(freq, amp=1.0, n=WIN, fs=FS, phase=0.0):
    t = np.arange(n) / fs
    return amp * np.sin(2 * np.pi * freq * t + phase)


SCALE_INVARIANT = (
    "zcr", "temporal_centroid", "spectral_centroid", "spectral_spread",
    "spectral_entropy", "spectral_flatness", "spectral_irregularity", "skewness",
    "kurtosis", "entropy", "wavelet_e0", "wavelet_e1", "wavelet_e2", "wavelet_e3",
    "wavelet_e4", "wavelet_e5", "low_band_energy", "mid_band_energy",
    "high_band_energy", "lh1000", "tonality_index", "hnr", "jitter", "shimmer",
)

UNIT_BOUNDED = (
    "zcr", "temporal_centroid", "silence_ratio", "spectral_entropy", "spectral_flatness",
    "low_band_energy", "mid_band_energy", "high_band_energy", "tonality_index",
    "wavelet_e0", "wavelet_e1", "wavelet_e2", "wavelet_e3", "wavelet_e4", "wavelet_e5",
)

FRAME_KINDS = ("noise", "tone", "harmonic", "burst", "chirp", "am_noise", "sparse")


def random_frame(rng, kind=None, n=WIN, fs=FS):
    """Seeded test frame with peak amplitude at most 0.3."""
    kind = kind or FRAME_KINDS[int(rng.integers(len(FRAME_KINDS)))]
    t = np.arange(n) / fs
    if kind == "noise":
        x = rng.normal(size=n)
    elif kind == "tone":
        x = np.sin(2 * np.pi * rng.uniform(50, 7000) * t + rng.uniform(0, 6)) \
            + 0.01 * rng.normal(size=n)
    elif kind == "harmonic":
        f0 = rng.uniform(80, 350) * (1 + 0.02 * np.sin(2 * np.pi * 5 * t))
        ph = 2 * np.pi * np.cumsum(f0) / fs
        x = sum(np.sin(k * ph) / k for k in range(1, 8)) * (0.5 + 0.5 * np.sin(2 * np.pi * 3 * t))
    elif kind == "burst":
        x = np.zeros(n)
        s = int(rng.integers(0, n - 800))
        x[s:s + 800] = rng.normal(size=800) * np.exp(-np.arange(800) / 150)
    elif kind == "chirp":
        f = np.linspace(rng.uniform(100, 1000), rng.uniform(2000, 7000), n)
        x = np.sin(2 * np.pi * np.cumsum(f) / fs)
    elif kind == "am_noise":
        x = rng.uniform(-1, 1, n) * (1 + np.sin(2 * np.pi * rng.uniform(1, 20) * t))
    else:
        x = np.zeros(n)
        idx = rng.integers(0, n, 20)
        x[idx] = rng.normal(size=20)
    peak = np.max(np.abs(x))
    return 0.3 * x / peak if peak > 0 else x


def brute_force_optimum(benefit, latency, budget):
    """Best achievable sum of benefits over all 2^n subsets within the budget."""
    import itertools
    best = 0.0
    for mask in itertools.product((0, 1), repeat=len(benefit)):
        if sum(t for t, m in zip(latency, mask) if m) <= budget:
            best = max(best, sum(b for b, m in zip(benefit, mask) if m))
    return best


def random_instance(rng):
    n = int(rng.integers(3, 16))
    return (rng.uniform(0, 1, n), rng.uniform(0, 1, n), rng.uniform(1, 20, n),
            float(rng.uniform(5, 60)), float(rng.choice([0, 0.3, 0.5, 0.8, 1])))
