"""Tempograms: time-tempo representations of an onset novelty curve.

Three views of periodicity are computed from one novelty curve. The Fourier
tempogram measures the magnitude of the windowed Fourier coefficient at each
tempo's frequency (tempo harmonics show up above the true tempo). The
autocorrelation tempogram measures lag-domain self-similarity (subharmonics
show up below). Cyclic tempograms fold either one over octaves by summing
all tempi related by powers of two, which removes octave ambiguity.

Tempo grid: 1 BPM resolution over [30, 480]. Analysis window 8 s, hop 1 s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import Spectrogram, stft
from .types import FeatureVector

TEMPO_MIN = 30
TEMPO_MAX = 480
TEMPO_AXIS = np.arange(TEMPO_MIN, TEMPO_MAX + 1, dtype=np.float64)

ANALYSIS_WINDOW_S = 8.0
ANALYSIS_HOP_S = 1.0
LOG_COMPRESSION = 1000.0
REF_TEMPO = 60.0
N_SCALE_BINS = 15
TOP_BINS = 4


@dataclass
class NoveltyCurve:
    """Frame-wise onset strength; peaks mark percussive/note onsets."""

    values: np.ndarray
    frame_rate: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("novelty values must be finite and nonnegative")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")


@dataclass
class Tempogram:
    """time_frames x tempo_bins magnitudes on the shared BPM axis."""

    magnitudes: np.ndarray
    tempo_axis: np.ndarray = field(repr=False)
    kind: str = "fourier"  # "fourier" or "autocorr"

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float64)
        self.tempo_axis = np.asarray(self.tempo_axis, dtype=np.float64)
        if not np.all(np.isfinite(self.magnitudes)) or np.any(self.magnitudes < 0):
            raise ValueError("tempogram magnitudes must be finite and nonnegative")
        if np.any(np.diff(self.tempo_axis) <= 0):
            raise ValueError("tempo_axis must be strictly increasing")


@dataclass
class CyclicTempogram:
    """time_frames x scale_bins, scales s in [1, 2) relative to ref_tempo."""

    magnitudes: np.ndarray
    scale_axis: np.ndarray = field(repr=False)
    ref_tempo: float = REF_TEMPO
    kind: str = "cyclic_fourier"

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float64)
        self.scale_axis = np.asarray(self.scale_axis, dtype=np.float64)
        if np.any(self.scale_axis < 1.0) or np.any(self.scale_axis >= 2.0):
            raise ValueError("scale_axis must lie in [1, 2)")
        if np.any(self.magnitudes < 0) or not np.all(np.isfinite(self.magnitudes)):
            raise ValueError("cyclic magnitudes must be finite and nonnegative")


def novelty_curve(spec: Spectrogram) -> NoveltyCurve:
    """Spectral-flux onset novelty with log compression and local-mean removal.

    Magnitudes are compressed as log(1 + 1000*|X|), differenced across
    frames, half-wave rectified, summed over bins, then a centered 1 s
    moving average is subtracted and the result rectified again.
    """
    if spec.n_frames < 2:
        raise ValueError("novelty needs at least 2 spectrogram frames")
    compressed = np.log1p(LOG_COMPRESSION * spec.magnitudes)
    diff = np.diff(compressed, axis=0)
    raw = np.clip(diff, 0.0, None).sum(axis=1)

    win = max(1, int(round(spec.frame_rate)))
    kernel = np.ones(win)
    local_sum = np.convolve(raw, kernel, mode="same")
    counts = np.convolve(np.ones_like(raw), kernel, mode="same")
    novelty = np.clip(raw - local_sum / counts, 0.0, None)
    return NoveltyCurve(novelty, spec.frame_rate)


def _frame_params(nov: NoveltyCurve, window_s: float, hop_s: float) -> tuple[int, int]:
    win = int(round(window_s * nov.frame_rate))
    hop = max(1, int(round(hop_s * nov.frame_rate)))
    if nov.values.size < win:
        raise ValueError(
            f"novelty has {nov.values.size} frames; analysis window needs {win}"
        )
    min_win = int(np.ceil(60.0 * nov.frame_rate / TEMPO_MIN)) + 1
    if win < min_win:
        raise ValueError(f"window of {win} frames cannot resolve {TEMPO_MIN} BPM")
    return win, hop


def _segments(values: np.ndarray, win: int, hop: int) -> np.ndarray:
    n_frames = 1 + (values.size - win) // hop
    segs = np.lib.stride_tricks.sliding_window_view(values, win)[::hop]
    return segs[:n_frames]


def fourier_tempogram(
    nov: NoveltyCurve,
    window_s: float = ANALYSIS_WINDOW_S,
    hop_s: float = ANALYSIS_HOP_S,
) -> Tempogram:
    """Magnitude of the windowed Fourier coefficient at each tempo's rate.

    For tempo tau (BPM) the probed frequency is tau/60 Hz; each analysis
    window is Hann-tapered before the inner product.
    """
    win, hop = _frame_params(nov, window_s, hop_s)
    segs = _segments(nov.values, win, hop)
    t = np.arange(win) / nov.frame_rate
    freqs = TEMPO_AXIS / 60.0
    kernel = np.hanning(win)[:, None] * np.exp(-2j * np.pi * np.outer(t, freqs))
    mags = np.abs(segs @ kernel)
    return Tempogram(mags, TEMPO_AXIS.copy(), kind="fourier")


def autocorr_tempogram(
    nov: NoveltyCurve,
    window_s: float = ANALYSIS_WINDOW_S,
    hop_s: float = ANALYSIS_HOP_S,
) -> Tempogram:
    """Windowed normalized autocorrelation mapped onto the BPM axis.

    Each Hann-tapered window is autocorrelated (biased estimate, normalized
    by the zero-lag value); lag ell maps to 60*frame_rate/ell BPM and the
    lag-domain curve is linearly interpolated onto the shared 1-BPM grid.
    An all-zero window yields an all-zero row.
    """
    win, hop = _frame_params(nov, window_s, hop_s)
    segs = _segments(nov.values, win, hop) * np.hanning(win)

    nfft = int(2 ** np.ceil(np.log2(2 * win)))
    spec_pow = np.abs(np.fft.rfft(segs, n=nfft, axis=1)) ** 2
    acf = np.fft.irfft(spec_pow, n=nfft, axis=1)[:, :win] / win

    zero_lag = acf[:, :1]
    with np.errstate(invalid="ignore", divide="ignore"):
        acf_norm = np.where(zero_lag > 0, acf / np.where(zero_lag > 0, zero_lag, 1.0), 0.0)
    acf_norm = np.clip(acf_norm, 0.0, None)

    # Resample lag axis onto the BPM grid (ascending lags for np.interp).
    lags_for_bpm = 60.0 * nov.frame_rate / TEMPO_AXIS  # descending in BPM
    lag_axis = np.arange(win, dtype=np.float64)
    mags = np.empty((acf_norm.shape[0], TEMPO_AXIS.size))
    for i, row in enumerate(acf_norm):
        mags[i] = np.interp(lags_for_bpm, lag_axis, row)
    return Tempogram(mags, TEMPO_AXIS.copy(), kind="autocorr")


def cyclic_tempogram(
    tg: Tempogram, ref_tempo: float = REF_TEMPO, n_scales: int = N_SCALE_BINS
) -> CyclicTempogram:
    """Fold a tempogram over octaves: sum magnitudes at all tempi s*rho*2^k.

    Scale bins are log-spaced in [1, 2). Tempi are read off the BPM grid by
    linear interpolation; octaves falling outside the axis are skipped.
    """
    if not (TEMPO_MIN <= ref_tempo <= TEMPO_MAX):
        raise ValueError(f"ref_tempo must lie in [{TEMPO_MIN}, {TEMPO_MAX}]")
    if n_scales < 4:
        raise ValueError("need at least 4 scale bins")

    scales = 2.0 ** (np.arange(n_scales) / n_scales)
    axis = tg.tempo_axis
    weights = np.zeros((n_scales, axis.size))
    for j, s in enumerate(scales):
        k_lo = int(np.ceil(np.log2(axis[0] / (s * ref_tempo))))
        k_hi = int(np.floor(np.log2(axis[-1] / (s * ref_tempo))))
        for k in range(k_lo, k_hi + 1):
            tempo = s * ref_tempo * 2.0**k
            idx = np.searchsorted(axis, tempo)
            if idx == 0:
                weights[j, 0] += 1.0
            elif idx >= axis.size:
                weights[j, -1] += 1.0
            else:
                frac = (tempo - axis[idx - 1]) / (axis[idx] - axis[idx - 1])
                weights[j, idx - 1] += 1.0 - frac
                weights[j, idx] += frac
    mags = tg.magnitudes @ weights.T
    kind = f"cyclic_{tg.kind}"
    return CyclicTempogram(np.clip(mags, 0.0, None), scales, ref_tempo, kind)


def tempogram_summary(tg: Tempogram | CyclicTempogram, top_n: int = TOP_BINS) -> FeatureVector:
    """Per-bin statistics of the strongest tempo (or scale) bins.

    Bins are ranked by time-averaged magnitude; each of the top_n bins
    contributes its axis value (BPM or scale), time-mean magnitude, temporal
    std, and strength relative to the rank-1 bin. An all-zero tempogram
    yields an all-zero summary.
    """
    if top_n < 1:
        raise ValueError("top_n must be at least 1")
    axis = tg.tempo_axis if isinstance(tg, Tempogram) else tg.scale_axis
    axis_name = "bpm" if isinstance(tg, Tempogram) else "scale"
    if top_n > axis.size:
        raise ValueError(f"top_n {top_n} exceeds {axis.size} bins")

    mean_mag = tg.magnitudes.mean(axis=0)
    std_mag = tg.magnitudes.std(axis=0)
    order = np.argsort(-mean_mag, kind="stable")[:top_n]
    strongest = mean_mag[order[0]]

    values, names, groups = [], [], []
    for rank, b in enumerate(order, start=1):
        if strongest > 0:
            row = [axis[b], mean_mag[b], std_mag[b], mean_mag[b] / strongest]
        else:
            row = [0.0, 0.0, 0.0, 0.0]
        values.extend(row)
        prefix = f"tg_{tg.kind}_r{rank}"
        names.extend(
            [f"{prefix}_{axis_name}", f"{prefix}_mag_mean", f"{prefix}_mag_std", f"{prefix}_rel_strength"]
        )
        groups.extend(["tempogram"] * 4)
    return FeatureVector(np.array(values), names, groups)


def tempogram_feature_vector(clip, top_n: int = TOP_BINS) -> FeatureVector:
    """64-dim tempogram block: 4 representations x top-4 bins x 4 statistics."""
    if clip.duration < 10.0:
        raise ValueError("tempogram features need at least 10 s of audio")
    nov = novelty_curve(stft(clip))
    return tempogram_features_from_novelty(nov, top_n=top_n)


def tempogram_features_from_novelty(nov: NoveltyCurve, top_n: int = TOP_BINS) -> FeatureVector:
    ftg = fourier_tempogram(nov)
    atg = autocorr_tempogram(nov)
    parts = [
        tempogram_summary(ftg, top_n),
        tempogram_summary(atg, top_n),
        tempogram_summary(cyclic_tempogram(ftg), top_n),
        tempogram_summary(cyclic_tempogram(atg), top_n),
    ]
    return FeatureVector.concat(parts)
