"""Moving-window LF spectrogram, peak trajectories, and variance features.

A fixed-length window slides over the envelope; each chunk gets the same
treatment as the whole-utterance spectrum (mean removal, zero-padded FFT,
(0, 10] Hz band, per-row max normalization). Per frame, the dominant peaks
are ranked by magnitude; the k-th ranked peak across frames forms the k-th
frequency/magnitude trajectory, and the population variance of each
trajectory is the feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envelope import Envelope
from .errors import ClipTooShortError
from .lf_spectrum import _detect_peaks, _next_pow2, _rank_by_magnitude


@dataclass(frozen=True)
class LfSpectrogram:
    """Stack of per-window LF spectra; rows are individually normalized."""

    frame_times_s: np.ndarray
    freqs_hz: np.ndarray
    mags: np.ndarray  # (frames, bins)
    window_s: float
    hop_s: float
    resolution_hz: float
    kind: str

    @property
    def n_frames(self) -> int:
        return self.mags.shape[0]


@dataclass(frozen=True)
class TrajectorySet:
    """Rank-k peak frequency and magnitude across frames, k = 1..n."""

    formant_freq_traj: np.ndarray  # (n, frames)
    formant_mag_traj: np.ndarray  # (n, frames)
    frame_times_s: np.ndarray


def frame_count(n_env: int, window: int, hop: int) -> int:
    """Number of full windows: floor((n_env - window) / hop) + 1."""
    if n_env < window:
        raise ClipTooShortError("envelope shorter than the spectrogram window")
    return (n_env - window) // hop + 1


def compute_lf_spectrogram(
    env: Envelope,
    window_s: float = 3.0,
    hop_s: float = 0.1,
    zero_pad_factor: int = 4,
    f_max_hz: float = 10.0,
    taper: bool = False,
) -> LfSpectrogram:
    """Stack LF spectra of window_s chunks taken every hop_s seconds.

    Rows are computed exactly as compute_lf_spectrum would on each chunk;
    the chunks share one FFT length, so the whole stack is one batched
    transform.
    """
    rate = env.rate_hz
    window = int(round(window_s * rate))
    hop = max(1, int(round(hop_s * rate)))
    if len(env.values) < window:
        raise ClipTooShortError(
            f"envelope is {env.duration_s:.2f} s; spectrogram window is {window_s} s"
        )
    if window < 2.0 * rate:
        raise ValueError("spectrogram window must cover >= 2 s")

    chunks = np.lib.stride_tricks.sliding_window_view(env.values, window)[::hop]
    chunks = np.ascontiguousarray(chunks, dtype=np.float64)
    starts = np.arange(chunks.shape[0]) * hop

    x = chunks - chunks.mean(axis=1, keepdims=True)
    if taper:
        x = x * np.hanning(window)
    n_fft = zero_pad_factor * _next_pow2(window)
    spectrum = np.fft.rfft(x, n_fft, axis=1)
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / rate)
    keep = (freqs > 0) & (freqs <= f_max_hz + 1e-12)

    mags = np.abs(spectrum[:, keep])
    row_peak = mags.max(axis=1, keepdims=True)
    np.divide(mags, row_peak, out=mags, where=row_peak > 0)

    return LfSpectrogram(
        frame_times_s=(starts + window / 2.0) / rate,
        freqs_hz=freqs[keep],
        mags=mags,
        window_s=window / rate,
        hop_s=hop / rate,
        resolution_hz=rate / n_fft,
        kind=env.kind,
    )


def extract_trajectories(
    sg: LfSpectrogram,
    n: int = 6,
    min_separation_hz: float = 0.3,
    order: str = "magnitude",
) -> TrajectorySet:
    """Per-frame top-n peaks collected into n trajectories.

    order="magnitude" ranks peaks by descending magnitude within each
    frame (the default); order="frequency" re-sorts the selected peaks by
    ascending frequency instead. Frames with fewer than n peaks are padded
    with (0, 0).
    """
    if sg.n_frames < 1:
        raise ValueError("spectrogram has no frames")
    if order not in ("magnitude", "frequency"):
        raise ValueError(f"unknown trajectory order {order!r}")

    freq_traj = np.zeros((n, sg.n_frames))
    mag_traj = np.zeros((n, sg.n_frames))
    for t in range(sg.n_frames):
        bins = _detect_peaks(sg.mags[t], sg.resolution_hz, min_separation_hz)
        freqs, mags = _rank_by_magnitude(sg.freqs_hz, sg.mags[t], bins)
        count = min(len(bins), n)
        if count and order == "frequency":
            sel = np.argsort(freqs[:count], kind="stable")
            freqs, mags = freqs[:count][sel], mags[:count][sel]
        freq_traj[:count, t] = freqs[:count]
        mag_traj[:count, t] = mags[:count]

    return TrajectorySet(
        formant_freq_traj=freq_traj,
        formant_mag_traj=mag_traj,
        frame_times_s=sg.frame_times_s,
    )


def trajectory_variances(ts: TrajectorySet) -> np.ndarray:
    """Population variance of each frequency then magnitude trajectory.

    Layout: VarRF1..VarRFn followed by VarMag1..VarMagn.
    """
    if ts.formant_freq_traj.shape[1] < 2:
        raise ClipTooShortError("need >= 2 spectrogram frames for variances")
    return np.concatenate(
        [np.var(ts.formant_freq_traj, axis=1), np.var(ts.formant_mag_traj, axis=1)]
    )
