"""AM and FM modulation envelopes at a common low sampling rate.

The AM envelope is the magnitude of the analytic signal, decimated to the
envelope rate and smoothed with a short moving average. The FM envelope is
the F0 contour centered on its median, with unvoiced stretches pinned to
the median (zero after centering), interpolated to the envelope rate.

The pitch tracker is a normalized cross-correlation (NCCF) tracker:
threshold voicing, parabolic lag interpolation, and a 5-frame median
filter against octave spikes. No dynamic-programming continuity pass is
applied; the downstream consumer is a heavily smoothed sub-10 Hz spectrum,
which is insensitive to occasional single-frame errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.fft
import scipy.ndimage
import scipy.signal

from .audio_io import AudioClip
from .errors import ClipTooShortError, UnvoicedClipError

AM = "AM"
FM = "FM"

_MIN_ENV_RATE_HZ = 20.0  # Nyquist margin over the 10 Hz analysis band


@dataclass(frozen=True)
class Envelope:
    """Uniformly sampled modulation envelope (AM or FM)."""

    kind: str
    values: np.ndarray
    rate_hz: float
    source_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if self.kind not in (AM, FM):
            raise ValueError(f"kind must be {AM!r} or {FM!r}, got {self.kind!r}")
        if self.rate_hz < _MIN_ENV_RATE_HZ:
            raise ValueError(f"rate_hz must be >= {_MIN_ENV_RATE_HZ}")
        if not np.all(np.isfinite(values)):
            raise ValueError("envelope values must be finite")
        if self.kind == AM and values.size and float(values.min()) < 0.0:
            raise ValueError("AM envelope values must be non-negative")

    @property
    def duration_s(self) -> float:
        return len(self.values) / self.rate_hz


@dataclass(frozen=True)
class F0Track:
    """Frame-rate F0 estimates; 0 marks unvoiced frames."""

    f0_hz: np.ndarray
    hop_s: float
    frame_len_s: float
    f0_min_hz: float
    f0_max_hz: float

    def __post_init__(self):
        f0 = np.asarray(self.f0_hz, dtype=np.float64)
        object.__setattr__(self, "f0_hz", f0)
        voiced = f0 > 0
        if np.any(f0 < 0):
            raise ValueError("f0 values must be >= 0")
        if np.any(voiced & ((f0 < self.f0_min_hz) | (f0 > self.f0_max_hz))):
            raise ValueError("voiced f0 values must lie within the search bounds")

    @property
    def voiced(self) -> np.ndarray:
        return self.f0_hz > 0

    @property
    def frame_times_s(self) -> np.ndarray:
        return np.arange(len(self.f0_hz)) * self.hop_s + self.frame_len_s / 2.0


def am_envelope(
    clip: AudioClip, env_rate_hz: float = 100.0, smooth_ms: float = 50.0
) -> Envelope:
    """Magnitude of the analytic signal, decimated and smoothed.

    The analytic signal is built in the frequency domain (one-sided
    spectrum). Decimation to env_rate_hz uses polyphase resampling with
    its built-in anti-alias filter; the moving average of width smooth_ms
    then runs at the envelope rate.
    """
    if clip.duration_s < 1.0:
        raise ClipTooShortError(
            f"clip {clip.source_id!r} is {clip.duration_s:.3f} s; need >= 1 s"
        )
    n = len(clip.samples)
    n_fft = scipy.fft.next_fast_len(n)
    analytic = scipy.signal.hilbert(clip.samples, N=n_fft)[:n]
    magnitude = np.abs(analytic)

    ratio = Fraction(env_rate_hz / clip.sample_rate_hz).limit_denominator(10**6)
    if ratio > 1:
        raise ValueError("env_rate_hz must not exceed the audio sample rate")
    decimated = scipy.signal.resample_poly(
        magnitude, ratio.numerator, ratio.denominator
    )
    decimated = np.maximum(decimated, 0.0)  # filter overshoot guard

    smoothed = _moving_average(decimated, smooth_ms, env_rate_hz)
    return Envelope(
        kind=AM, values=smoothed, rate_hz=env_rate_hz, source_id=clip.source_id
    )


def _moving_average(x: np.ndarray, width_ms: float, rate_hz: float) -> np.ndarray:
    size = int(round(width_ms / 1000.0 * rate_hz))
    if size <= 1:
        return x
    if size % 2 == 0:
        size += 1  # keep the window centered
    return scipy.ndimage.uniform_filter1d(x, size=size, mode="nearest")


def track_f0(
    clip: AudioClip,
    f0_min_hz: float = 60.0,
    f0_max_hz: float = 400.0,
    frame_len_s: float = 0.040,
    hop_s: float = 0.010,
    voicing_threshold: float = 0.30,
) -> F0Track:
    """NCCF pitch track over [f0_min_hz, f0_max_hz].

    Per frame, the normalized cross-correlation is evaluated over the lag
    range corresponding to the F0 bounds; the frame is voiced iff the best
    correlation reaches voicing_threshold. Voiced lags are refined by
    parabolic interpolation, and the final track is median-filtered over
    5 frames.
    """
    if f0_min_hz >= f0_max_hz:
        raise ValueError(f"need f0_min_hz < f0_max_hz, got {f0_min_hz} >= {f0_max_hz}")
    if f0_min_hz <= 0:
        raise ValueError("f0_min_hz must be positive")
    if frame_len_s < 2.0 / f0_min_hz:
        raise ValueError(
            f"frame_len_s must be >= 2/f0_min_hz = {2.0 / f0_min_hz:.4f} s"
        )
    if clip.duration_s < frame_len_s:
        raise ClipTooShortError(
            f"clip {clip.source_id!r} shorter than one analysis frame"
        )

    fs = clip.sample_rate_hz
    x = clip.samples
    frame_len = int(round(frame_len_s * fs))
    hop = max(1, int(round(hop_s * fs)))
    lag_min = max(1, int(np.floor(fs / f0_max_hz)))
    lag_max = int(np.ceil(fs / f0_min_hz))
    n_corr = frame_len - lag_max
    if n_corr < 2:
        raise ValueError("frame too short for the requested lag range")
    if frame_len > len(x):
        raise ClipTooShortError(
            f"clip {clip.source_id!r} shorter than one analysis frame"
        )

    frames = np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop]
    frames = np.ascontiguousarray(frames)
    n_frames = len(frames)
    lags = np.arange(lag_min, lag_max + 1)

    # cross-correlation of the frame head against all lags, via FFT
    n_fft = scipy.fft.next_fast_len(frame_len + n_corr)
    head = frames[:, :n_corr]
    spec_head = np.fft.rfft(head, n_fft, axis=1)
    spec_full = np.fft.rfft(frames, n_fft, axis=1)
    corr = np.fft.irfft(np.conj(spec_head) * spec_full, n_fft, axis=1)

    csq = np.cumsum(frames**2, axis=1)
    e_head = csq[:, n_corr - 1]
    e_lag = csq[:, lags + n_corr - 1] - csq[:, lags - 1]
    e_lag = np.maximum(e_lag, 0.0)

    denom = np.sqrt(e_head[:, None] * e_lag)
    nccf = np.zeros((n_frames, len(lags)))
    np.divide(corr[:, lag_min : lag_max + 1], denom, out=nccf, where=denom > 0)

    best = np.argmax(nccf, axis=1)
    best_val = nccf[np.arange(n_frames), best]
    voiced = best_val >= voicing_threshold

    # parabolic refinement around the best integer lag
    delta = np.zeros(n_frames)
    interior = (best > 0) & (best < len(lags) - 1)
    idx = np.nonzero(interior)[0]
    if idx.size:
        y1 = nccf[idx, best[idx] - 1]
        y2 = nccf[idx, best[idx]]
        y3 = nccf[idx, best[idx] + 1]
        curvature = y1 - 2.0 * y2 + y3
        ok = np.abs(curvature) > 1e-12
        d = np.zeros(idx.size)
        d[ok] = 0.5 * (y1[ok] - y3[ok]) / curvature[ok]
        delta[idx] = np.clip(d, -0.5, 0.5)

    refined_lag = lags[best] + delta
    f0 = np.where(voiced, fs / refined_lag, 0.0)
    f0 = np.where(voiced, np.clip(f0, f0_min_hz, f0_max_hz), 0.0)

    f0 = scipy.ndimage.median_filter(f0, size=5, mode="nearest")
    return F0Track(
        f0_hz=f0,
        hop_s=hop / fs,
        frame_len_s=frame_len / fs,
        f0_min_hz=f0_min_hz,
        f0_max_hz=f0_max_hz,
    )


def centered_f0_deviation(track: F0Track) -> np.ndarray:
    """F0 minus the median voiced F0; unvoiced frames pinned to 0."""
    voiced = track.voiced
    if not np.any(voiced):
        raise UnvoicedClipError("track has no voiced frames")
    median = float(np.median(track.f0_hz[voiced]))
    return np.where(voiced, track.f0_hz - median, 0.0)


def fm_envelope(track: F0Track, env_rate_hz: float = 100.0) -> Envelope:
    """Median-centered F0 deviation resampled to the envelope rate."""
    deviation = centered_f0_deviation(track)
    frame_times = track.frame_times_s
    duration = (len(deviation) - 1) * track.hop_s + track.frame_len_s
    n_out = int(round(duration * env_rate_hz))
    t_out = np.arange(n_out) / env_rate_hz
    values = np.interp(t_out, frame_times, deviation)
    return Envelope(kind=FM, values=values, rate_hz=env_rate_hz)
