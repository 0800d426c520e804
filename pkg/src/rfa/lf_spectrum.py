"""Low-frequency magnitude spectrum of an envelope and its derived measures.

The spectrum covers (0, 10] Hz: the envelope mean is removed (killing DC),
the signal is zero-padded to a multiple of the next power of two for fine
frequency resolution, and the retained magnitudes are scaled so the
largest equals 1.

Whole-utterance measures:
  * R-formants: frequencies of the dominant magnitude peaks
  * NDP / MFDP / VFDP: count, mean frequency, and frequency variance of
    peaks above a magnitude threshold
  * the first few DCT coefficients of the magnitude contour
  * seven distribution measures (centroid, spread, rolloff, flatness,
    entropy, skewness, kurtosis)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft
import scipy.signal

from .envelope import Envelope
from .errors import AllZeroSpectrumError, ClipTooShortError

_FLATNESS_FLOOR = 1e-12


@dataclass(frozen=True)
class LfSpectrum:
    """Max-normalized magnitude spectrum on (0, f_max] Hz, DC excluded."""

    freqs_hz: np.ndarray
    mags: np.ndarray
    resolution_hz: float
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "freqs_hz", np.asarray(self.freqs_hz, dtype=np.float64))
        object.__setattr__(self, "mags", np.asarray(self.mags, dtype=np.float64))
        if self.freqs_hz.shape != self.mags.shape:
            raise ValueError("freqs_hz and mags must have the same shape")


@dataclass(frozen=True)
class PeakSet:
    """Dominant spectral peaks, padded with (0, 0) sentinels up to a fixed n.

    count is the number of real peaks; entries past count are sentinels.
    """

    freqs_hz: np.ndarray
    mags: np.ndarray
    count: int


class SpectralMeasures(NamedTuple):
    centroid_hz: float
    spread_hz: float
    rolloff_hz: float
    flatness: float
    entropy: float
    skewness: float
    kurtosis: float


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def compute_lf_spectrum(
    env: Envelope,
    zero_pad_factor: int = 4,
    f_max_hz: float = 10.0,
    taper: bool = False,
) -> LfSpectrum:
    """FFT magnitude spectrum of a mean-removed envelope on (0, f_max] Hz."""
    n = len(env.values)
    if n < 2.0 * env.rate_hz:
        raise ClipTooShortError(
            f"envelope is {n / env.rate_hz:.2f} s; need >= 2 s for the spectrum"
        )
    if zero_pad_factor < 1:
        raise ValueError("zero_pad_factor must be >= 1")

    x = env.values - np.mean(env.values)
    if taper:
        x = x * np.hanning(n)
    n_fft = zero_pad_factor * _next_pow2(n)
    spectrum = np.fft.rfft(x, n_fft)
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / env.rate_hz)

    keep = (freqs > 0) & (freqs <= f_max_hz + 1e-12)
    mags = np.abs(spectrum[keep])
    peak = mags.max(initial=0.0)
    if peak > 0:
        mags = mags / peak
    return LfSpectrum(
        freqs_hz=freqs[keep],
        mags=mags,
        resolution_hz=env.rate_hz / n_fft,
        kind=env.kind,
    )


def _detect_peaks(
    mags: np.ndarray,
    resolution_hz: float,
    min_separation_hz: float,
    height: float | None = None,
) -> np.ndarray:
    """Local-maximum bins separated by at least min_separation_hz."""
    distance = max(1, int(np.ceil(min_separation_hz / resolution_hz)))
    peaks, _ = scipy.signal.find_peaks(mags, height=height, distance=distance)
    return peaks


def _rank_by_magnitude(freqs: np.ndarray, mags: np.ndarray, bins: np.ndarray):
    order = np.argsort(-mags[bins], kind="stable")
    return freqs[bins][order], mags[bins][order]


def pick_r_formants(
    spec: LfSpectrum, n: int = 6, min_separation_hz: float = 0.3
) -> PeakSet:
    """The n largest-magnitude spectral peaks, in descending magnitude.

    Fewer than n peaks are padded with (0 Hz, 0) sentinels; count reports
    how many entries are real.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bins = _detect_peaks(spec.mags, spec.resolution_hz, min_separation_hz)
    peak_freqs, peak_mags = _rank_by_magnitude(spec.freqs_hz, spec.mags, bins)

    count = min(len(bins), n)
    freqs = np.zeros(n)
    mags = np.zeros(n)
    freqs[:count] = peak_freqs[:count]
    mags[:count] = peak_mags[:count]
    return PeakSet(freqs_hz=freqs, mags=mags, count=count)


def threshold_features(
    spec: LfSpectrum, threshold: float = 0.5, min_separation_hz: float = 0.3
) -> tuple[int, float, float]:
    """(NDP, MFDP, VFDP) of peaks at or above the magnitude threshold.

    MFDP is the mean peak frequency and VFDP the population variance of
    the peak frequencies; both are 0 when no peak clears the threshold.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    mags = spec.mags
    peak = mags.max(initial=0.0)
    if peak > 0:
        mags = mags / peak
    bins = _detect_peaks(mags, spec.resolution_hz, min_separation_hz, height=threshold)
    if len(bins) == 0:
        return 0, 0.0, 0.0
    freqs = spec.freqs_hz[bins]
    return len(bins), float(np.mean(freqs)), float(np.var(freqs))


def dct_features(spec: LfSpectrum, k: int = 4) -> np.ndarray:
    """First k coefficients of the plain (unscaled) DCT-II of the magnitudes:

        X_k = sum_n x_n * cos[(pi / N) * (n + 1/2) * k]
    """
    n_bins = len(spec.mags)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n_bins:
        raise ValueError(f"k={k} exceeds the {n_bins} spectrum bins")
    # scipy's unnormalized DCT-II carries a factor of 2
    return scipy.fft.dct(spec.mags, type=2, norm=None)[:k] / 2.0


def spectral_measures(
    spec: LfSpectrum, rolloff_fraction: float = 0.85
) -> SpectralMeasures:
    """Seven distribution measures of the magnitude spectrum.

    Magnitudes normalized to sum 1 are treated as a probability
    distribution over the bin frequencies. Rolloff uses squared-magnitude
    energy. Flatness is the geometric-over-arithmetic mean ratio across
    all bins, with a 1e-12 floor inside the log, so any zero bin pulls it
    to ~0. Entropy is scaled to [0, 1] by log2 of the bin count. Skewness
    and kurtosis are 0 by convention when the spread is 0.
    """
    mags = spec.mags
    total = float(np.sum(mags))
    if total <= 0.0:
        raise AllZeroSpectrumError("spectrum has no energy")
    if not 0.0 < rolloff_fraction <= 1.0:
        raise ValueError("rolloff_fraction must lie in (0, 1]")

    freqs = spec.freqs_hz
    p = mags / total
    centroid = float(np.dot(p, freqs))
    spread = float(np.sqrt(np.dot(p, (freqs - centroid) ** 2)))

    energy = np.cumsum(mags**2)
    rolloff_idx = int(np.searchsorted(energy, rolloff_fraction * energy[-1]))
    rolloff_idx = min(rolloff_idx, len(freqs) - 1)
    rolloff = float(freqs[rolloff_idx])

    geo_mean = float(np.exp(np.mean(np.log(np.maximum(mags, _FLATNESS_FLOOR)))))
    flatness = geo_mean / float(np.mean(mags))

    positive = p[p > 0]
    raw_entropy = float(-np.sum(positive * np.log2(positive)))
    entropy = raw_entropy / np.log2(len(mags)) if len(mags) > 1 else 0.0

    if spread > 0:
        skewness = float(np.dot(p, (freqs - centroid) ** 3)) / spread**3
        kurtosis = float(np.dot(p, (freqs - centroid) ** 4)) / spread**4
    else:
        skewness = 0.0
        kurtosis = 0.0

    return SpectralMeasures(
        centroid_hz=centroid,
        spread_hz=spread,
        rolloff_hz=rolloff,
        flatness=flatness,
        entropy=entropy,
        skewness=skewness,
        kurtosis=kurtosis,
    )
