"""WAV loading, peak normalization, and duration filtering.

Only linear PCM RIFF/WAVE is handled (8/16/24/32-bit, any channel count).
Multichannel audio is averaged down to mono. The pipeline is sample-rate
agnostic as long as the rate is at least 8 kHz.
"""

from __future__ import annotations

import logging
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AudioReadError, EmptyAudioError, UnsupportedEncodingError

log = logging.getLogger(__name__)

_MIN_SAMPLE_RATE_HZ = 8000


@dataclass(frozen=True)
class AudioClip:
    """Mono audio samples with their sample rate.

    Samples are real-valued; loaders scale integer PCM into [-1, 1).
    """

    samples: np.ndarray
    sample_rate_hz: int
    source_id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if self.sample_rate_hz < _MIN_SAMPLE_RATE_HZ:
            raise ValueError(
                f"sample_rate_hz must be >= {_MIN_SAMPLE_RATE_HZ}, "
                f"got {self.sample_rate_hz}"
            )

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def load_audio(path: str | Path) -> AudioClip:
    """Read a linear PCM WAV file as a mono AudioClip.

    Multichannel input is averaged across channels. Integer samples are
    scaled by the full-scale value of their bit depth.

    Raises AudioReadError for unreadable files, UnsupportedEncodingError
    for non-PCM encodings or unsupported widths, EmptyAudioError for files
    with zero frames.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            sampwidth = wav.getsampwidth()
            rate = wav.getframerate()
            n_frames = wav.getnframes()
            raw = wav.readframes(n_frames)
    except wave.Error as exc:
        msg = str(exc)
        if "unknown format" in msg or "compression" in msg.lower():
            raise UnsupportedEncodingError(f"{path}: {msg}") from exc
        raise AudioReadError(f"{path}: {msg}") from exc
    except OSError as exc:
        raise AudioReadError(f"{path}: {exc}") from exc

    if n_frames == 0 or len(raw) == 0:
        raise EmptyAudioError(f"{path}: no audio frames")
    if sampwidth not in (1, 2, 3, 4):
        raise UnsupportedEncodingError(
            f"{path}: unsupported sample width {sampwidth * 8} bit"
        )

    samples = _decode_pcm(raw, sampwidth)
    if n_channels > 1:
        usable = (len(samples) // n_channels) * n_channels
        samples = samples[:usable].reshape(-1, n_channels).mean(axis=1)
    return AudioClip(samples=samples, sample_rate_hz=rate, source_id=path.stem)


def _decode_pcm(raw: bytes, sampwidth: int) -> np.ndarray:
    if sampwidth == 1:
        # 8-bit WAV is unsigned
        return (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    if sampwidth == 2:
        return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if sampwidth == 3:
        b = np.frombuffer(raw, dtype=np.uint8)
        b = b[: (len(b) // 3) * 3].reshape(-1, 3).astype(np.int32)
        value = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        value = np.where(value >= 1 << 23, value - (1 << 24), value)
        return value.astype(np.float64) / float(1 << 23)
    return np.frombuffer(raw, dtype="<i4").astype(np.float64) / float(1 << 31)


def write_wav(clip: AudioClip, path: str | Path, bits: int = 16) -> None:
    """Write a mono clip as linear PCM. Samples are clipped to [-1, 1]."""
    if bits not in (8, 16, 24, 32):
        raise ValueError(f"unsupported bit depth {bits}")
    full_scale = 1 << (bits - 1)
    x = np.clip(clip.samples, -1.0, 1.0)
    q = np.rint(x * full_scale).astype(np.int64)
    q = np.clip(q, -full_scale, full_scale - 1)

    if bits == 8:
        payload = (q + 128).astype(np.uint8).tobytes()
    elif bits == 16:
        payload = q.astype("<i2").tobytes()
    elif bits == 24:
        u = (q & 0xFFFFFF).astype(np.uint32)
        b = np.empty((len(q), 3), dtype=np.uint8)
        b[:, 0] = u & 0xFF
        b[:, 1] = (u >> 8) & 0xFF
        b[:, 2] = (u >> 16) & 0xFF
        payload = b.tobytes()
    else:
        payload = q.astype("<i4").tobytes()

    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(bits // 8)
        wav.setframerate(clip.sample_rate_hz)
        wav.writeframes(payload)


def peak_normalize(clip: AudioClip) -> AudioClip:
    """Scale so the maximum absolute sample is 1. Silence passes through."""
    peak = float(np.max(np.abs(clip.samples)))
    if peak == 0.0:
        log.info("silent clip %r left unnormalized", clip.source_id)
        return clip
    return AudioClip(
        samples=clip.samples / peak,
        sample_rate_hz=clip.sample_rate_hz,
        source_id=clip.source_id,
    )


def filter_by_duration(
    clips: list[AudioClip], min_duration_s: float = 4.0
) -> list[AudioClip]:
    """Keep clips strictly longer than min_duration_s, preserving order."""
    return [c for c in clips if c.duration_s > min_duration_s]
