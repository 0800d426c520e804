"""Synthetic audio with analytically known rhythm properties.

These generators are the ground truth for pipeline tests: an AM tone has
its modulation frequency as the dominant AM peak, a vibrato tone has its
vibrato rate as the dominant FM peak, and a stepped AM tone produces a
non-stationary spectrogram. Modulators are built by exact phase
integration so there are no phase discontinuities to leak into the
low-frequency band.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, write_wav

AM_TONE = "am_tone"
VIBRATO = "vibrato"
AM_STEP = "am_step"
NOISE = "noise"
SILENCE = "silence"

KINDS = (AM_TONE, VIBRATO, AM_STEP, NOISE, SILENCE)


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    carrier_hz: float = 220.0
    mod_freq_hz: float = 4.0
    mod_depth: float = 0.5
    mod_freq2_hz: float | None = None  # second half of am_step
    duration_s: float = 10.0
    sample_rate_hz: int = 16000
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown synth kind {self.kind!r}")
        if self.duration_s < 4.0:
            raise ValueError("duration_s must be >= 4")
        if self.kind in (AM_TONE, VIBRATO, AM_STEP):
            if not 0.0 < self.mod_freq_hz < 10.0:
                raise ValueError("mod_freq_hz must lie in (0, 10)")
            if self.carrier_hz <= 0:
                raise ValueError("carrier_hz must be positive")
        if self.kind == AM_STEP:
            if self.mod_freq2_hz is None:
                raise ValueError("am_step needs mod_freq2_hz")
            if not 0.0 < self.mod_freq2_hz < 10.0:
                raise ValueError("mod_freq2_hz must lie in (0, 10)")

    @property
    def source_id(self) -> str:
        parts = [self.kind]
        if self.kind in (AM_TONE, VIBRATO, AM_STEP):
            parts.append(f"fc{self.carrier_hz:g}")
            parts.append(f"fm{self.mod_freq_hz:g}")
            if self.kind == AM_STEP:
                parts.append(f"fm2{self.mod_freq2_hz:g}")
            parts.append(f"d{self.mod_depth:g}")
        parts.append(f"s{self.seed}")
        return "-".join(parts)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def synthesize(spec: SynthSpec) -> AudioClip:
    """Deterministic signal for the given spec (same spec -> same samples)."""
    spec.validate()
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    t = np.arange(n) / fs

    if spec.kind == SILENCE:
        samples = np.zeros(n)
    elif spec.kind == NOISE:
        rng = np.random.default_rng(spec.seed)
        samples = rng.uniform(-1.0, 1.0, n)
    elif spec.kind == AM_TONE:
        modulator = 1.0 + spec.mod_depth * np.cos(2 * np.pi * spec.mod_freq_hz * t)
        samples = modulator * np.sin(2 * np.pi * spec.carrier_hz * t)
        samples /= 1.0 + spec.mod_depth
    elif spec.kind == AM_STEP:
        samples = _am_step(spec, t)
    else:  # vibrato
        # carrier phase = 2*pi * integral of (f_c + depth*sin(2*pi*f_m*tau))
        f_m = spec.mod_freq_hz
        phase = 2 * np.pi * (
            spec.carrier_hz * t
            - spec.mod_depth / (2 * np.pi * f_m) * (np.cos(2 * np.pi * f_m * t) - 1.0)
        )
        samples = np.sin(phase)

    return AudioClip(samples=samples, sample_rate_hz=fs, source_id=spec.source_id)


def _am_step(spec: SynthSpec, t: np.ndarray) -> np.ndarray:
    # modulator phase integrates the stepped modulation frequency so the
    # envelope stays continuous across the switch
    half = spec.duration_s / 2.0
    f_inst = np.where(t < half, spec.mod_freq_hz, spec.mod_freq2_hz)
    mod_phase = 2 * np.pi * np.cumsum(f_inst) / spec.sample_rate_hz
    modulator = 1.0 + spec.mod_depth * np.cos(mod_phase)
    samples = modulator * np.sin(2 * np.pi * spec.carrier_hz * t)
    return samples / (1.0 + spec.mod_depth)


def write_synth(spec: SynthSpec, wav_path: str | Path, bits: int = 16) -> AudioClip:
    """Render the spec to a WAV file plus a JSON sidecar of the spec."""
    clip = synthesize(spec)
    write_wav(clip, wav_path, bits=bits)
    sidecar = Path(wav_path).with_suffix(".json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return clip
