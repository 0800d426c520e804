import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rfa.audio_io import AudioClip
from rfa.envelope import Envelope, am_envelope
from rfa.synth import SynthSpec, synthesize

settings.register_profile(
    "rfa",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("rfa")

FS = 16000


def am_tone_clip(
    mod_freq_hz: float,
    depth: float = 0.5,
    carrier_hz: float = 200.0,
    duration_s: float = 10.0,
    fs: int = FS,
) -> AudioClip:
    """Raw (unnormalized) AM tone so envelope amplitudes are exact."""
    t = np.arange(int(round(duration_s * fs))) / fs
    x = (1.0 + depth * np.cos(2 * np.pi * mod_freq_hz * t)) * np.sin(
        2 * np.pi * carrier_hz * t
    )
    return AudioClip(samples=x, sample_rate_hz=fs, source_id=f"amtone{mod_freq_hz:g}")


def cosine_envelope(
    mod_freq_hz: float,
    duration_s: float = 10.0,
    rate_hz: float = 100.0,
    depth: float = 0.5,
    kind: str = "AM",
) -> Envelope:
    t = np.arange(int(round(duration_s * rate_hz))) / rate_hz
    values = 1.0 + depth * np.cos(2 * np.pi * mod_freq_hz * t)
    return Envelope(kind=kind, values=values, rate_hz=rate_hz)


@pytest.fixture(scope="session")
def am4_envelope() -> Envelope:
    """AM envelope of a 4 Hz modulated tone, via the real pipeline."""
    return am_envelope(am_tone_clip(4.0))


@pytest.fixture(scope="session")
def vibrato_clip() -> AudioClip:
    return synthesize(
        SynthSpec(kind="vibrato", carrier_hz=220.0, mod_freq_hz=5.0,
                  mod_depth=10.0, duration_s=10.0)
    )
