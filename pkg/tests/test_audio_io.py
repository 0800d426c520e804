import struct
import wave

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfa.audio_io import (
    AudioClip,
    filter_by_duration,
    load_audio,
    peak_normalize,
    write_wav,
)
from rfa.errors import AudioReadError, EmptyAudioError, UnsupportedEncodingError


def _write_pcm(path, samples_int, rate=16000, sampwidth=2, channels=1):
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(channels)
        wav.setsampwidth(sampwidth)
        wav.setframerate(rate)
        wav.writeframes(samples_int.astype("<i2").tobytes())


def test_load_16bit_mono_duration(tmp_path):
    path = tmp_path / "four_seconds.wav"
    _write_pcm(path, np.zeros(64000, dtype=np.int16), rate=16000)
    clip = load_audio(path)
    assert clip.duration_s == pytest.approx(4.0)
    assert clip.sample_rate_hz == 16000
    assert clip.source_id == "four_seconds"


def test_load_stereo_opposite_channels_cancels(tmp_path):
    x = (np.sin(2 * np.pi * 100 * np.arange(16000) / 16000) * 20000).astype(np.int16)
    interleaved = np.empty(2 * len(x), dtype=np.int16)
    interleaved[0::2] = x
    interleaved[1::2] = -x
    path = tmp_path / "stereo.wav"
    _write_pcm(path, interleaved, channels=2)
    clip = load_audio(path)
    assert np.allclose(clip.samples, 0.0, atol=1.0 / 32768)


def _mulaw_wav_bytes() -> bytes:
    # minimal RIFF with format tag 7 (mu-law) and a tiny data chunk
    data = bytes(range(16))
    fmt = struct.pack("<HHIIHH", 7, 1, 8000, 8000, 1, 8)
    chunks = b"WAVE"
    chunks += b"fmt " + struct.pack("<I", len(fmt)) + fmt
    chunks += b"data" + struct.pack("<I", len(data)) + data
    return b"RIFF" + struct.pack("<I", len(chunks)) + chunks


def test_load_mulaw_rejected(tmp_path):
    path = tmp_path / "mulaw.wav"
    path.write_bytes(_mulaw_wav_bytes())
    with pytest.raises(UnsupportedEncodingError):
        load_audio(path)


def test_load_zero_frames_rejected(tmp_path):
    path = tmp_path / "empty.wav"
    _write_pcm(path, np.zeros(0, dtype=np.int16))
    with pytest.raises(EmptyAudioError):
        load_audio(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(AudioReadError):
        load_audio(tmp_path / "nope.wav")


def test_load_garbage_file(tmp_path):
    path = tmp_path / "garbage.wav"
    path.write_bytes(b"this is not a RIFF file at all")
    with pytest.raises(AudioReadError):
        load_audio(path)


@pytest.mark.parametrize("bits", [8, 16, 24])
def test_write_read_roundtrip_within_one_lsb(tmp_path, bits):
    rng = np.random.default_rng(7)
    x = rng.uniform(-1.0, 1.0, 16000)
    clip = AudioClip(samples=x, sample_rate_hz=16000, source_id="rt")
    path = tmp_path / f"rt{bits}.wav"
    write_wav(clip, path, bits=bits)
    loaded = load_audio(path)
    lsb = 1.0 / (1 << (bits - 1))
    assert loaded.sample_rate_hz == 16000
    assert np.max(np.abs(loaded.samples - x)) <= lsb


def test_peak_normalize_examples():
    clip = AudioClip(samples=np.array([0.5, -0.25]), sample_rate_hz=16000)
    out = peak_normalize(clip)
    assert np.allclose(out.samples, [1.0, -0.5])


def test_peak_normalize_scale_invariant():
    rng = np.random.default_rng(0)
    x = rng.normal(size=1000)
    a = peak_normalize(AudioClip(samples=x, sample_rate_hz=16000))
    b = peak_normalize(AudioClip(samples=0.25 * x, sample_rate_hz=16000))
    assert np.allclose(a.samples, b.samples)


def test_peak_normalize_silence_passthrough():
    clip = AudioClip(samples=np.zeros(100), sample_rate_hz=16000)
    out = peak_normalize(clip)
    assert np.array_equal(out.samples, np.zeros(100))


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=64))
def test_peak_normalize_idempotent(values):
    clip = AudioClip(samples=np.array(values), sample_rate_hz=16000)
    once = peak_normalize(clip)
    twice = peak_normalize(once)
    assert np.allclose(once.samples, twice.samples, atol=1e-12)
    if np.any(np.asarray(values) != 0.0):
        assert np.max(np.abs(once.samples)) == pytest.approx(1.0)


def _clip_of_duration(seconds: float) -> AudioClip:
    n = max(1, int(round(seconds * 16000)))
    return AudioClip(samples=np.ones(n), sample_rate_hz=16000)


def test_filter_by_duration_strictly_greater():
    clips = [_clip_of_duration(d) for d in (3.9, 4.0, 4.1)]
    kept = filter_by_duration(clips, 4.0)
    assert [c.duration_s for c in kept] == pytest.approx([4.1])


def test_filter_by_duration_trivial_cases():
    assert filter_by_duration([], 4.0) == []
    clips = [_clip_of_duration(d) for d in (0.5, 2.0)]
    assert filter_by_duration(clips, 0.0) == clips


@given(st.lists(st.floats(0.1, 10.0), max_size=8), st.floats(0.1, 6.0))
def test_filter_by_duration_properties(durations, threshold):
    clips = [_clip_of_duration(d) for d in durations]
    kept = filter_by_duration(clips, threshold)
    assert len(kept) <= len(clips)
    assert all(c.duration_s > threshold for c in kept)
    # order preserved
    identity = [id(c) for c in clips]
    positions = [identity.index(id(c)) for c in kept]
    assert positions == sorted(positions)


def test_clip_invariants_enforced():
    with pytest.raises(ValueError):
        AudioClip(samples=np.array([np.nan]), sample_rate_hz=16000)
    with pytest.raises(ValueError):
        AudioClip(samples=np.ones(10), sample_rate_hz=4000)
    with pytest.raises(ValueError):
        AudioClip(samples=np.array([]), sample_rate_hz=16000)
