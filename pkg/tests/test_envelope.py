import numpy as np
import pytest
import scipy.signal

from rfa.audio_io import AudioClip
from rfa.envelope import (
    Envelope,
    F0Track,
    am_envelope,
    centered_f0_deviation,
    fm_envelope,
    track_f0,
)
from rfa.errors import ClipTooShortError, UnvoicedClipError
from tests.conftest import FS, am_tone_clip


def _interior(env: Envelope, margin_s: float = 0.5) -> slice:
    m = int(margin_s * env.rate_hz)
    return slice(m, len(env.values) - m)


class TestAmEnvelope:
    def test_am_tone_matches_closed_form(self):
        clip = am_tone_clip(4.0, depth=0.5, carrier_hz=200.0, duration_s=10.0)
        env = am_envelope(clip)
        assert env.kind == "AM"
        t = np.arange(len(env.values)) / env.rate_hz
        expected = 1.0 + 0.5 * np.cos(2 * np.pi * 4.0 * t)
        sl = _interior(env)
        assert np.max(np.abs(env.values[sl] - expected[sl])) < 0.05

    def test_pure_tone_constant_envelope(self):
        t = np.arange(10 * FS) / FS
        clip = AudioClip(samples=np.sin(2 * np.pi * 200 * t), sample_rate_hz=FS)
        env = am_envelope(clip)
        sl = _interior(env)
        assert np.max(np.abs(env.values[sl] - 1.0)) < 0.02

    def test_all_zero_clip(self):
        clip = AudioClip(samples=np.zeros(2 * FS), sample_rate_hz=FS)
        env = am_envelope(clip)
        assert np.allclose(env.values, 0.0)

    def test_too_short_rejected(self):
        clip = AudioClip(samples=np.ones(FS // 2), sample_rate_hz=FS)
        with pytest.raises(ClipTooShortError):
            am_envelope(clip)

    @pytest.mark.parametrize("scale", [0.1, 3.0])
    def test_commutes_with_amplitude_scaling(self, scale):
        clip = am_tone_clip(3.0, duration_s=4.0)
        scaled = AudioClip(samples=scale * clip.samples, sample_rate_hz=FS)
        base = am_envelope(clip).values
        assert np.allclose(am_envelope(scaled).values, scale * base, rtol=1e-9)

    @pytest.mark.parametrize("duration", [4.0, 5.73, 10.0])
    def test_length_tracks_duration(self, duration):
        clip = am_tone_clip(4.0, duration_s=duration)
        env = am_envelope(clip, env_rate_hz=100.0)
        assert abs(len(env.values) - round(duration * 100.0)) <= 1

    def test_values_non_negative(self):
        clip = am_tone_clip(7.0, depth=0.9, duration_s=6.0)
        env = am_envelope(clip)
        assert env.values.min() >= 0.0


class TestTrackF0:
    def test_sawtooth_220(self):
        t = np.arange(2 * FS) / FS
        x = scipy.signal.sawtooth(2 * np.pi * 220.0 * t)
        clip = AudioClip(samples=x, sample_rate_hz=FS)
        track = track_f0(clip)
        voiced = track.f0_hz[track.voiced]
        assert len(voiced) > 0.9 * len(track.f0_hz)
        assert abs(np.median(voiced) - 220.0) < 2.0

    def test_white_noise_mostly_unvoiced(self):
        rng = np.random.default_rng(11)
        clip = AudioClip(samples=rng.uniform(-1, 1, 2 * FS), sample_rate_hz=FS)
        track = track_f0(clip)
        assert np.mean(~track.voiced) >= 0.90

    def test_silence_all_unvoiced(self):
        clip = AudioClip(samples=np.zeros(2 * FS), sample_rate_hz=FS)
        track = track_f0(clip)
        assert not track.voiced.any()

    def test_invalid_bounds_rejected(self):
        clip = AudioClip(samples=np.ones(FS), sample_rate_hz=FS)
        with pytest.raises(ValueError):
            track_f0(clip, f0_min_hz=400.0, f0_max_hz=60.0)

    def test_voiced_values_within_bounds(self, vibrato_clip):
        track = track_f0(vibrato_clip)
        voiced = track.f0_hz[track.voiced]
        assert np.all(voiced >= track.f0_min_hz)
        assert np.all(voiced <= track.f0_max_hz)

    def test_time_shift_shifts_frames(self):
        t = np.arange(3 * FS) / FS
        x = scipy.signal.sawtooth(2 * np.pi * (150 + 30 * t) * t)  # drifting F0
        clip = AudioClip(samples=x, sample_rate_hz=FS)
        k = 7
        hop_samples = int(round(0.010 * FS))
        shifted = AudioClip(samples=x[k * hop_samples:], sample_rate_hz=FS)
        full = track_f0(clip).f0_hz
        part = track_f0(shifted).f0_hz
        n = len(part) - 10  # ignore tail/filter edges
        assert np.allclose(part[5:n], full[5 + k : n + k], atol=1.0)

    def test_vibrato_tracks_carrier(self, vibrato_clip):
        track = track_f0(vibrato_clip)
        voiced = track.f0_hz[track.voiced]
        assert abs(np.median(voiced) - 220.0) < 2.0
        # vibrato extent reproduced to within a couple Hz
        assert 6.0 < (np.percentile(voiced, 98) - np.percentile(voiced, 2)) / 2 < 12.0


def _make_track(f0_values, hop_s=0.010, frame_len_s=0.040):
    return F0Track(
        f0_hz=np.asarray(f0_values, dtype=float),
        hop_s=hop_s,
        frame_len_s=frame_len_s,
        f0_min_hz=60.0,
        f0_max_hz=400.0,
    )


class TestFmEnvelope:
    def test_constant_track_gives_zero_envelope(self):
        track = _make_track([200.0] * 101)
        env = fm_envelope(track)
        assert env.kind == "FM"
        assert np.allclose(env.values, 0.0)

    def test_vibrato_track_matches_closed_form(self):
        hop = 0.010
        n = 401  # 4 s of frames -> whole number of 5 Hz periods
        times = np.arange(n) * hop
        track = _make_track(220.0 + 10.0 * np.sin(2 * np.pi * 5.0 * times))
        env = fm_envelope(track, env_rate_hz=100.0)
        t = np.arange(len(env.values)) / 100.0
        expected = 10.0 * np.sin(2 * np.pi * 5.0 * (t - track.frame_len_s / 2.0))
        sl = slice(10, len(env.values) - 10)
        assert np.max(np.abs(env.values[sl] - expected[sl])) < 0.35

    def test_alternating_voiced_unvoiced_centered_to_zero(self):
        track = _make_track([200.0, 0.0, 200.0, 0.0])
        assert np.array_equal(centered_f0_deviation(track), np.zeros(4))

    def test_fully_unvoiced_rejected(self):
        track = _make_track([0.0, 0.0, 0.0])
        with pytest.raises(UnvoicedClipError):
            fm_envelope(track)

    def test_median_of_voiced_deviation_is_zero_odd_count(self):
        rng = np.random.default_rng(3)
        f0 = np.where(rng.uniform(size=101) < 0.7, rng.uniform(80, 300, 101), 0.0)
        if not (f0 > 0).any():
            f0[0] = 150.0
        track = _make_track(f0)
        deviation = centered_f0_deviation(track)
        voiced_dev = deviation[track.voiced]
        if len(voiced_dev) % 2 == 1:
            assert np.median(voiced_dev) == 0.0
        else:
            assert abs(np.median(voiced_dev)) < 1e-9

    def test_envelope_length_tracks_duration(self):
        track = _make_track([150.0] * 397)
        env = fm_envelope(track, env_rate_hz=100.0)
        duration = 396 * 0.010 + 0.040
        assert abs(len(env.values) - round(duration * 100.0)) <= 1
