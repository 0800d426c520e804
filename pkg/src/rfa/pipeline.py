"""Per-utterance feature extraction: clip -> envelopes -> 52-dim vector.

This is the glue the CLI and experiment scripts share. Errors raised here
are RfaError subclasses so batch drivers can skip a file with a reason.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, load_audio, peak_normalize
from .config import RunConfig
from .envelope import Envelope, am_envelope, fm_envelope, track_f0
from .errors import AllZeroSpectrumError
from .features import (
    EnvelopeSpectrumFeatures,
    FeatureVector,
    assemble,
)
from .lf_spectrum import (
    LfSpectrum,
    SpectralMeasures,
    compute_lf_spectrum,
    dct_features,
    pick_r_formants,
    spectral_measures,
    threshold_features,
)
from .lf_spectrogram import (
    compute_lf_spectrogram,
    extract_trajectories,
    trajectory_variances,
)

log = logging.getLogger(__name__)

_ZERO_MEASURES = SpectralMeasures(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def spectrum_features(
    spectrum: LfSpectrum, cfg: RunConfig, source_id: str = ""
) -> EnvelopeSpectrumFeatures:
    """All whole-utterance measures of one envelope spectrum."""
    peaks = pick_r_formants(
        spectrum, n=cfg.n_formants, min_separation_hz=cfg.min_peak_separation_hz
    )
    ndp, mfdp, vfdp = threshold_features(
        spectrum,
        threshold=cfg.peak_threshold,
        min_separation_hz=cfg.min_peak_separation_hz,
    )
    dct = dct_features(spectrum, k=cfg.n_dct)
    try:
        measures = spectral_measures(spectrum, rolloff_fraction=cfg.rolloff_fraction)
    except AllZeroSpectrumError:
        log.warning(
            "%s: all-zero %s spectrum; distribution measures set to 0",
            source_id,
            spectrum.kind,
        )
        measures = _ZERO_MEASURES
    return EnvelopeSpectrumFeatures(
        ndp=ndp,
        mfdp_hz=mfdp,
        vfdp_hz2=vfdp,
        dct=dct,
        measures=measures,
        r_formants_hz=peaks.freqs_hz,
    )


def envelope_features(
    env: Envelope, cfg: RunConfig, source_id: str = ""
) -> tuple[EnvelopeSpectrumFeatures, np.ndarray]:
    """(spectrum features, 12 trajectory variances) for one envelope."""
    spectrum = compute_lf_spectrum(
        env, zero_pad_factor=cfg.zero_pad_factor, f_max_hz=cfg.f_max_hz
    )
    spec_feats = spectrum_features(spectrum, cfg, source_id=source_id)

    spectrogram = compute_lf_spectrogram(
        env,
        window_s=cfg.window_s,
        hop_s=cfg.hop_s,
        zero_pad_factor=cfg.zero_pad_factor,
        f_max_hz=cfg.f_max_hz,
        taper=cfg.spectrogram_taper,
    )
    trajectories = extract_trajectories(
        spectrogram,
        n=cfg.n_formants,
        min_separation_hz=cfg.min_peak_separation_hz,
        order=cfg.trajectory_order,
    )
    return spec_feats, trajectory_variances(trajectories)


def extract_from_clip(
    clip: AudioClip, cfg: RunConfig | None = None, label: str | None = None
) -> FeatureVector:
    """Full pipeline for one clip. The caller applies the duration filter."""
    cfg = cfg or RunConfig()
    clip = peak_normalize(clip)

    am_env = am_envelope(clip, env_rate_hz=cfg.env_rate_hz, smooth_ms=cfg.smooth_ms)
    am_spec, am_vars = envelope_features(am_env, cfg, source_id=clip.source_id)

    track = track_f0(
        clip,
        f0_min_hz=cfg.f0_min_hz,
        f0_max_hz=cfg.f0_max_hz,
        frame_len_s=cfg.f0_frame_s,
        hop_s=cfg.f0_hop_s,
        voicing_threshold=cfg.voicing_threshold,
    )
    fm_env = fm_envelope(track, env_rate_hz=cfg.env_rate_hz)
    fm_spec, fm_vars = envelope_features(fm_env, cfg, source_id=clip.source_id)

    return assemble(
        source_id=clip.source_id,
        am_spec_feats=am_spec,
        fm_spec_feats=fm_spec,
        am_traj_vars=am_vars,
        fm_traj_vars=fm_vars,
        label=label,
    )


def extract_from_file(
    path: str | Path,
    cfg: RunConfig | None = None,
    label: str | None = None,
    source_id: str | None = None,
) -> FeatureVector:
    clip = load_audio(path)
    if source_id is not None:
        clip = AudioClip(
            samples=clip.samples,
            sample_rate_hz=clip.sample_rate_hz,
            source_id=source_id,
        )
    return extract_from_clip(clip, cfg, label=label)
