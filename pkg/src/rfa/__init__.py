"""Rhythm formant analysis.

Low-frequency (< 10 Hz) spectral analysis of the AM and FM modulation
envelopes of speech: rhythm formants, threshold and DCT measures,
spectral distribution measures, spectrogram trajectory variances, a fused
52-dimensional rhythm feature vector, and an SVM classification harness.
"""

__version__ = "0.1.0"

from .audio_io import AudioClip, filter_by_duration, load_audio, peak_normalize
from .config import RunConfig
from .envelope import Envelope, F0Track, am_envelope, fm_envelope, track_f0
from .features import (
    FEATURE_NAMES,
    FeatureVector,
    Dataset,
    assemble,
    read_dataset,
    select_features,
    write_dataset,
)
from .lf_spectrum import (
    LfSpectrum,
    PeakSet,
    compute_lf_spectrum,
    dct_features,
    pick_r_formants,
    spectral_measures,
    threshold_features,
)
from .lf_spectrogram import (
    LfSpectrogram,
    TrajectorySet,
    compute_lf_spectrogram,
    extract_trajectories,
    trajectory_variances,
)
from .classifier import (
    EvalReport,
    SvmModel,
    evaluate,
    permutation_importance,
    split_dataset,
    train,
)
from .pipeline import extract_from_clip, extract_from_file
from .synth import SynthSpec, synthesize

__all__ = [
    "__version__",
    "AudioClip",
    "Dataset",
    "Envelope",
    "EvalReport",
    "F0Track",
    "FEATURE_NAMES",
    "FeatureVector",
    "LfSpectrogram",
    "LfSpectrum",
    "PeakSet",
    "RunConfig",
    "SvmModel",
    "SynthSpec",
    "TrajectorySet",
    "am_envelope",
    "assemble",
    "compute_lf_spectrogram",
    "compute_lf_spectrum",
    "dct_features",
    "evaluate",
    "extract_from_clip",
    "extract_from_file",
    "extract_trajectories",
    "filter_by_duration",
    "fm_envelope",
    "load_audio",
    "peak_normalize",
    "permutation_importance",
    "pick_r_formants",
    "read_dataset",
    "select_features",
    "spectral_measures",
    "split_dataset",
    "synthesize",
    "threshold_features",
    "track_f0",
    "trajectory_variances",
    "train",
    "write_dataset",
]
