"""Exception types shared across the pipeline.

Everything derives from RfaError so batch drivers can catch one base class,
record a per-file skip reason, and keep going.
"""


class RfaError(Exception):
    """Base class for all pipeline errors."""


class AudioReadError(RfaError):
    """File is missing, truncated, or not a readable RIFF/WAVE container."""


class UnsupportedEncodingError(RfaError):
    """WAV file is not linear PCM (e.g. mu-law/ADPCM) or has an odd width."""


class EmptyAudioError(RfaError):
    """WAV file contains zero audio frames."""


class ClipTooShortError(RfaError):
    """Signal or envelope is shorter than the analysis requires."""


class UnvoicedClipError(RfaError):
    """No voiced frames found; FM features cannot be computed."""


class AllZeroSpectrumError(RfaError):
    """Spectrum has no energy; distribution measures are undefined."""


class DatasetFormatError(RfaError):
    """Feature CSV violates the dataset schema."""


class SchemaMismatchError(RfaError):
    """Model and dataset disagree on feature names."""


class ConvergenceError(RfaError):
    """Dual solver hit its iteration cap before reaching tolerance."""
