"""Run configuration: every tunable of the pipeline in one flat dataclass.

A resolved config is echoed into every output artifact so results stay
reproducible. Loading rejects unknown keys instead of ignoring typos.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class RunConfig:
    # audio selection
    min_duration_s: float = 4.0

    # AM/FM envelopes
    env_rate_hz: float = 100.0
    smooth_ms: float = 50.0
    f0_min_hz: float = 60.0
    f0_max_hz: float = 400.0
    f0_frame_s: float = 0.040
    f0_hop_s: float = 0.010
    voicing_threshold: float = 0.30

    # low-frequency spectrum
    f_max_hz: float = 10.0
    zero_pad_factor: int = 4
    n_formants: int = 6
    peak_threshold: float = 0.5
    min_peak_separation_hz: float = 0.3
    rolloff_fraction: float = 0.85
    n_dct: int = 4

    # low-frequency spectrogram
    window_s: float = 3.0
    hop_s: float = 0.1
    spectrogram_taper: bool = False
    trajectory_order: str = "magnitude"  # or "frequency"

    # classifier
    test_fraction: float = 0.2
    cv_folds: int = 5
    svm_c_grid: tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    svm_gamma_grid: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0)
    gamma_heuristic: bool = True
    kkt_tol: float = 1e-3
    importance_repeats: int = 20

    # shared RNG seed (splits, folds, importance shuffles)
    seed: int = 0

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["svm_c_grid"] = list(self.svm_c_grid)
        d["svm_gamma_grid"] = list(self.svm_gamma_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(d)
        for key in ("svm_c_grid", "svm_gamma_grid"):
            if key in kwargs:
                kwargs[key] = tuple(float(v) for v in kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)

    def replace(self, **overrides) -> "RunConfig":
        return dataclasses.replace(self, **overrides)
