"""The named rhythm feature vector and dataset persistence.

The fused vector has 52 dimensions in a frozen order:

  group A (14): per envelope (AM then FM): NDP, MFDP, VFDP, DCT0..DCT3
  group B (14): per envelope: centroid, spread, rolloff, flatness,
                entropy, skewness, kurtosis
  group C (24): per envelope: VarRF1..VarRF6, VarMag1..VarMag6

The six R-formant frequencies per envelope are persisted as a separate
optional column block (group R) and are excluded from the fused vector.

Datasets round-trip through CSV: header `source_id,label,<names...>`,
values at 12 significant digits, optional leading `#` metadata lines.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError
from .lf_spectrum import SpectralMeasures

N_FORMANTS = 6
N_DCT = 4

GROUP_A = "A"
GROUP_B = "B"
GROUP_C = "C"
GROUP_R = "R"

_ENVELOPES = ("am", "fm")

_A_PER_ENV = ["ndp", "mfdp", "vfdp"] + [f"dct{i}" for i in range(N_DCT)]
_B_PER_ENV = ["centroid", "spread", "rolloff", "flatness", "entropy",
              "skewness", "kurtosis"]
_C_PER_ENV = [f"var_rf{i}" for i in range(1, N_FORMANTS + 1)] + [
    f"var_mag{i}" for i in range(1, N_FORMANTS + 1)
]
_R_PER_ENV = [f"rf{i}" for i in range(1, N_FORMANTS + 1)]


def _per_env(names: list[str]) -> list[str]:
    return [f"{env}_{name}" for env in _ENVELOPES for name in names]


FEATURE_NAMES: list[str] = _per_env(_A_PER_ENV) + _per_env(_B_PER_ENV) + _per_env(_C_PER_ENV)
FEATURE_GROUPS: list[str] = (
    [GROUP_A] * len(_per_env(_A_PER_ENV))
    + [GROUP_B] * len(_per_env(_B_PER_ENV))
    + [GROUP_C] * len(_per_env(_C_PER_ENV))
)
RFORMANT_NAMES: list[str] = _per_env(_R_PER_ENV)

FUSED_DIM = len(FEATURE_NAMES)
assert FUSED_DIM == 52

# canonical CSV column order: fused block, then the optional R block
ALL_COLUMN_NAMES: list[str] = FEATURE_NAMES + RFORMANT_NAMES
GROUP_OF: dict[str, str] = {
    **dict(zip(FEATURE_NAMES, FEATURE_GROUPS)),
    **{name: GROUP_R for name in RFORMANT_NAMES},
}


@dataclass(frozen=True)
class EnvelopeSpectrumFeatures:
    """Whole-utterance spectrum measures for one envelope."""

    ndp: int
    mfdp_hz: float
    vfdp_hz2: float
    dct: np.ndarray  # N_DCT coefficients
    measures: SpectralMeasures
    r_formants_hz: np.ndarray  # N_FORMANTS frequencies, sentinel-padded

    def __post_init__(self):
        if len(self.dct) != N_DCT:
            raise ValueError(f"expected {N_DCT} DCT coefficients")
        if len(self.r_formants_hz) != N_FORMANTS:
            raise ValueError(f"expected {N_FORMANTS} R-formants")

    @property
    def group_a(self) -> np.ndarray:
        return np.concatenate([[self.ndp, self.mfdp_hz, self.vfdp_hz2], self.dct])

    @property
    def group_b(self) -> np.ndarray:
        return np.asarray(self.measures, dtype=np.float64)


@dataclass(frozen=True)
class FeatureVector:
    """One utterance's fused 52-dim vector plus the optional R block."""

    source_id: str
    values: np.ndarray
    label: str | None = None
    r_formants: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != (FUSED_DIM,):
            raise ValueError(f"expected {FUSED_DIM} values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        if self.r_formants is not None:
            rf = np.asarray(self.r_formants, dtype=np.float64)
            object.__setattr__(self, "r_formants", rf)
            if rf.shape != (len(RFORMANT_NAMES),):
                raise ValueError(f"expected {len(RFORMANT_NAMES)} R-formant values")


def assemble(
    source_id: str,
    am_spec_feats: EnvelopeSpectrumFeatures,
    fm_spec_feats: EnvelopeSpectrumFeatures,
    am_traj_vars: np.ndarray,
    fm_traj_vars: np.ndarray,
    label: str | None = None,
) -> FeatureVector:
    """Assemble the fused vector in the frozen A|B|C order."""
    if fm_spec_feats is None or fm_traj_vars is None:
        raise ValueError("FM features missing; utterance must be excluded")
    am_traj_vars = np.asarray(am_traj_vars, dtype=np.float64)
    fm_traj_vars = np.asarray(fm_traj_vars, dtype=np.float64)
    if am_traj_vars.shape != (2 * N_FORMANTS,) or fm_traj_vars.shape != (2 * N_FORMANTS,):
        raise ValueError(f"expected {2 * N_FORMANTS} trajectory variances per envelope")

    values = np.concatenate(
        [
            am_spec_feats.group_a,
            fm_spec_feats.group_a,
            am_spec_feats.group_b,
            fm_spec_feats.group_b,
            am_traj_vars,
            fm_traj_vars,
        ]
    )
    r_formants = np.concatenate(
        [am_spec_feats.r_formants_hz, fm_spec_feats.r_formants_hz]
    )
    return FeatureVector(
        source_id=source_id, values=values, label=label, r_formants=r_formants
    )


@dataclass
class Dataset:
    """Rows of named feature columns with labels and source ids."""

    feature_names: list[str]
    X: np.ndarray  # (rows, features)
    y: list[str]  # empty string marks an unlabeled row
    source_ids: list[str]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise ValueError("X shape does not match feature_names")
        if len(self.y) != self.X.shape[0] or len(self.source_ids) != self.X.shape[0]:
            raise ValueError("labels/source_ids length mismatch")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def label_set(self) -> list[str]:
        return sorted({label for label in self.y if label})

    def select(self, names: list[str]) -> "Dataset":
        index = {name: i for i, name in enumerate(self.feature_names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise DatasetFormatError(f"dataset lacks columns: {', '.join(missing)}")
        cols = [index[n] for n in names]
        return Dataset(
            feature_names=list(names),
            X=self.X[:, cols],
            y=list(self.y),
            source_ids=list(self.source_ids),
        )

    def subset(self, rows: np.ndarray) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(
            feature_names=list(self.feature_names),
            X=self.X[rows],
            y=[self.y[i] for i in rows],
            source_ids=[self.source_ids[i] for i in rows],
        )


def dataset_from_vectors(vectors: list[FeatureVector]) -> Dataset:
    """Build a Dataset; includes the R block iff every row carries one."""
    if not vectors:
        raise DatasetFormatError("empty dataset")
    with_rf = all(v.r_formants is not None for v in vectors)
    names = list(ALL_COLUMN_NAMES) if with_rf else list(FEATURE_NAMES)
    rows = [
        np.concatenate([v.values, v.r_formants]) if with_rf else v.values
        for v in vectors
    ]
    return Dataset(
        feature_names=names,
        X=np.vstack(rows),
        y=[v.label or "" for v in vectors],
        source_ids=[v.source_id for v in vectors],
    )


def select_features(
    ds: Dataset,
    groups: list[str] | None = None,
    envelopes: list[str] | None = None,
) -> Dataset:
    """Restrict to feature groups (R/A/B/C) and envelopes (AM/FM)."""
    groups = [g.upper() for g in (groups or [GROUP_A, GROUP_B, GROUP_C])]
    envelopes = [e.lower() for e in (envelopes or ["AM", "FM"])]
    bad = [g for g in groups if g not in (GROUP_R, GROUP_A, GROUP_B, GROUP_C)]
    if bad:
        raise ValueError(f"unknown feature groups: {', '.join(bad)}")
    bad = [e for e in envelopes if e not in _ENVELOPES]
    if bad:
        raise ValueError(f"unknown envelopes: {', '.join(bad)}")
    names = [
        name
        for name in ALL_COLUMN_NAMES
        if GROUP_OF[name] in groups and name.split("_", 1)[0] in envelopes
    ]
    return ds.select(names)


def write_dataset(ds: Dataset, path: str | Path, metadata: dict | None = None) -> None:
    """Write the canonical feature CSV (12 significant digits per value)."""
    if len(ds) == 0:
        raise DatasetFormatError("refusing to write an empty dataset")
    unknown = [n for n in ds.feature_names if n not in GROUP_OF]
    if unknown:
        raise DatasetFormatError(f"unknown columns: {', '.join(unknown)}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if metadata is not None:
            fh.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["source_id", "label"] + list(ds.feature_names))
        for sid, label, row in zip(ds.source_ids, ds.y, ds.X):
            writer.writerow([sid, label] + [f"{v:.12g}" for v in row])


def read_dataset(path: str | Path) -> Dataset:
    """Read a feature CSV, validating the schema.

    Columns must be known feature names in canonical relative order; every
    row must match the header width; parse errors report the line number.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [
            (i + 1, line)
            for i, line in enumerate(fh)
            if line.strip() and not line.startswith("#")
        ]
    if not lines:
        raise DatasetFormatError(f"{path}: empty dataset")

    rows = list(csv.reader(line for _, line in lines))
    line_numbers = [n for n, _ in lines]
    header = rows[0]
    if len(header) < 2 or header[0] != "source_id":
        raise DatasetFormatError(f"{path}: first column must be 'source_id'")
    if header[1] != "label":
        raise DatasetFormatError(f"{path}: missing 'label' column")
    names = header[2:]
    canonical_rank = {name: i for i, name in enumerate(ALL_COLUMN_NAMES)}
    last_rank = -1
    for name in names:
        if name not in canonical_rank:
            raise DatasetFormatError(f"{path}: unknown column {name!r}")
        if canonical_rank[name] <= last_rank:
            raise DatasetFormatError(
                f"{path}: column {name!r} violates the canonical column order"
            )
        last_rank = canonical_rank[name]
    if not names:
        raise DatasetFormatError(f"{path}: no feature columns")

    X = np.empty((len(rows) - 1, len(names)))
    y: list[str] = []
    source_ids: list[str] = []
    for r, row in enumerate(rows[1:]):
        line_no = line_numbers[r + 1]
        if len(row) != len(header):
            raise DatasetFormatError(
                f"{path}:{line_no}: expected {len(header)} columns, got {len(row)}"
            )
        source_ids.append(row[0])
        y.append(row[1])
        try:
            X[r] = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{line_no}: {exc}") from exc

    if X.shape[0] == 0:
        raise DatasetFormatError(f"{path}: empty dataset")
    return Dataset(feature_names=names, X=X, y=y, source_ids=source_ids)
