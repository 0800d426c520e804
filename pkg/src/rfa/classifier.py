"""Multi-class SVM harness: split, grid-search CV, evaluation, importance.

Protocol: stratified train/test split, per-feature standardization fit on
the training split, grid search over (C, gamma) by stratified k-fold CV
accuracy, refit of a one-vs-one RBF machine per class pair, evaluation by
accuracy and support-weighted F1 with a full confusion matrix, and
permutation feature importance (mean accuracy drop over repeated
within-column shuffles).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaMismatchError
from .features import Dataset
from .svm import BinarySvm, smo_solve, squared_distances

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_GRID = (0.001, 0.01, 0.1, 1.0)


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray  # per-feature std; zero-variance features get 1

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean=mean, scale=scale)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


@dataclass
class SvmModel:
    """One-vs-one RBF SVM with its standardizer and feature schema."""

    classes: list[str]
    feature_names: list[str]
    standardizer: Standardizer
    machines: dict[tuple[int, int], BinarySvm]
    c: float
    gamma: float

    def predict(self, x_raw: np.ndarray) -> list[str]:
        x = self.standardizer.transform(np.atleast_2d(x_raw))
        n, k = x.shape[0], len(self.classes)
        votes = np.zeros((n, k), dtype=int)
        scores = np.zeros((n, k))
        for (a, b), machine in self.machines.items():
            d = machine.decision(x)
            a_wins = d >= 0
            votes[:, a] += a_wins
            votes[:, b] += ~a_wins
            scores[:, a] += d
            scores[:, b] -= d
        best_votes = votes.max(axis=1, keepdims=True)
        tied_scores = np.where(votes == best_votes, scores, -np.inf)
        winners = np.argmax(tied_scores, axis=1)
        return [self.classes[w] for w in winners]


@dataclass
class GridPoint:
    c: float
    gamma: float
    cv_accuracy: float


@dataclass
class GridReport:
    points: list[GridPoint]
    best_c: float
    best_gamma: float
    best_cv_accuracy: float
    folds: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "points": [
                {"C": p.c, "gamma": p.gamma, "cv_accuracy": p.cv_accuracy}
                for p in self.points
            ],
            "best": {
                "C": self.best_c,
                "gamma": self.best_gamma,
                "cv_accuracy": self.best_cv_accuracy,
            },
            "folds": self.folds,
            "seed": self.seed,
        }


@dataclass
class EvalReport:
    classes: list[str]
    accuracy: float
    weighted_f1: float
    confusion: np.ndarray  # rows = true, columns = predicted
    per_class: dict[str, dict[str, float]]

    @property
    def confusion_row_pct(self) -> np.ndarray:
        totals = self.confusion.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = 100.0 * self.confusion / totals
        return np.where(totals > 0, pct, 0.0)

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
            "confusion": self.confusion.tolist(),
            "confusion_row_pct": self.confusion_row_pct.tolist(),
            "per_class": self.per_class,
        }

    def format_table(self) -> str:
        lines = [
            f"accuracy     {self.accuracy:.4f}",
            f"weighted F1  {self.weighted_f1:.4f}",
            "",
            f"{'class':<10}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>10}",
        ]
        for name in self.classes:
            m = self.per_class[name]
            lines.append(
                f"{name:<10}{m['precision']:>10.4f}{m['recall']:>10.4f}"
                f"{m['f1']:>10.4f}{int(m['support']):>10d}"
            )
        lines.append("")
        lines.append(format_confusion(self.confusion, self.classes))
        return "\n".join(lines)


def format_confusion(confusion: np.ndarray, classes: list[str]) -> str:
    """Confusion matrix with row-normalized percentages in parentheses."""
    width = max(12, max(len(c) for c in classes) + 2)
    header = " " * 10 + "".join(f"{c:>{width}}" for c in classes)
    lines = [header]
    totals = confusion.sum(axis=1)
    for i, name in enumerate(classes):
        cells = []
        for j in range(len(classes)):
            pct = 100.0 * confusion[i, j] / totals[i] if totals[i] else 0.0
            cells.append(f"{confusion[i, j]:>5d} ({pct:5.1f}%)" .rjust(width))
        lines.append(f"{name:<10}" + "".join(cells))
    return "\n".join(lines)


def split_dataset(
    ds: Dataset, test_fraction: float = 0.2, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Stratified split; per-class test counts are round(n_c * fraction),
    clamped so both sides keep at least one sample per class."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(
            "test_fraction must lie strictly between 0 and 1 "
            "(0 would make an empty test set)"
        )
    labels = np.asarray(ds.y)
    classes = ds.label_set
    if len(classes) < 2:
        raise ValueError("need at least 2 labeled classes to split")
    rng = np.random.default_rng(seed)
    test_rows: list[int] = []
    train_rows: list[int] = []
    for cls in classes:
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < 2:
            raise ValueError(f"class {cls!r} has fewer than 2 samples")
        n_test = int(round(len(idx) * test_fraction))
        n_test = min(max(n_test, 1), len(idx) - 1)
        perm = rng.permutation(idx)
        test_rows.extend(perm[:n_test])
        train_rows.extend(perm[n_test:])
    return ds.subset(np.sort(train_rows)), ds.subset(np.sort(test_rows))


def _stratified_fold_ids(labels: np.ndarray, folds: int, rng) -> np.ndarray:
    fold_of = np.empty(len(labels), dtype=int)
    for cls in sorted(set(labels)):
        idx = np.nonzero(labels == cls)[0]
        perm = rng.permutation(idx)
        fold_of[perm] = np.arange(len(perm)) % folds
    return fold_of


def _fit_ovo(
    x: np.ndarray,
    labels: np.ndarray,
    classes: list[str],
    c: float,
    gamma: float,
    tol: float,
    d2: np.ndarray,
) -> dict[tuple[int, int], BinarySvm]:
    machines = {}
    for a, b in itertools.combinations(range(len(classes)), 2):
        rows = np.nonzero((labels == classes[a]) | (labels == classes[b]))[0]
        y = np.where(labels[rows] == classes[a], 1.0, -1.0)
        kernel = np.exp(-gamma * d2[np.ix_(rows, rows)])
        result = smo_solve(kernel, y, c, tol=tol)
        keep = result.alpha > 1e-12 * max(1.0, c)
        machines[(a, b)] = BinarySvm(
            support_vectors=np.array(x[rows][keep]),
            dual_coef=result.alpha[keep] * y[keep],
            bias=result.bias,
            gamma=gamma,
        )
    return machines


def _predict_ovo(
    machines: dict[tuple[int, int], BinarySvm], classes: list[str], x: np.ndarray
) -> list[str]:
    model = SvmModel(
        classes=classes,
        feature_names=[],
        standardizer=Standardizer(mean=np.zeros(x.shape[1]), scale=np.ones(x.shape[1])),
        machines=machines,
        c=0.0,
        gamma=0.0,
    )
    return model.predict(x)


def train(
    train_ds: Dataset,
    c_grid: tuple[float, ...] = DEFAULT_C_GRID,
    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID,
    folds: int = 5,
    seed: int = 0,
    kkt_tol: float = 1e-3,
    gamma_heuristic: bool = True,
) -> tuple[SvmModel, GridReport]:
    """Grid-search (C, gamma) by stratified k-fold CV, refit on all of train.

    Ties in CV accuracy resolve to the smallest C, then the smallest gamma.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if not np.all(np.isfinite(train_ds.X)):
        raise ValueError("training features must be finite")
    labels = np.asarray(train_ds.y)
    classes = train_ds.label_set
    if len(classes) < 2:
        raise ValueError("need at least 2 labeled classes")
    counts = {cls: int(np.sum(labels == cls)) for cls in classes}
    thin = [cls for cls, n in counts.items() if n < folds]
    if thin:
        raise ValueError(
            f"classes with fewer samples than folds={folds}: {', '.join(thin)}"
        )

    standardizer = Standardizer.fit(train_ds.X)
    x = standardizer.transform(train_ds.X)
    d2 = squared_distances(x, x)

    gammas = list(gamma_grid)
    if gamma_heuristic:
        mean_var = float(x.var())
        if mean_var > 0:
            g = 1.0 / (x.shape[1] * mean_var)
            if not any(np.isclose(g, existing) for existing in gammas):
                gammas.append(g)

    rng = np.random.default_rng(seed)
    fold_of = _stratified_fold_ids(labels, folds, rng)

    points: list[GridPoint] = []
    for c in c_grid:
        for gamma in gammas:
            correct = 0
            for f in range(folds):
                fit_rows = np.nonzero(fold_of != f)[0]
                val_rows = np.nonzero(fold_of == f)[0]
                machines = _fit_ovo(
                    x[fit_rows], labels[fit_rows], classes, c, gamma, kkt_tol,
                    d2[np.ix_(fit_rows, fit_rows)],
                )
                predicted = _predict_ovo(machines, classes, x[val_rows])
                correct += int(np.sum(np.asarray(predicted) == labels[val_rows]))
            points.append(GridPoint(c=c, gamma=gamma, cv_accuracy=correct / len(labels)))

    best = min(points, key=lambda p: (-p.cv_accuracy, p.c, p.gamma))
    machines = _fit_ovo(x, labels, classes, best.c, best.gamma, kkt_tol, d2)
    model = SvmModel(
        classes=classes,
        feature_names=list(train_ds.feature_names),
        standardizer=standardizer,
        machines=machines,
        c=best.c,
        gamma=best.gamma,
    )
    report = GridReport(
        points=points,
        best_c=best.c,
        best_gamma=best.gamma,
        best_cv_accuracy=best.cv_accuracy,
        folds=folds,
        seed=seed,
    )
    return model, report


def metrics_from_predictions(
    y_true: list[str], y_pred: list[str], classes: list[str]
) -> EvalReport:
    """Accuracy, support-weighted F1, per-class metrics, confusion matrix."""
    index = {cls: i for i, cls in enumerate(classes)}
    k = len(classes)
    confusion = np.zeros((k, k), dtype=int)
    for t, p in zip(y_true, y_pred):
        confusion[index[t], index[p]] += 1

    total = confusion.sum()
    accuracy = float(np.trace(confusion)) / total
    per_class: dict[str, dict[str, float]] = {}
    weighted_f1 = 0.0
    for i, cls in enumerate(classes):
        tp = confusion[i, i]
        support = confusion[i].sum()
        predicted = confusion[:, i].sum()
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {
            "precision": float(precision),
            "recall": float(recall),
            "f1": float(f1),
            "support": float(support),
        }
        weighted_f1 += (support / total) * f1

    return EvalReport(
        classes=list(classes),
        accuracy=accuracy,
        weighted_f1=float(weighted_f1),
        confusion=confusion,
        per_class=per_class,
    )


def evaluate(model: SvmModel, test_ds: Dataset) -> EvalReport:
    """Predict the test set and compute the metric suite."""
    if len(test_ds) == 0:
        raise ValueError("test set is empty")
    _check_schema(model.feature_names, test_ds.feature_names)
    unknown = sorted(set(test_ds.y) - set(model.classes) - {""})
    if unknown:
        raise SchemaMismatchError(f"test labels unseen in training: {', '.join(unknown)}")
    predicted = model.predict(test_ds.X)
    return metrics_from_predictions(list(test_ds.y), predicted, model.classes)


def _check_schema(model_names: list[str], data_names: list[str]) -> None:
    if list(model_names) == list(data_names):
        return
    for pos, (m, d) in enumerate(itertools.zip_longest(model_names, data_names)):
        if m != d:
            raise SchemaMismatchError(
                f"feature mismatch at column {pos}: model has {m!r}, data has {d!r}"
            )


def permutation_importance(
    model: SvmModel, test_ds: Dataset, n_repeats: int = 20, seed: int = 0
) -> list[tuple[str, float]]:
    """Mean accuracy drop per shuffled feature column, sorted descending."""
    if n_repeats < 1:
        raise ValueError("n_repeats must be at least one repeat")
    _check_schema(model.feature_names, test_ds.feature_names)
    y_true = np.asarray(test_ds.y)
    baseline = np.mean(np.asarray(model.predict(test_ds.X)) == y_true)

    rng = np.random.default_rng(seed)
    drops: list[tuple[str, float]] = []
    for col, name in enumerate(test_ds.feature_names):
        accs = []
        for _ in range(n_repeats):
            x = test_ds.X.copy()
            x[:, col] = rng.permutation(x[:, col])
            accs.append(np.mean(np.asarray(model.predict(x)) == y_true))
        drops.append((name, float(baseline - np.mean(accs))))
    drops.sort(key=lambda item: (-item[1], item[0]))
    return drops


# ---------------------------------------------------------------------------
# model (de)serialization

MODEL_FORMAT_VERSION = 1


def model_to_dict(model: SvmModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "rfa-svm-ovo",
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "C": model.c,
        "gamma": model.gamma,
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "scale": model.standardizer.scale.tolist(),
        },
        "machines": [
            {
                "class_a": model.classes[a],
                "class_b": model.classes[b],
                "support_vectors": machine.support_vectors.tolist(),
                "dual_coef": machine.dual_coef.tolist(),
                "bias": machine.bias,
            }
            for (a, b), machine in sorted(model.machines.items())
        ],
    }


def model_from_dict(data: dict) -> SvmModel:
    if data.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format: {data.get('format_version')!r}")
    classes = list(data["classes"])
    index = {cls: i for i, cls in enumerate(classes)}
    machines = {}
    for m in data["machines"]:
        key = (index[m["class_a"]], index[m["class_b"]])
        machines[key] = BinarySvm(
            support_vectors=np.asarray(m["support_vectors"], dtype=np.float64),
            dual_coef=np.asarray(m["dual_coef"], dtype=np.float64),
            bias=float(m["bias"]),
            gamma=float(data["gamma"]),
        )
    return SvmModel(
        classes=classes,
        feature_names=list(data["feature_names"]),
        standardizer=Standardizer(
            mean=np.asarray(data["standardizer"]["mean"], dtype=np.float64),
            scale=np.asarray(data["standardizer"]["scale"], dtype=np.float64),
        ),
        machines=machines,
        c=float(data["C"]),
        gamma=float(data["gamma"]),
    )


def save_model(model: SvmModel, path: str | Path, extra: dict | None = None) -> None:
    doc = model_to_dict(model)
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> SvmModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
