"""Classification and regression metrics, and seeded train/test splitting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.stats import rankdata


class MetricError(ValueError):
    pass


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    role: str = ""

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            self.X = self.X.reshape(len(self.y), -1)
        if len(self.X) != len(self.y):
            raise ValueError("X and y lengths differ")
        if self.role in ("A", "D") and len(self.y) and not np.isin(self.y, (0.0, 1.0)).all():
            raise ValueError(f"role {self.role} needs binary labels")

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.role)

    @property
    def is_classification(self) -> bool:
        return self.role in ("A", "D")


def roc_auc(y_true, scores) -> float:
    """Mann-Whitney AUC with midranks for tied scores."""
    y = np.asarray(y_true, dtype=float)
    s = np.asarray(scores, dtype=float)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC AUC is undefined for a single-class dataset")
    ranks = rankdata(s)
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def classification_metrics(y_true, proba, threshold: float = 0.5) -> Dict[str, float]:
    y = np.asarray(y_true, dtype=float)
    p = np.asarray(proba, dtype=float)
    pred = (p >= threshold).astype(float)
    tp = float(((pred == 1) & (y == 1)).sum())
    fp = float(((pred == 1) & (y == 0)).sum())
    fn = float(((pred == 0) & (y == 1)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": float((pred == y).mean()),
        "f1": f1,
        "roc_auc": roc_auc(y, p),
        "precision_pos": precision,
        "recall_pos": recall,
    }


def evaluate_classifier(model, dataset: Dataset) -> Dict[str, float]:
    return classification_metrics(dataset.y, model.predict_proba(dataset.X))


def regression_metrics(y_true, pred) -> Dict[str, float]:
    y = np.asarray(y_true, dtype=float)
    yhat = np.asarray(pred, dtype=float)
    if len(y) < 2:
        raise MetricError("regression metrics need at least two rows")
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0:
        raise MetricError("R^2 is undefined for zero-variance labels")
    resid = y - yhat
    return {
        "rmse": float(np.sqrt(np.mean(resid ** 2))),
        "mae": float(np.mean(np.abs(resid))),
        "r2": 1.0 - float((resid ** 2).sum()) / ss_tot,
    }


def evaluate_regressor(model, dataset: Dataset) -> Dict[str, float]:
    return regression_metrics(dataset.y, model.predict(dataset.X))


def split_train_test(dataset: Dataset, fraction: float = 0.8, seed: int = 42,
                     stratify: bool | None = None) -> Tuple[Dataset, Dataset]:
    """Seeded shuffle then split; stratified per label for classification roles."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    if stratify is None:
        stratify = dataset.is_classification
    rng = np.random.default_rng(seed)
    n = len(dataset)
    if not stratify:
        perm = rng.permutation(n)
        cut = int(round(fraction * n))
        return dataset.subset(np.sort(perm[:cut])), dataset.subset(np.sort(perm[cut:]))
    train_idx, test_idx = [], []
    for label in np.unique(dataset.y):
        members = np.flatnonzero(dataset.y == label)
        if len(members) < 2:
            raise ValueError(f"class {label:g} has fewer than 2 members; cannot stratify")
        perm = rng.permutation(members)
        cut = min(max(int(round(fraction * len(perm))), 1), len(perm) - 1)
        train_idx.append(perm[:cut])
        test_idx.append(perm[cut:])
    return (dataset.subset(np.sort(np.concatenate(train_idx))),
            dataset.subset(np.sort(np.concatenate(test_idx))))
