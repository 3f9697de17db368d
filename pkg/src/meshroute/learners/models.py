"""Trainers for ridge, single CART trees, random forests and gradient-boosted trees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .tree import SplitParams, Tree, TreeEnsemble, build_tree

REQUIRED_KEYS = {
    "ridge": ("alpha",),
    "tree": (),
    "forest": ("n_estimators", "max_depth", "max_features", "min_samples_leaf",
               "min_samples_split"),
    "boosted": ("n_estimators", "max_depth", "learning_rate", "subsample", "colsample_bytree",
                "min_child_weight", "gamma"),
}


class LearnerError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerSpec:
    algorithm: str
    hyperparameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.algorithm not in REQUIRED_KEYS:
            raise LearnerError(f"unknown algorithm {self.algorithm!r}")
        missing = [k for k in REQUIRED_KEYS[self.algorithm] if k not in self.hyperparameters]
        if missing:
            raise LearnerError(f"{self.algorithm} spec missing {', '.join(missing)}")

    def get(self, key: str, default=None):
        return self.hyperparameters.get(key, default)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


# ---------------------------------------------------------------- ridge

@dataclass
class RidgeModel:
    coef: np.ndarray
    intercept: float
    alpha: float
    algorithm: str = "ridge"
    seed: int = 0

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef + self.intercept

    def to_dict(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d: dict, hyper: dict, seed: int = 0) -> "RidgeModel":
        return cls(np.asarray(d["coef"], dtype=float), float(d["intercept"]),
                   float(hyper["alpha"]), seed=seed)


def train_ridge(X, y, alpha: float) -> RidgeModel:
    """Solve (XcᵀXc + αI)β = Xcᵀyc on centred data; the intercept is not penalised."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise LearnerError("ridge needs at least one row")
    if alpha < 0:
        raise LearnerError("alpha must be >= 0")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    A = Xc.T @ Xc + alpha * np.eye(X.shape[1])
    if alpha == 0 and np.linalg.matrix_rank(A) < X.shape[1]:
        raise LearnerError("singular system at alpha=0; use alpha > 0")
    try:
        beta = np.linalg.solve(A, Xc.T @ (y - y_mean))
    except np.linalg.LinAlgError:
        raise LearnerError("singular system; use alpha > 0") from None
    return RidgeModel(beta, float(y_mean - x_mean @ beta), float(alpha))


# ---------------------------------------------------------------- single tree

@dataclass
class TreeModel:
    tree: Tree
    task: str
    algorithm: str = "tree"
    seed: int = 0

    def predict(self, X) -> np.ndarray:
        out = self.tree.predict(X)
        return (out > 0.5).astype(float) if self.task == "classification" else out

    def predict_proba(self, X) -> np.ndarray:
        return self.tree.predict(X)

    def to_dict(self) -> dict:
        return {"task": self.task, "tree": self.tree.to_dict()}

    @classmethod
    def from_dict(cls, d: dict, hyper: dict, seed: int = 0) -> "TreeModel":
        return cls(Tree.from_dict(d["tree"]), d["task"], seed=seed)


def _split_params(p: Dict[str, Any]) -> SplitParams:
    depth = p.get("max_depth")
    return SplitParams(
        max_depth=None if depth is None else int(depth),
        min_samples_split=int(p.get("min_samples_split", 2)),
        min_samples_leaf=int(p.get("min_samples_leaf", 1)),
    )


def train_tree(X, y, params: Optional[Dict[str, Any]] = None, task: str = "regression") -> TreeModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < 1:
        raise LearnerError("tree needs at least one row")
    criterion = "gini" if task == "classification" else "mse"
    tree = build_tree(X, criterion, _split_params(params or {}), y=y)
    return TreeModel(tree, task)


# ---------------------------------------------------------------- forest

def _resolve_max_features(value, m: int) -> int:
    if value is None:
        return m
    if value == "log2":
        return max(1, int(math.log2(m)))
    if value == "sqrt":
        return max(1, int(math.sqrt(m)))
    if isinstance(value, float) and 0 < value <= 1:
        return max(1, int(value * m))
    return max(1, min(int(value), m))


@dataclass
class ForestModel:
    trees: List[Tree]
    algorithm: str = "forest"
    seed: int = 0

    def __post_init__(self) -> None:
        self._ensemble = TreeEnsemble(self.trees)

    def predict_proba(self, X) -> np.ndarray:
        """Fraction of trees voting for the positive class."""
        votes = self._ensemble.predict_each(X) > 0.5
        return votes.mean(axis=0)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(float)

    def to_dict(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict, hyper: dict, seed: int = 0) -> "ForestModel":
        return cls([Tree.from_dict(t) for t in d["trees"]], seed=seed)


def train_forest(X, y, spec: LearnerSpec, seed: int) -> ForestModel:
    """Bagged Gini trees; each tree gets its own generator spawned from ``seed``.

    Optional ``class_weight='balanced'`` reweights classes inversely to their
    frequency in each bootstrap sample.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    p = spec.hyperparameters
    sp = _split_params(p)
    sp.max_features = _resolve_max_features(p.get("max_features"), m)
    bootstrap = bool(p.get("bootstrap", True))
    balanced = p.get("class_weight") == "balanced"
    trees = []
    for child in np.random.SeedSequence(seed).spawn(int(p["n_estimators"])):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
        yb = y[idx]
        w = None
        if balanced:
            pos = yb.sum()
            neg = len(yb) - pos
            w = np.where(yb > 0.5, len(yb) / (2 * max(pos, 1)), len(yb) / (2 * max(neg, 1)))
        trees.append(build_tree(X[idx], "gini", sp, y=yb, sample_weight=w, rng=rng))
    return ForestModel(trees, seed=seed)


# ---------------------------------------------------------------- boosting

@dataclass
class BoostedModel:
    trees: List[Tree]
    base_score: float
    learning_rate: float
    task: str
    algorithm: str = "boosted"
    seed: int = 0
    train_loss: List[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._ensemble = TreeEnsemble(self.trees) if self.trees else None

    def raw_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        n = 1 if X.ndim == 1 else X.shape[0]
        out = np.full(n, self.base_score)
        if self._ensemble is not None:
            out = out + self.learning_rate * self._ensemble.predict_each(X).sum(axis=0)
        return out

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.raw_score(X))

    def predict(self, X) -> np.ndarray:
        if self.task == "classification":
            return (self.predict_proba(X) >= 0.5).astype(float)
        return self.raw_score(X)

    def to_dict(self) -> dict:
        return {"task": self.task, "base_score": self.base_score,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict, hyper: dict, seed: int = 0) -> "BoostedModel":
        return cls([Tree.from_dict(t) for t in d["trees"]], float(d["base_score"]),
                   float(hyper.get("learning_rate", 0.1)), d["task"], seed=seed)


def _loss(task: str, y, raw) -> float:
    if task == "classification":
        # log(1 + e^z) - y z, written stably
        return float(np.mean(np.logaddexp(0.0, raw) - y * raw))
    return float(np.mean((y - raw) ** 2))


def train_boosted(X, y, spec: LearnerSpec, seed: int, task: str = "regression") -> BoostedModel:
    """Newton-boosted trees: squared loss for regression, logistic loss for classification.

    ``subsample`` draws rows without replacement each round, ``colsample_bytree``
    draws features per tree, ``min_child_weight`` floors each child's hessian sum
    and ``gamma`` floors the split gain.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    p = spec.hyperparameters
    lr = float(p.get("learning_rate", 0.1))
    sp = SplitParams(
        max_depth=int(p["max_depth"]),
        min_child_weight=float(p["min_child_weight"]),
        gamma=float(p["gamma"]),
        reg_lambda=float(p.get("reg_lambda", 1.0)),
    )
    subsample = float(p["subsample"])
    n_rows = max(1, int(round(subsample * n)))
    n_cols = max(1, int(round(float(p["colsample_bytree"]) * m)))
    if task == "classification":
        mean = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
        base = math.log(mean / (1 - mean))
    else:
        base = float(y.mean())
    rng = np.random.default_rng(seed)
    raw = np.full(n, base)
    trees: List[Tree] = []
    losses = [_loss(task, y, raw)]
    for _ in range(int(p["n_estimators"])):
        if task == "classification":
            prob = _sigmoid(raw)
            g, h = prob - y, prob * (1 - prob)
        else:
            g, h = raw - y, np.ones(n)
        rows = np.arange(n) if n_rows >= n else np.sort(rng.choice(n, n_rows, replace=False))
        cols = None if n_cols >= m else np.sort(rng.choice(m, n_cols, replace=False))
        tree = build_tree(X[rows], "newton", sp, grad=g[rows], hess=h[rows], feature_mask=cols)
        trees.append(tree)
        raw = raw + lr * tree.predict(X)
        losses.append(_loss(task, y, raw))
    return BoostedModel(trees, base, lr, task, seed=seed, train_loss=losses)
