"""Training data for the four routing models, the trained bundle, and its on-disk layout.

Model roles:

A  delivery-success classifier  (boosted trees, logistic loss)
B  remaining-hops regressor      (boosted trees, squared loss)
C  remaining-delay regressor     (ridge)
D  forwarder classifier          (random forest on min-max normalised features)

A learns from every forwarded hop; B, C and D only from delivered messages.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .features import N_FEATURES, Normalizer, fit_normalizer
from .learners import (Dataset, LearnerSpec, evaluate_classifier, evaluate_regressor,
                       model_from_json, model_to_json, split_train_test, train_boosted,
                       train_forest, train_ridge)
from .records import HopLogRecord, group_by_message, logs_to_csv
from .scenario import atomic_write_text

MODEL_SPECS: Dict[str, LearnerSpec] = {
    "A": LearnerSpec("boosted", {
        "n_estimators": 200, "max_depth": 3, "learning_rate": 0.1, "subsample": 1.0,
        "colsample_bytree": 1.0, "min_child_weight": 5, "gamma": 0.2,
    }),
    "B": LearnerSpec("boosted", {
        "n_estimators": 300, "max_depth": 8, "learning_rate": 0.1, "subsample": 0.8,
        "colsample_bytree": 1.0, "min_child_weight": 1, "gamma": 0.0,
    }),
    "C": LearnerSpec("ridge", {"alpha": 0.1}),
    "D": LearnerSpec("forest", {
        "n_estimators": 200, "max_depth": None, "max_features": "log2",
        "min_samples_leaf": 1, "min_samples_split": 2,
    }),
}
BUNDLE_FILES = {"A": "model_a.json", "B": "model_b.json", "C": "model_c.json", "D": "model_d.json"}
NORMALIZER_FILE = "normalizer_d.json"
MANIFEST_FILE = "manifest.json"


class BundleError(ValueError):
    pass


def _forwarded(logs: Iterable[HopLogRecord]) -> List[HopLogRecord]:
    return [r for r in logs if r.hop_outcome == "forwarded"]


def _empty(role: str) -> Dataset:
    return Dataset(np.zeros((0, N_FEATURES)), np.zeros(0), role)


def extract_dataset_a(logs: Sequence[HopLogRecord]) -> Dataset:
    rows, labels = [], []
    for r in _forwarded(logs):
        rows.append(r.features_of(r.chosen_id))
        labels.append(1.0 if r.final_delivered else 0.0)
    return Dataset(np.array(rows), np.array(labels), "A") if rows else _empty("A")


def _delivered_hops(logs: Sequence[HopLogRecord]):
    for recs in group_by_message(logs).values():
        if recs[0].final_delivered:
            yield [r for r in recs if r.hop_outcome == "forwarded"]


def extract_dataset_b(logs: Sequence[HopLogRecord]) -> Dataset:
    rows, labels = [], []
    for hops in _delivered_hops(logs):
        for r in hops:
            rows.append(r.features_of(r.chosen_id))
            labels.append(float(r.total_hops - r.hop_index))
    return Dataset(np.array(rows), np.array(labels), "B") if rows else _empty("B")


def extract_dataset_c(logs: Sequence[HopLogRecord]) -> Dataset:
    rows, labels = [], []
    for hops in _delivered_hops(logs):
        remaining = np.cumsum([r.hop_delay_s for r in hops][::-1])[::-1]
        for r, rem in zip(hops, remaining):
            rows.append(r.features_of(r.chosen_id))
            labels.append(round(float(rem), 6))
    return Dataset(np.array(rows), np.array(labels), "C") if rows else _empty("C")


def extract_dataset_d(logs: Sequence[HopLogRecord]) -> Dataset:
    rows, labels = [], []
    for hops in _delivered_hops(logs):
        for r in hops:
            for cid, feats in zip(r.candidate_ids, r.candidate_features):
                rows.append(feats)
                labels.append(1.0 if cid == r.chosen_id else 0.0)
    return Dataset(np.array(rows), np.array(labels), "D") if rows else _empty("D")


def log_digest(logs: Sequence[HopLogRecord]) -> str:
    return hashlib.sha256(logs_to_csv(logs).encode("utf-8")).hexdigest()


@dataclass
class ModelBundle:
    model_a: object = None
    model_b: object = None
    model_c: object = None
    model_d: object = None
    normalizer_d: Optional[Normalizer] = None
    ttl_initial: int = 10
    seed: int = 0
    log_digest: str = ""
    validation: Dict[str, Dict[str, float]] = field(default_factory=dict)
    hyperparameters: Dict[str, dict] = field(
        default_factory=lambda: {r: dict(s.hyperparameters) for r, s in MODEL_SPECS.items()})

    def _model(self, role: str):
        m = getattr(self, f"model_{role.lower()}")
        if m is None:
            raise BundleError(f"Model {role} is not trained")
        return m

    def predict_a(self, X) -> np.ndarray:
        return np.clip(self._model("A").predict_proba(_rows(X)), 0.0, 1.0)

    def predict_b(self, X) -> np.ndarray:
        return np.clip(self._model("B").predict(_rows(X)), 0.0, float(self.ttl_initial))

    def predict_c(self, X) -> np.ndarray:
        return np.maximum(self._model("C").predict(_rows(X)), 0.0)

    def predict_d(self, X) -> np.ndarray:
        model = self._model("D")
        if self.normalizer_d is None:
            raise BundleError("Model D has no fitted normalizer")
        return np.clip(model.predict_proba(self.normalizer_d.transform(_rows(X))), 0.0, 1.0)


def _rows(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[None, :] if X.ndim == 1 else X


def _check_two_class(ds: Dataset, what: str) -> None:
    if len(ds) == 0 or len(np.unique(ds.y)) < 2:
        raise BundleError(f"{what} data has a single class; simulate more scenarios "
                          "so both delivered and failed messages appear")


def train_bundle(logs: Sequence[HopLogRecord], seed: int = 42, split_seed: int = 42,
                 fraction: float = 0.8,
                 specs: Optional[Mapping[str, LearnerSpec]] = None) -> ModelBundle:
    """Train A-D on an 80/20 split of the baseline logs; held-out metrics go in ``validation``.

    ``specs`` overrides entries of ``MODEL_SPECS`` by role.
    """
    specs = {**MODEL_SPECS, **(specs or {})}
    logs = list(logs)
    if not logs:
        raise BundleError("no hop logs")
    ds = {"A": extract_dataset_a(logs), "B": extract_dataset_b(logs),
          "C": extract_dataset_c(logs), "D": extract_dataset_d(logs)}
    _check_two_class(ds["A"], "Model A")
    _check_two_class(ds["D"], "Model D")
    for role in ("B", "C"):
        if len(ds[role]) < 2:
            raise BundleError(f"Model {role} needs delivered messages")
    split = {role: split_train_test(d, fraction, split_seed) for role, d in ds.items()}
    ttl = max(r.ttl_initial for r in logs)

    tr, te = split["A"]
    model_a = train_boosted(tr.X, tr.y, specs["A"], seed, task="classification")
    tr, te_b = split["B"]
    model_b = train_boosted(tr.X, tr.y, specs["B"], seed, task="regression")
    tr, te_c = split["C"]
    model_c = train_ridge(tr.X, tr.y, specs["C"].hyperparameters["alpha"])
    model_c.seed = seed
    tr, te_d = split["D"]
    norm = fit_normalizer(tr.X)
    model_d = train_forest(norm.transform(tr.X), tr.y, specs["D"], seed)

    bundle = ModelBundle(model_a, model_b, model_c, model_d, norm, ttl, seed, log_digest(logs),
                         hyperparameters={r: dict(sp.hyperparameters) for r, sp in specs.items()})
    bundle.validation = {
        "A": evaluate_classifier(_ProbaView(bundle.predict_a), te),
        "B": evaluate_regressor(_PredView(bundle.predict_b), te_b),
        "C": evaluate_regressor(_PredView(bundle.predict_c), te_c),
        "D": evaluate_classifier(_ProbaView(bundle.predict_d), te_d),
    }
    return bundle


class _ProbaView:
    def __init__(self, fn):
        self.predict_proba = fn


class _PredView:
    def __init__(self, fn):
        self.predict = fn


def save_bundle(bundle: ModelBundle, out_dir: str | os.PathLike) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    models = {"A": bundle.model_a, "B": bundle.model_b, "C": bundle.model_c, "D": bundle.model_d}
    for role, name in BUNDLE_FILES.items():
        atomic_write_text(out / name, model_to_json(models[role], bundle.hyperparameters[role]))
    atomic_write_text(out / NORMALIZER_FILE, json.dumps(
        {"mins": list(bundle.normalizer_d.mins), "maxs": list(bundle.normalizer_d.maxs)},
        sort_keys=True) + "\n")
    manifest = {
        "seed": bundle.seed,
        "log_digest": bundle.log_digest,
        "ttl_initial": bundle.ttl_initial,
        "validation": bundle.validation,
        "files": dict(sorted(BUNDLE_FILES.items())) | {"normalizer": NORMALIZER_FILE},
    }
    atomic_write_text(out / MANIFEST_FILE, json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return out


def load_bundle(bundle_dir: str | os.PathLike) -> ModelBundle:
    d = Path(bundle_dir)
    manifest_path = d / MANIFEST_FILE
    if not manifest_path.exists():
        raise BundleError(f"{d}: no bundle manifest")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    docs = {role: (d / name).read_text(encoding="utf-8") for role, name in BUNDLE_FILES.items()}
    models = {role: model_from_json(text) for role, text in docs.items()}
    hyper = {role: json.loads(text)["hyperparameters"] for role, text in docs.items()}
    norm = json.loads((d / NORMALIZER_FILE).read_text(encoding="utf-8"))
    return ModelBundle(models["A"], models["B"], models["C"], models["D"],
                       Normalizer(tuple(norm["mins"]), tuple(norm["maxs"])),
                       int(manifest["ttl_initial"]), int(manifest["seed"]),
                       manifest["log_digest"], manifest.get("validation", {}), hyper)


def predict_a(bundle: ModelBundle, features) -> np.ndarray:
    return bundle.predict_a(features)


def predict_b(bundle: ModelBundle, features) -> np.ndarray:
    return bundle.predict_b(features)


def predict_c(bundle: ModelBundle, features) -> np.ndarray:
    return bundle.predict_c(features)


def predict_d(bundle: ModelBundle, features) -> np.ndarray:
    return bundle.predict_d(features)
