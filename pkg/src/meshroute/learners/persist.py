"""Self-describing JSON files for trained models.

Floats are written with ``repr`` precision (Python's json default), so a
load/save cycle reproduces parameters exactly and identical models give
identical bytes.
"""

from __future__ import annotations

import json
import os
from typing import Any, Dict

from .models import BoostedModel, ForestModel, RidgeModel, TreeModel

_CLASSES = {
    "ridge": RidgeModel,
    "tree": TreeModel,
    "forest": ForestModel,
    "boosted": BoostedModel,
}


def model_to_json(model, hyperparameters: Dict[str, Any]) -> str:
    doc = {
        "algorithm": model.algorithm,
        "seed": int(model.seed),
        "hyperparameters": hyperparameters,
        "parameters": model.to_dict(),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def model_from_json(text: str):
    doc = json.loads(text)
    cls = _CLASSES[doc["algorithm"]]
    return cls.from_dict(doc["parameters"], doc["hyperparameters"], seed=doc.get("seed", 0))


def save_model(model, hyperparameters: Dict[str, Any], path: str | os.PathLike) -> None:
    from ..scenario import atomic_write_text

    atomic_write_text(path, model_to_json(model, hyperparameters))


def load_model(path: str | os.PathLike):
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())
