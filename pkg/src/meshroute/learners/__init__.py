"""From-scratch learners: ridge, CART, random forest, gradient boosting, and metrics."""

from .evaluation import (Dataset, MetricError, classification_metrics, evaluate_classifier,
                         evaluate_regressor, regression_metrics, roc_auc, split_train_test)
from .models import (BoostedModel, ForestModel, LearnerError, LearnerSpec, RidgeModel,
                     TreeModel, train_boosted, train_forest, train_ridge, train_tree)
from .persist import load_model, model_from_json, model_to_json, save_model
from .tree import SplitParams, Tree, TreeEnsemble, build_tree

__all__ = [
    "BoostedModel", "Dataset", "ForestModel", "LearnerError", "LearnerSpec", "MetricError",
    "RidgeModel", "SplitParams", "Tree", "TreeEnsemble", "TreeModel", "build_tree",
    "classification_metrics", "evaluate_classifier", "evaluate_regressor", "load_model",
    "model_from_json", "model_to_json", "regression_metrics", "roc_auc", "save_model",
    "split_train_test", "train_boosted", "train_forest", "train_ridge", "train_tree",
]
