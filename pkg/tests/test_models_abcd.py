import filecmp

import numpy as np
import pytest

from conftest import quick_specs
from meshroute.models_abcd import (BUNDLE_FILES, BundleError, ModelBundle, extract_dataset_a,
                                   extract_dataset_b, extract_dataset_c, extract_dataset_d,
                                   load_bundle, save_bundle, train_bundle)
from meshroute.records import group_by_message


def test_dataset_a_has_one_row_per_forwarded_hop(small_baseline_logs):
    ds = extract_dataset_a(small_baseline_logs)
    fwd = [r for r in small_baseline_logs if r.hop_outcome == "forwarded"]
    assert len(ds) == len(fwd)
    assert ds.y.tolist() == [float(r.final_delivered) for r in fwd]


def test_dataset_d_one_positive_per_delivered_hop(small_baseline_logs):
    ds = extract_dataset_d(small_baseline_logs)
    delivered = [recs for recs in group_by_message(small_baseline_logs).values()
                 if recs[0].final_delivered]
    hops = [r for recs in delivered for r in recs]
    assert ds.y.sum() == len(hops)
    assert len(ds) == sum(len(r.candidate_ids) for r in hops)
    mean_cands = len(ds) / len(hops)
    assert ds.y.mean() <= 1 / mean_cands + 1e-12


def test_remaining_labels_count_down(small_baseline_logs):
    b = extract_dataset_b(small_baseline_logs)
    c = extract_dataset_c(small_baseline_logs)
    assert len(b) == len(c)
    assert b.y.min() >= 1
    # the first hop of each delivered message carries the whole path
    delivered = [recs for recs in group_by_message(small_baseline_logs).values()
                 if recs[0].final_delivered]
    first = [recs[0] for recs in delivered]
    starts = np.flatnonzero(np.r_[True, np.diff(b.y) >= 0])
    assert b.y[starts].tolist() == [float(r.total_hops) for r in first]
    assert c.y[starts] == pytest.approx([r.total_delay_s for r in first], abs=1e-5)


def test_bundle_predictions_are_clamped(small_bundle):
    rng = np.random.default_rng(0)
    X = rng.uniform(-50, 500, size=(200, 8))
    a, b, c, d = (small_bundle.predict_a(X), small_bundle.predict_b(X),
                  small_bundle.predict_c(X), small_bundle.predict_d(X))
    assert ((a >= 0) & (a <= 1)).all() and ((d >= 0) & (d <= 1)).all()
    assert ((b >= 0) & (b <= small_bundle.ttl_initial)).all()
    assert (c >= 0).all()


def test_c_is_linear_before_the_floor(small_bundle):
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 1, size=(20, 8))
    m = small_bundle.model_c
    assert small_bundle.predict_c(X) == pytest.approx(np.maximum(X @ m.coef + m.intercept, 0))


def test_prediction_does_not_mutate_input(small_bundle):
    X = np.arange(16, dtype=float).reshape(2, 8)
    before = X.copy()
    small_bundle.predict_d(X)
    small_bundle.predict_a(X)
    assert np.array_equal(X, before)
    assert small_bundle.predict_d(X[0]).shape == (1,)


def test_validation_metrics_present(small_bundle):
    assert set(small_bundle.validation) == {"A", "B", "C", "D"}
    assert {"accuracy", "f1", "roc_auc"} <= set(small_bundle.validation["A"])
    assert {"rmse", "mae", "r2"} <= set(small_bundle.validation["C"])


def test_save_load_round_trip(tmp_path, small_bundle):
    save_bundle(small_bundle, tmp_path / "a")
    back = load_bundle(tmp_path / "a")
    save_bundle(back, tmp_path / "b")
    for name in list(BUNDLE_FILES.values()) + ["normalizer_d.json", "manifest.json"]:
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False), name
    X = np.random.default_rng(2).uniform(0, 10, size=(30, 8))
    for fn in ("predict_a", "predict_b", "predict_c", "predict_d"):
        assert np.array_equal(getattr(back, fn)(X), getattr(small_bundle, fn)(X))


def test_training_is_deterministic(tmp_path, small_baseline_logs, small_bundle):
    again = train_bundle(small_baseline_logs, seed=3, specs=quick_specs())
    save_bundle(small_bundle, tmp_path / "a")
    save_bundle(again, tmp_path / "b")
    for name in BUNDLE_FILES.values():
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)


def test_untrained_bundle_refuses_to_predict():
    with pytest.raises(BundleError, match="Model A is not trained"):
        ModelBundle().predict_a(np.zeros(8))
    with pytest.raises(BundleError):
        ModelBundle().predict_d(np.zeros(8))


def test_missing_manifest(tmp_path):
    with pytest.raises(BundleError):
        load_bundle(tmp_path)


def test_training_needs_both_outcomes(small_baseline_logs):
    delivered_only = [r for r in small_baseline_logs if r.final_delivered]
    with pytest.raises(BundleError):
        train_bundle(delivered_only, specs=quick_specs())
    with pytest.raises(BundleError):
        train_bundle([])
