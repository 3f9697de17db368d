import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import rankdata

from meshroute.metrics import (MetricsError, ScenarioMismatchError, aggregate,
                               aggregate_by_scenario, bootstrap_ci, paired_pdr_diffs,
                               per_scenario_table, render_text, summary_csv,
                               wilcoxon_signed_rank)
from meshroute.records import HopLogRecord


def msg(sid, mid, delivered, hops, delay, ttl=10, mode="baseline"):
    """Minimal log for one message: ``hops`` forwarded records, or one drop if undelivered."""
    n = max(hops, 1)
    return [HopLogRecord(sid, mid, mode, i, 1, 2, ttl, ttl - i - 1, 0.0, 0.0, delay / n, [2], 2,
                         hop_outcome="forwarded" if delivered else "dropped_ttl",
                         final_delivered=delivered, total_delay_s=delay, total_hops=hops)
            for i in range(n)]


def test_aggregate_example():
    logs = msg(1, 1, True, 2, 30.0) + msg(1, 2, True, 4, 50.0) + msg(1, 3, False, 3, 99.0)
    s = aggregate(logs)
    assert s.pdr_percent == pytest.approx(200 / 3)
    assert s.avg_hops == 3.0 and s.avg_delay_s == 40.0 and s.avg_ttl_left == 7.0
    assert (s.messages_total, s.messages_delivered) == (3, 2)
    assert s.mode == "baseline"


def test_nothing_delivered_gives_empty_averages():
    s = aggregate(msg(1, 1, False, 1, 5.0))
    assert s.pdr_percent == 0.0 and s.avg_hops is None
    assert ",," in summary_csv([s]) and "-" in render_text([s])
    with pytest.raises(MetricsError):
        aggregate([])


def test_pooled_pdr_is_message_weighted_mean():
    rng = np.random.default_rng(0)
    logs, mid = [], 0
    for sid in range(1, 6):
        for _ in range(int(rng.integers(3, 12))):
            mid += 1
            logs += msg(sid, mid, bool(rng.random() < 0.7), int(rng.integers(1, 5)), 10.0)
    per = aggregate_by_scenario(logs)
    pooled = aggregate(logs)
    weights = np.array([p.messages_total for p in per.values()])
    pdrs = np.array([p.pdr_percent for p in per.values()])
    assert pooled.pdr_percent == pytest.approx((weights * pdrs).sum() / weights.sum())


def test_table_and_mismatch():
    a = msg(1, 1, True, 1, 1.0) + msg(2, 2, False, 1, 1.0)
    b = msg(1, 1, True, 1, 1.0, mode="abcd") + msg(2, 2, True, 1, 1.0, mode="abcd")
    ids, modes, m = per_scenario_table({"baseline": a, "abcd": b})
    assert ids == [1, 2] and modes == ["baseline", "abcd"]
    assert m.tolist() == [[100.0, 100.0], [0.0, 100.0]]
    assert paired_pdr_diffs(b, a).tolist() == [0.0, 100.0]
    with pytest.raises(ScenarioMismatchError):
        per_scenario_table({"baseline": a, "abcd": b[:1]})


def enumerate_p(d):
    """Two-sided p by listing all 2^n sign flips of the midranks."""
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    r = rankdata(np.abs(d))
    w = r[d > 0].sum()
    stats = [sum(ri for ri, s in zip(r, signs) if s) for signs in itertools.product((0, 1), repeat=len(r))]
    stats = np.array(stats)
    lo = np.mean(stats <= w + 1e-9)
    hi = np.mean(stats >= w - 1e-9)
    return w, min(1.0, 2 * min(lo, hi))


def test_wilcoxon_all_positive_ten():
    res = wilcoxon_signed_rank(np.arange(1, 11, dtype=float))
    assert res.statistic == 55 and res.n == 10 and res.method == "exact"
    assert res.p_value == 2 / 1024


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(5, 12))
def test_wilcoxon_matches_enumeration(seed, n):
    rng = np.random.default_rng(seed)
    d = rng.integers(-4, 5, n).astype(float)   # small integers force ties and zeros
    if np.count_nonzero(d) < 5:
        with pytest.raises(MetricsError):
            wilcoxon_signed_rank(d)
        return
    w, p = enumerate_p(d)
    res = wilcoxon_signed_rank(d)
    assert res.statistic == w
    assert res.p_value == pytest.approx(p, abs=1e-12)


def test_wilcoxon_symmetric_sample_has_p_one():
    res = wilcoxon_signed_rank([-3, -2, -1, 1, 2, 3])
    assert res.p_value == 1.0


def test_wilcoxon_degenerate_inputs():
    with pytest.raises(MetricsError):
        wilcoxon_signed_rank([0.0] * 10)
    with pytest.raises(MetricsError):
        wilcoxon_signed_rank([1.0, 2.0, 0.0, 3.0])


def test_wilcoxon_normal_branch_is_close_to_exact():
    rng = np.random.default_rng(3)
    d = rng.normal(0.3, 1.0, 20)
    exact = wilcoxon_signed_rank(d).p_value
    approx = wilcoxon_signed_rank(d, exact_max_n=10)
    assert approx.method == "normal"
    assert approx.p_value == pytest.approx(exact, abs=0.01)


def test_bootstrap_properties():
    d = np.array([1.0, 4.0, 2.0, 8.0, 5.0, 3.0])
    lo, hi = bootstrap_ci(d, seed=1)
    assert d.min() <= lo <= d.mean() <= hi <= d.max()
    assert bootstrap_ci(d, seed=1) == (lo, hi)
    narrow = bootstrap_ci(d, level=0.5, seed=1)
    assert lo <= narrow[0] <= narrow[1] <= hi
    assert bootstrap_ci([2.5] * 8) == (2.5, 2.5)
    with pytest.raises(MetricsError):
        bootstrap_ci([1.0])


def test_bootstrap_interval_contains_mean_sweep():
    rng = np.random.default_rng(9)
    for i in range(1000):
        d = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 10), int(rng.integers(2, 15)))
        lo, hi = bootstrap_ci(d, resamples=400, seed=i)
        assert lo <= d.mean() <= hi


def test_matrix_cells_equal_subset_aggregates(small_baseline_logs):
    ids, _, m = per_scenario_table({"baseline": small_baseline_logs})
    for sid, row in zip(ids, m):
        subset = [r for r in small_baseline_logs if r.scenario_id == sid]
        assert row[0] == aggregate(subset).pdr_percent
        assert 0 <= row[0] <= 100


def test_aggregate_ignores_row_order(small_baseline_logs):
    shuffled = list(small_baseline_logs)
    np.random.default_rng(0).shuffle(shuffled)
    assert aggregate(shuffled) == aggregate(small_baseline_logs)
