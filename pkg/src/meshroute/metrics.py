"""Delivery metrics from hop logs, per-scenario PDR tables, and paired significance tests."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm, rankdata

from .records import HopLogRecord, group_by_message

EXACT_MAX_N = 20
SUMMARY_COLUMNS = ["mode", "pdr_percent", "avg_ttl_left", "avg_delay_s", "avg_hops",
                   "messages_total", "messages_delivered"]


class MetricsError(ValueError):
    pass


class ScenarioMismatchError(MetricsError):
    pass


@dataclass(frozen=True)
class MetricsSummary:
    mode: str
    pdr_percent: float
    avg_ttl_left: Optional[float]
    avg_delay_s: Optional[float]
    avg_hops: Optional[float]
    messages_total: int
    messages_delivered: int

    def row(self) -> List[str]:
        def fmt(v):
            return "" if v is None else f"{v:.6f}"
        return [self.mode, fmt(self.pdr_percent), fmt(self.avg_ttl_left), fmt(self.avg_delay_s),
                fmt(self.avg_hops), str(self.messages_total), str(self.messages_delivered)]


def _message_outcomes(logs: Sequence[HopLogRecord]):
    """(scenario_id, delivered, ttl_left, delay, hops) per message."""
    out = []
    groups = group_by_message(logs)
    # sorted so float sums do not depend on row order
    for sid, mid in sorted(groups):
        r = groups[(sid, mid)][-1]
        out.append((sid, r.final_delivered, r.ttl_initial - r.total_hops, r.total_delay_s,
                    r.total_hops))
    return out


def _summarize(mode: str, outcomes) -> MetricsSummary:
    if not outcomes:
        raise MetricsError("no messages to aggregate")
    done = [o for o in outcomes if o[1]]
    def avg(i):
        return float(np.mean([o[i] for o in done])) if done else None
    return MetricsSummary(mode, 100.0 * len(done) / len(outcomes), avg(2), avg(3), avg(4),
                          len(outcomes), len(done))


def aggregate(logs: Sequence[HopLogRecord], mode: Optional[str] = None) -> MetricsSummary:
    """Pooled summary; averages cover delivered messages only (None if there are none)."""
    logs = list(logs)
    if mode is None:
        modes = sorted({r.mode for r in logs})
        mode = modes[0] if len(modes) == 1 else "+".join(modes)
    return _summarize(mode, _message_outcomes(logs))


def aggregate_by_scenario(logs: Sequence[HopLogRecord],
                          mode: Optional[str] = None) -> Dict[int, MetricsSummary]:
    per: Dict[int, list] = {}
    for o in _message_outcomes(list(logs)):
        per.setdefault(o[0], []).append(o)
    if not per:
        raise MetricsError("no messages to aggregate")
    label = mode or "+".join(sorted({r.mode for r in logs}))
    return {sid: _summarize(label, per[sid]) for sid in sorted(per)}


def per_scenario_table(logs_by_mode: Mapping[str, Sequence[HopLogRecord]]
                       ) -> Tuple[List[int], List[str], np.ndarray]:
    """PDR matrix (scenarios x modes). Every mode must cover the same scenario ids."""
    modes = list(logs_by_mode)
    if not modes:
        raise MetricsError("no modes given")
    tables = {m: aggregate_by_scenario(logs_by_mode[m], m) for m in modes}
    ids = sorted(tables[modes[0]])
    for m in modes[1:]:
        if sorted(tables[m]) != ids:
            raise ScenarioMismatchError(
                f"mode {m!r} covers scenarios {sorted(tables[m])}, expected {ids}")
    matrix = np.array([[tables[m][sid].pdr_percent for m in modes] for sid in ids])
    return ids, modes, matrix


def paired_pdr_diffs(logs_a: Sequence[HopLogRecord], logs_b: Sequence[HopLogRecord]) -> np.ndarray:
    """Per-scenario PDR(a) - PDR(b), in scenario id order."""
    ids, _, m = per_scenario_table({"a": logs_a, "b": logs_b})
    return m[:, 0] - m[:, 1]


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float     # W+, sum of ranks of positive differences
    p_value: float
    n: int               # pairs left after dropping zeros
    method: str          # "exact" or "normal"


def _exact_upper_counts(doubled_ranks: Sequence[int]) -> np.ndarray:
    """counts[s] = number of sign patterns whose doubled W+ equals s."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(diffs, exact_max_n: int = EXACT_MAX_N) -> WilcoxonResult:
    """Two-sided signed-rank test on paired differences.

    Zeros are dropped, ties get midranks. For n <= ``exact_max_n`` the null
    distribution of W+ is counted exactly over all 2^n sign assignments;
    above that a normal approximation with tie and continuity corrections
    is used.
    """
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0]
    n = len(d)
    if n == 0:
        raise MetricsError("all differences are zero; the test is degenerate")
    if n < 5:
        raise MetricsError(f"need at least 5 non-zero differences, got {n}")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= exact_max_n:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _exact_upper_counts(doubled)
        w2 = int(round(2 * w_plus))
        lower = sum(counts[: w2 + 1])
        upper = sum(counts[w2:])
        p = min(1.0, 2 * float(min(lower, upper)) / float(2 ** n))
        return WilcoxonResult(w_plus, p, n, "exact")
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return WilcoxonResult(w_plus, min(1.0, 2 * float(norm.sf(z))), n, "normal")


def bootstrap_ci(diffs, level: float = 0.95, resamples: int = 10_000,
                 seed: int = 0) -> Tuple[float, float]:
    """Percentile bootstrap interval for the mean difference."""
    d = np.asarray(diffs, dtype=float)
    if len(d) < 2:
        raise MetricsError("bootstrap needs at least two differences")
    if not 0 < level < 1:
        raise MetricsError("level must be in (0, 1)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(d), size=(resamples, len(d)))
    means = d[idx].mean(axis=1)
    alpha = (1 - level) / 2
    lo, hi = np.quantile(means, [alpha, 1 - alpha])
    # clipping keeps constant inputs exact despite float summation
    return float(np.clip(lo, d.min(), d.max())), float(np.clip(hi, d.min(), d.max()))


# ---- report files -------------------------------------------------------------

def summary_csv(summaries: Sequence[MetricsSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summaries:
        w.writerow(s.row())
    return buf.getvalue()


def matrix_csv(ids: Sequence[int], modes: Sequence[str], matrix: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario_id", *modes])
    for sid, row in zip(ids, matrix):
        w.writerow([sid, *(f"{v:.6f}" for v in row)])
    return buf.getvalue()


def stats_csv(label: str, diffs: Sequence[float], test: WilcoxonResult,
              ci: Tuple[float, float], level: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["comparison", "n_scenarios", "mean_diff_pp", "wilcoxon_w_plus", "p_value",
                "method", "ci_level", "ci_low_pp", "ci_high_pp"])
    w.writerow([label, len(diffs), f"{float(np.mean(diffs)):.6f}", f"{test.statistic:.1f}",
                f"{test.p_value:.12g}", test.method, f"{level:g}", f"{ci[0]:.6f}", f"{ci[1]:.6f}"])
    return buf.getvalue()


def render_text(summaries: Sequence[MetricsSummary]) -> str:
    def fmt(v, spec):
        return "-" if v is None else format(v, spec)
    lines = [f"{'mode':<10}{'PDR %':>8}{'TTL left':>10}{'delay s':>10}{'hops':>7}"]
    for s in summaries:
        lines.append(f"{s.mode:<10}{s.pdr_percent:>8.2f}{fmt(s.avg_ttl_left, '>10.2f')}"
                     f"{fmt(s.avg_delay_s, '>10.2f')}{fmt(s.avg_hops, '>7.2f')}")
    return "\n".join(lines) + "\n"
