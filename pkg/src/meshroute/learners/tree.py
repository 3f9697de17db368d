"""CART trees stored as flat arrays, plus stacked-ensemble prediction.

Three split criteria share one greedy builder:

* ``"mse"``   variance reduction, leaf = mean label
* ``"gini"``  binary Gini impurity (optionally sample-weighted), leaf = positive fraction
* ``"newton"`` second-order gain on gradient/hessian pairs, leaf = -G/(H+lambda)

Candidate thresholds are midpoints between consecutive distinct values.
Features are scanned in ascending index order and a split replaces the
incumbent only on strictly larger gain, so ties go to the lower feature
index and then the lower threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from numba import njit

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray    # int, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X) -> np.ndarray:
        return TreeEnsemble([self]).predict_each(np.asarray(X, dtype=float))[0]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.asarray(d["feature"], dtype=np.int64),
                   np.asarray(d["threshold"], dtype=float),
                   np.asarray(d["left"], dtype=np.int64),
                   np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=float),
                   int(d["depth"]))


class TreeEnsemble:
    """All trees concatenated into one node table so a batch descends every tree at once."""

    def __init__(self, trees: Sequence[Tree]):
        offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]]).astype(np.int64)
        self.roots = offsets
        self.feature = np.concatenate([t.feature for t in trees])
        self.threshold = np.concatenate([t.threshold for t in trees])
        self.value = np.concatenate([t.value for t in trees])
        left = np.concatenate([t.left + o for t, o in zip(trees, offsets)])
        right = np.concatenate([t.right + o for t, o in zip(trees, offsets)])
        is_leaf = self.feature == LEAF
        idx = np.arange(len(self.feature))
        # Leaves point at themselves so extra descent steps are no-ops.
        self.left = np.where(is_leaf, idx, left)
        self.right = np.where(is_leaf, idx, right)
        self.safe_feature = np.where(is_leaf, 0, self.feature)
        self.max_depth = max((t.depth for t in trees), default=0)

    def predict_each(self, X: np.ndarray) -> np.ndarray:
        """Leaf values, shape (n_trees, n_rows)."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        n = X.shape[0]
        node = np.repeat(self.roots[:, None], n, axis=1)
        rows = np.broadcast_to(np.arange(n), node.shape)
        for _ in range(self.max_depth):
            go_left = X[rows, self.safe_feature[node]] <= self.threshold[node]
            node = np.where(go_left, self.left[node], self.right[node])
        return self.value[node]


@dataclass
class SplitParams:
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    min_child_weight: float = 0.0   # newton: minimum hessian sum per child
    gamma: float = 0.0              # newton: minimum split gain
    reg_lambda: float = 1.0         # newton: L2 on leaf weights
    max_features: Optional[int] = None  # features tried per split; None = all


def _leaf_value(criterion: str, y, w, g, h, reg_lambda: float) -> float:
    if criterion == "mse":
        return float(np.mean(y))
    if criterion == "gini":
        return float(np.dot(w, y) / np.sum(w))
    return float(-np.sum(g) / (np.sum(h) + reg_lambda))


_CRITERIA = {"mse": 0, "gini": 1, "newton": 2}


@njit(cache=True)
def _scan_node(X, idx, feats, y, w, g, h, crit, msl, mcw, gamma, lam):
    """Best (gain, feature, threshold) over ``feats`` for the rows ``idx``.

    ``feature`` is -1 when no admissible split exists.
    """
    n = idx.shape[0]
    best_gain = -np.inf
    best_f = -1
    best_thr = 0.0
    xs = np.empty(n)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        col = np.empty(n)
        for i in range(n):
            col[i] = X[idx[i], f]
        order = np.argsort(col, kind="mergesort")
        for i in range(n):
            xs[i] = col[order[i]]
        if xs[0] == xs[n - 1]:
            continue
        ty = 0.0
        tyy = 0.0
        tw = 0.0
        twy = 0.0
        tg = 0.0
        th = 0.0
        for i in range(n):
            r = idx[order[i]]
            ty += y[r]
            tyy += y[r] * y[r]
            tw += w[r]
            twy += w[r] * y[r]
            tg += g[r]
            th += h[r]
        cy = 0.0
        cyy = 0.0
        cw = 0.0
        cwy = 0.0
        cg = 0.0
        ch = 0.0
        f_gain = -np.inf
        f_pos = -1
        for i in range(n - 1):
            r = idx[order[i]]
            cy += y[r]
            cyy += y[r] * y[r]
            cw += w[r]
            cwy += w[r] * y[r]
            cg += g[r]
            ch += h[r]
            if not xs[i] < xs[i + 1]:
                continue
            if i + 1 < msl or n - i - 1 < msl:
                continue
            if crit == 0:
                nl = i + 1.0
                nr = n - nl
                sse_l = cyy - cy * cy / nl
                sse_r = (tyy - cyy) - (ty - cy) ** 2 / nr
                gain = (tyy - ty * ty / n) - sse_l - sse_r
            elif crit == 1:
                wr = tw - cw
                pl = cwy / cw
                pr = (twy - cwy) / wr if wr > 0 else 0.0
                p = twy / tw
                gain = tw * 2 * p * (1 - p) - cw * 2 * pl * (1 - pl) - wr * 2 * pr * (1 - pr)
            else:
                hr = th - ch
                if ch < mcw or hr < mcw:
                    continue
                gr = tg - cg
                gain = 0.5 * (cg * cg / (ch + lam) + gr * gr / (hr + lam)
                              - tg * tg / (th + lam)) - gamma
            if gain > f_gain:
                f_gain = gain
                f_pos = i
        if f_pos >= 0 and f_gain > best_gain:
            lo = xs[f_pos]
            hi = xs[f_pos + 1]
            thr = lo + (hi - lo) / 2.0
            if not (lo <= thr and thr < hi):
                thr = lo
            best_gain = f_gain
            best_f = f
            best_thr = thr
    return best_gain, best_f, best_thr


def build_tree(X: np.ndarray, criterion: str, params: SplitParams, y=None, sample_weight=None,
               grad=None, hess=None, rng: Optional[np.random.Generator] = None,
               feature_mask: Optional[Sequence[int]] = None) -> Tree:
    """Grow one tree greedily (depth-first, left child first)."""
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    y = np.zeros(n) if y is None else np.asarray(y, dtype=float)
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    g = np.zeros(n) if grad is None else np.asarray(grad, dtype=float)
    h = np.zeros(n) if hess is None else np.asarray(hess, dtype=float)
    allowed = np.arange(m) if feature_mask is None else np.asarray(sorted(feature_mask))
    k = len(allowed) if params.max_features is None else min(params.max_features, len(allowed))
    crit = _CRITERIA[criterion]
    msl = max(params.min_samples_leaf, 1)

    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[float] = []
    max_seen = 0

    def new_node() -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(0.0)
        return len(feature) - 1

    stack = [(new_node(), np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        max_seen = max(max_seen, depth)
        value[node] = _leaf_value(criterion, y[idx], w[idx], g[idx], h[idx], params.reg_lambda)
        if len(idx) < max(params.min_samples_split, 2):
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if criterion != "newton" and np.all(y[idx] == y[idx[0]]):
            continue
        feats = allowed
        if k < len(allowed):
            feats = np.sort(rng.choice(allowed, size=k, replace=False))
        gain, f, thr = _scan_node(X, idx, np.asarray(feats, dtype=np.int64), y, w, g, h, crit,
                                  msl, params.min_child_weight, params.gamma, params.reg_lambda)
        if f < 0:
            continue
        # impurity criteria accept zero-gain splits on impure nodes (XOR needs one)
        if gain <= 0 if criterion == "newton" else gain < -1e-12:
            continue
        mask = X[idx, f] <= thr
        feature[node] = int(f)
        threshold[node] = float(thr)
        l_node = new_node()
        r_node = new_node()
        left[node] = l_node
        right[node] = r_node
        # push right first so the left subtree is numbered first
        stack.append((r_node, idx[~mask], depth + 1))
        stack.append((l_node, idx[mask], depth + 1))

    return Tree(np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=float),
                np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
                np.asarray(value, dtype=float), max_seen)
