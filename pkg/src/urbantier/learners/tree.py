"""Histogram-binned decision trees with level-wise and leaf-wise growth."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .._kernels import build_histograms

MAX_BINS = 256
GAIN_EPS = 1e-12


class BinMapper:
    """Maps raw feature values to at most 256 ordered bins per feature.

    Bin boundaries are actual data values (order statistics), so bin
    assignment is invariant under strictly monotone feature rescaling.
    With <= 256 distinct values every value gets its own bin and histogram
    splits coincide with exhaustive splits.
    """

    def __init__(self, max_bins: int = MAX_BINS):
        self.max_bins = max_bins
        self.thresholds: list = []

    def fit(self, X: np.ndarray) -> "BinMapper":
        self.thresholds = []
        for j in range(X.shape[1]):
            u = np.unique(X[:, j])
            if len(u) <= self.max_bins:
                thr = u[:-1]
            else:
                qs = np.linspace(0.0, 1.0, self.max_bins + 1)[1:-1]
                thr = np.unique(np.quantile(X[:, j], qs, method="lower"))
            self.thresholds.append(np.ascontiguousarray(thr, dtype=np.float64))
        return self

    @property
    def n_bins(self) -> int:
        return max((len(t) + 1 for t in self.thresholds), default=1)

    def transform(self, X: np.ndarray) -> np.ndarray:
        binned = np.empty(X.shape, dtype=np.uint16)
        for j, thr in enumerate(self.thresholds):
            binned[:, j] = np.searchsorted(thr, X[:, j], side="left")
        return np.ascontiguousarray(binned)


@dataclass
class TreeNode:
    feature: int = -1          # -1 marks a leaf
    threshold: float = 0.0     # raw-value threshold: x <= threshold goes left
    left: int = -1
    right: int = -1
    value: float = 0.0
    gain: float = 0.0

    def to_dict(self) -> dict:
        if self.feature < 0:
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "gain": self.gain,
        }


@dataclass
class DecisionTree:
    nodes: list = field(default_factory=list)

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.float64)
        idx = np.arange(X.shape[0])
        stack = [(0, idx)]
        while stack:
            node_id, rows = stack.pop()
            node = self.nodes[node_id]
            if node.feature < 0:
                out[rows] = node.value
                continue
            go_left = X[rows, node.feature] <= node.threshold
            stack.append((node.left, rows[go_left]))
            stack.append((node.right, rows[~go_left]))
        return out

    def feature_gains(self, n_features: int) -> np.ndarray:
        gains = np.zeros(n_features)
        for node in self.nodes:
            if node.feature >= 0:
                gains[node.feature] += node.gain
        return gains

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes if n.feature < 0)

    @property
    def depth(self) -> int:
        depths = {0: 0}
        out = 0
        for i, node in enumerate(self.nodes):
            d = depths[i]
            out = max(out, d)
            if node.feature >= 0:
                depths[node.left] = d + 1
                depths[node.right] = d + 1
        return out

    def to_dict(self) -> dict:
        return {"nodes": [n.to_dict() for n in self.nodes]}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        nodes = []
        for nd in d["nodes"]:
            if "feature" in nd:
                nodes.append(TreeNode(feature=nd["feature"], threshold=nd["threshold"],
                                      left=nd["left"], right=nd["right"], gain=nd["gain"]))
            else:
                nodes.append(TreeNode(value=nd["value"]))
        return cls(nodes)


def _best_split(hist_g, hist_h, hist_n, feature_ok, cut_mask, total_g, total_h,
                n_rows, min_child_samples, lam):
    """Scan histograms for the highest-gain split.

    Ties resolve to the lowest feature index, then the lowest threshold:
    the flat argmax over the (feature, bin) gain matrix returns the first
    maximum in row-major order.
    """
    parent_score = total_g * total_g / (total_h + lam)
    gl = np.cumsum(hist_g, axis=1)
    hl = np.cumsum(hist_h, axis=1)
    nl = np.cumsum(hist_n, axis=1)
    gr = total_g - gl
    hr = total_h - hl
    nr = n_rows - nl
    with np.errstate(invalid="ignore"):
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score)
    valid = cut_mask & feature_ok[:, None] \
        & (nl >= min_child_samples) & (nr >= min_child_samples)
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    f, b = divmod(flat, gain.shape[1])
    if gain[f, b] > GAIN_EPS:
        return f, b, float(gain[f, b])
    return None


class _Candidate:
    __slots__ = ("node_id", "rows", "depth", "split", "g", "h")

    def __init__(self, node_id, rows, depth, g, h):
        self.node_id = node_id
        self.rows = rows
        self.depth = depth
        self.split = None
        self.g = g
        self.h = h


def grow_tree(binned, thresholds, grad, hess, rows, *, growth="level_wise",
              max_depth=6, num_leaves=31, min_child_samples=1, lam=1.0,
              feature_fraction=1.0, rng=None, per_split_features=False,
              leaf_value="newton", y=None) -> DecisionTree:
    """Greedy best-gain tree on pre-binned features.

    ``leaf_value`` is either ``newton`` (-G/(H+lam)) or ``mean`` (class
    fraction of ``y``), the latter used by random forests.  ``rng`` is only
    consulted when feature_fraction < 1.
    """
    n_features = binned.shape[1]
    n_bins = max((len(t) + 1 for t in thresholds), default=1)
    n_cuts = np.array([len(t) for t in thresholds], dtype=np.int64)
    cut_mask = np.arange(n_bins)[None, :] < n_cuts[:, None]

    def pick_features():
        ok = np.ones(n_features, dtype=bool)
        if feature_fraction < 1.0:
            k = max(1, int(round(feature_fraction * n_features)))
            ok[:] = False
            ok[rng.choice(n_features, size=k, replace=False)] = True
        return ok

    tree_features = np.ones(n_features, dtype=bool) if per_split_features else pick_features()

    def make_candidate(node_id, node_rows, depth):
        cand = _Candidate(node_id, node_rows, depth,
                          float(np.sum(grad[node_rows])), float(np.sum(hess[node_rows])))
        if leaf_value == "mean":
            tree.nodes[node_id].value = float(np.mean(y[node_rows]))
        else:
            tree.nodes[node_id].value = -cand.g / (cand.h + lam)
        return cand

    def find_split(cand):
        if cand.depth >= max_depth or len(cand.rows) < 2 * min_child_samples:
            return None
        feats = pick_features() if per_split_features else tree_features
        hg, hh, hn = build_histograms(binned, grad, hess,
                                      np.ascontiguousarray(cand.rows, dtype=np.int64),
                                      n_bins)
        return _best_split(hg, hh, hn, feats, cut_mask, cand.g, cand.h,
                           len(cand.rows), min_child_samples, lam)

    def apply_split(cand):
        f, b, gain = cand.split
        go_left = binned[cand.rows, f] <= b
        lrows, rrows = cand.rows[go_left], cand.rows[~go_left]
        node = tree.nodes[cand.node_id]
        node.feature, node.threshold, node.gain = f, float(thresholds[f][b]), gain
        node.left = len(tree.nodes)
        tree.nodes.append(TreeNode())
        left = make_candidate(node.left, lrows, cand.depth + 1)
        node.right = len(tree.nodes)
        tree.nodes.append(TreeNode())
        right = make_candidate(node.right, rrows, cand.depth + 1)
        return left, right

    tree = DecisionTree([TreeNode()])
    root = make_candidate(0, np.ascontiguousarray(rows, dtype=np.int64), 0)

    if growth == "leaf_wise":
        heap = []
        counter = 0

        def push(cand):
            nonlocal counter
            cand.split = find_split(cand)
            if cand.split is not None:
                heapq.heappush(heap, (-cand.split[2], counter, cand))
                counter += 1

        push(root)
        n_leaf = 1
        while heap and n_leaf < num_leaves:
            _, _, cand = heapq.heappop(heap)
            left, right = apply_split(cand)
            n_leaf += 1
            push(left)
            push(right)
    else:
        level = [root]
        while level:
            nxt = []
            for cand in level:
                cand.split = find_split(cand)
                if cand.split is not None:
                    nxt.extend(apply_split(cand))
            level = nxt
    return tree
