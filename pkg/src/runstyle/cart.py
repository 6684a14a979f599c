"""Small CART classifier with deviance-reduction and twoing split rules.

Exists because the standard library trees only offer Gini/entropy; the
decision-tree baseline here needs "maximum deviance reduction" and the
twoing rule as selectable criteria. Exhaustive split search over all
features and midpoint thresholds, fully deterministic (ties resolve to the
lowest feature index, then the lowest threshold).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CRITERIA = ("max_deviance_reduction", "twoing")


def _deviance(counts: np.ndarray) -> np.ndarray:
    """Node deviance -sum n_k log(n_k / n) for rows of class counts."""
    n = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = counts * np.log(counts / n)
    term = np.where(counts > 0, term, 0.0)
    return -term.sum(axis=-1)


def _twoing_value(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Twoing criterion P(L) P(R) / 4 * (sum_k |p(k|L) - p(k|R)|)^2."""
    nl = left.sum(axis=-1)
    nr = right.sum(axis=-1)
    n = nl + nr
    with np.errstate(divide="ignore", invalid="ignore"):
        pl = left / nl[..., None]
        pr = right / nr[..., None]
    diff = np.abs(np.nan_to_num(pl) - np.nan_to_num(pr)).sum(axis=-1)
    return (nl / n) * (nr / n) / 4.0 * diff ** 2


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class CartTree:
    """Binary classification tree over continuous features."""

    def __init__(self, criterion: str = "max_deviance_reduction",
                 min_leaf: int = 1, max_depth: int | None = None):
        if criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
        self.criterion = criterion
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.n_classes: int = 0
        self._root: _Node | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int | None = None) -> "CartTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
            raise ValueError("X must be (n, d) with matching non-empty y")
        self.n_classes = int(n_classes if n_classes is not None else y.max() + 1)
        onehot = np.eye(self.n_classes, dtype=np.float64)[y]
        self._root = self._build(X, y, onehot, depth=0)
        return self

    def _best_split(self, X, onehot):
        total = onehot.sum(axis=0)
        best = None  # (score, feature, threshold)
        parent_dev = _deviance(total) if self.criterion == "max_deviance_reduction" else None
        for j in range(X.shape[1]):
            col = X[:, j]
            order = np.argsort(col, kind="stable")
            sval = col[order]
            cum = np.cumsum(onehot[order], axis=0)
            # candidate boundaries between distinct consecutive values
            boundary = np.flatnonzero(sval[:-1] < sval[1:])
            if len(boundary) == 0:
                continue
            nl = boundary + 1
            valid = (nl >= self.min_leaf) & (len(col) - nl >= self.min_leaf)
            boundary = boundary[valid]
            if len(boundary) == 0:
                continue
            left = cum[boundary]
            right = total[None, :] - left
            if self.criterion == "max_deviance_reduction":
                score = parent_dev - _deviance(left) - _deviance(right)
            else:
                score = _twoing_value(left, right)
            k = int(np.argmax(score))
            if score[k] <= 1e-12:
                continue
            thr = 0.5 * (sval[boundary[k]] + sval[boundary[k] + 1])
            cand = (float(score[k]), j, thr)
            if best is None or cand[0] > best[0] + 1e-15:
                best = cand
        return best

    def _build(self, X, y, onehot, depth):
        node = _Node(counts=onehot.sum(axis=0))
        if (len(y) < 2 * self.min_leaf or len(np.unique(y)) == 1
                or (self.max_depth is not None and depth >= self.max_depth)):
            return node
        split = self._best_split(X, onehot)
        if split is None:
            return node
        _, j, thr = split
        mask = X[:, j] <= thr
        node.feature = j
        node.threshold = thr
        node.left = self._build(X[mask], y[mask], onehot[mask], depth + 1)
        node.right = self._build(X[~mask], y[~mask], onehot[~mask], depth + 1)
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Leaf class frequencies for each row."""
        if self._root is None:
            raise RuntimeError("tree is not fitted")
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros((len(X), self.n_classes))
        for i, row in enumerate(X):
            node = self._root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.counts / node.counts.sum()
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def to_state(self) -> dict:
        """Serializable flat representation."""
        nodes = []

        def walk(node):
            idx = len(nodes)
            nodes.append({"feature": node.feature, "threshold": node.threshold,
                          "counts": node.counts.tolist(), "left": -1, "right": -1})
            if not node.is_leaf:
                nodes[idx]["left"] = walk(node.left)
                nodes[idx]["right"] = walk(node.right)
            return idx

        if self._root is not None:
            walk(self._root)
        return {"criterion": self.criterion, "min_leaf": self.min_leaf,
                "max_depth": self.max_depth, "n_classes": self.n_classes,
                "nodes": nodes}

    @classmethod
    def from_state(cls, state: dict) -> "CartTree":
        tree = cls(state["criterion"], state["min_leaf"], state["max_depth"])
        tree.n_classes = state["n_classes"]
        nodes = state["nodes"]
        if nodes:
            def build(idx):
                raw = nodes[idx]
                node = _Node(feature=raw["feature"], threshold=raw["threshold"],
                             counts=np.asarray(raw["counts"]))
                if raw["left"] >= 0:
                    node.left = build(raw["left"])
                    node.right = build(raw["right"])
                return node
            tree._root = build(0)
        return tree
