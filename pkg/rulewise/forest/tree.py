from dataclasses import dataclass, field

import numpy as np

from cohort.exceptions import ArgumentError
from forest.kernels import apply_tree


def gini_impurity(class_counts):
    """1 - sum_c (n_c / n)^2 for non-negative class counts."""
    counts = np.asarray(class_counts, dtype=float)
    if counts.ndim != 1 or np.any(counts < 0):
        raise ArgumentError('class counts must be a non-negative vector')
    total = counts.sum()
    if total <= 0:
        raise ArgumentError('at least one class count must be positive')
    shares = counts / total
    return float(1.0 - np.sum(shares * shares))


@dataclass
class TreeNode:
    """Nested view of a node: a split (feature, threshold) or a leaf payload."""
    n_samples: int
    value: list
    feature: int | None = None
    threshold: float | None = None
    left: 'TreeNode | None' = None
    right: 'TreeNode | None' = None
    impurity: float = 0.0

    @property
    def is_leaf(self):
        return self.feature is None

    def to_nested(self):
        if self.is_leaf:
            return [self.value, self.n_samples, self.impurity]
        return [self.feature, self.threshold, self.left.to_nested(), self.right.to_nested(), self.impurity]

    @classmethod
    def from_nested(cls, nested):
        """Leaves are [value, n, impurity], splits [feature, threshold, left, right, impurity].

        Impurity is optional so that 1.0 documents still load.
        """
        if len(nested) in (2, 3):
            value, n_samples, *rest = nested
            impurity = float(rest[0]) if rest else 0.0
            return cls(n_samples=int(n_samples), value=[float(v) for v in value], impurity=impurity)
        feature, threshold, left, right, *rest = nested
        left, right = cls.from_nested(left), cls.from_nested(right)
        return cls(
            n_samples=left.n_samples + right.n_samples,
            value=[],
            feature=int(feature),
            threshold=float(threshold),
            left=left,
            right=right,
            impurity=float(rest[0]) if rest else 0.0,
        )


@dataclass(frozen=True, eq=False)
class Tree:
    """Fitted tree as flat node arrays; ``feature`` is -1 at leaves."""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    impurity: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ('feature', 'left', 'right', 'n_samples'):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.int64))
        for name in ('threshold',):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))
        value = np.asarray(self.value, dtype=float)
        object.__setattr__(self, 'value', value.reshape(len(self.feature), -1))
        impurity = np.zeros(len(self.feature)) if self.impurity is None else self.impurity
        object.__setattr__(self, 'impurity', np.asarray(impurity, dtype=float))
        internal = self.feature >= 0
        if not np.all(np.isfinite(self.threshold[internal])):
            raise ArgumentError('split thresholds must be finite')

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def apply(self, X):
        return apply_tree(self.feature, self.threshold, self.left, self.right, np.ascontiguousarray(X, dtype=float))

    def predict(self, X):
        return self.value[self.apply(X)]

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def impurity_decrease(self, n_features):
        """Sample-weighted impurity decrease per feature, normalised by the root size."""
        decrease = np.zeros(n_features)
        root = self.n_samples[0]
        for node in np.flatnonzero(self.feature >= 0):
            left, right = self.left[node], self.right[node]
            gain = (
                self.n_samples[node] * self.impurity[node]
                - self.n_samples[left] * self.impurity[left]
                - self.n_samples[right] * self.impurity[right]
            )
            decrease[self.feature[node]] += gain / root
        return decrease

    def root(self):
        def build(node):
            if self.feature[node] < 0:
                return TreeNode(
                    n_samples=int(self.n_samples[node]),
                    value=self.value[node].tolist(),
                    impurity=float(self.impurity[node]),
                )
            return TreeNode(
                n_samples=int(self.n_samples[node]),
                value=self.value[node].tolist(),
                feature=int(self.feature[node]),
                threshold=float(self.threshold[node]),
                left=build(self.left[node]),
                right=build(self.right[node]),
                impurity=float(self.impurity[node]),
            )
        return build(0)

    @classmethod
    def from_root(cls, root):
        """Flatten a nested TreeNode in pre-order."""
        feature, threshold, left, right, value, n_samples, impurity = [], [], [], [], [], [], []
        width = None

        def visit(node):
            nonlocal width
            index = len(feature)
            feature.append(-1 if node.is_leaf else node.feature)
            threshold.append(0.0 if node.is_leaf else node.threshold)
            left.append(-1)
            right.append(-1)
            value.append(node.value)
            n_samples.append(node.n_samples)
            impurity.append(node.impurity)
            if node.is_leaf:
                width = len(node.value)
            else:
                left[index] = visit(node.left)
                right[index] = visit(node.right)
            return index

        visit(root)
        values = np.array([v if v else [np.nan] * width for v in value], dtype=float)
        return cls(feature, threshold, left, right, values, n_samples, impurity)
