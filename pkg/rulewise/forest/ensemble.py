import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from cohort.exceptions import ArgumentError, EvaluationError
from forest.kernels import grow_tree, node_capacity
from forest.params import CLASSIFICATION, MODES, REGRESSION, ForestParams
from forest.tree import Tree

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple
    mode: str
    params: ForestParams
    oob: tuple = field(repr=False)
    seed: int | None
    classes: tuple | None
    n_features: int
    n_train: int

    @property
    def n_trees(self):
        return len(self.trees)

    def _matrix(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ArgumentError(
                f'expected {self.n_features} covariates, got {X.shape[-1] if X.ndim else 0}'
            )
        return np.ascontiguousarray(X), single

    def _finish(self, out, single):
        if self.mode == REGRESSION:
            out = out[:, 0]
        return out[0] if single else out

    def predict(self, X):
        """Class probabilities (classification) or mean response (regression)."""
        X, single = self._matrix(X)
        total = np.zeros((X.shape[0], self._width))
        for tree in self.trees:
            total += tree.predict(X)
        return self._finish(total / self.n_trees, single)

    def oob_predict(self, X):
        """Predictions for the training rows using only trees that did not see them.

        Rows that were in-bag for every tree fall back to the full forest.
        """
        X, _ = self._matrix(X)
        if X.shape[0] != self.n_train:
            raise ArgumentError(f'oob_predict needs the {self.n_train} training rows, got {X.shape[0]}')
        total = np.zeros((X.shape[0], self._width))
        counts = np.zeros(X.shape[0])
        for tree, rows in zip(self.trees, self.oob):
            if len(rows):
                total[rows] += tree.predict(X[rows])
                counts[rows] += 1
        never = counts == 0
        if np.any(never):
            logger.warning('%d training rows were never out-of-bag; using full-forest predictions', int(never.sum()))
            full = np.zeros((int(never.sum()), self._width))
            for tree in self.trees:
                full += tree.predict(X[never])
            total[never] = full
            counts[never] = self.n_trees
        return self._finish(total / counts[:, None], False)

    def class_column(self, label):
        if self.mode != CLASSIFICATION:
            raise ArgumentError('class probabilities need a classification forest')
        try:
            return self.classes.index(label)
        except ValueError:
            raise ArgumentError(f'class {label!r} was not seen in training') from None

    def encode(self, y):
        """Class codes for classification labels; the targets themselves for regression."""
        y = np.asarray(y, dtype=float)
        if self.mode == REGRESSION:
            return y
        codes = np.searchsorted(np.asarray(self.classes, dtype=float), y)
        codes = np.clip(codes, 0, len(self.classes) - 1)
        if np.any(np.asarray(self.classes, dtype=float)[codes] != y):
            raise ArgumentError('targets contain classes unseen in training')
        return codes

    def gini_importance(self):
        """Mean decrease in impurity per covariate, averaged over trees."""
        return np.mean([tree.impurity_decrease(self.n_features) for tree in self.trees], axis=0)

    @property
    def _width(self):
        return len(self.classes) if self.mode == CLASSIFICATION else 1


def _grow(X, y, n_classes, params, mtry, seed_seq):
    rng = np.random.default_rng(seed_seq)
    n, p = X.shape
    m = max(1, int(round(params.sample_fraction * n)))
    if params.bootstrap:
        sample = rng.integers(0, n, size=m)
    else:
        sample = rng.choice(n, size=m, replace=False)
    sample = np.sort(sample).astype(np.int64)
    keys = rng.random((node_capacity(m, params.min_leaf), p))
    max_depth = -1 if params.max_depth is None else params.max_depth
    arrays = grow_tree(X, y, n_classes, sample, params.min_leaf, max_depth, mtry, keys)
    in_bag = np.zeros(n, dtype=bool)
    in_bag[sample] = True
    return Tree(*arrays), np.flatnonzero(~in_bag)


def fit_forest(X, y, mode, params=None, seed=0):
    """Grow a bagged CART ensemble.

    Each tree draws its sample and per-node candidate covariates from its own
    child of ``SeedSequence(seed)``, so the forest does not depend on how the
    trees are scheduled across workers.
    """
    params = params or ForestParams()
    if mode not in MODES:
        raise ArgumentError(f"mode must be one of {MODES}, got '{mode}'")
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ArgumentError('X must be a 2-d matrix')
    n, p = X.shape
    if len(y) != n:
        raise ArgumentError(f'X has {n} rows but y has {len(y)} entries')
    if n < 2:
        raise ArgumentError('at least two rows are needed to fit a forest')
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ArgumentError('X and y must be finite')
    mtry = params.resolve_mtry(p)

    classes = None
    targets = y
    n_classes = 0
    if mode == CLASSIFICATION:
        labels = np.unique(y)
        if len(labels) < 2:
            raise ArgumentError('classification needs at least two classes')
        classes = tuple(float(c) for c in labels)
        targets = np.searchsorted(labels, y).astype(float)
        n_classes = len(labels)

    children = np.random.SeedSequence(seed).spawn(params.n_trees)
    grown = Parallel(n_jobs=params.n_jobs)(
        delayed(_grow)(X, targets, n_classes, params, mtry, child) for child in children
    )
    trees, oob = zip(*grown)

    forest = Forest(
        trees=tuple(trees),
        mode=mode,
        params=params,
        oob=tuple(oob),
        seed=seed,
        classes=classes,
        n_features=p,
        n_train=n,
    )
    never = n - len(np.unique(np.concatenate(oob))) if any(len(o) for o in oob) else n
    if params.bootstrap and never:
        logger.warning('%d of %d rows are in-bag for every one of %d trees', never, n, params.n_trees)
    logger.debug('Fitted %s forest: %d trees, n=%d, p=%d, mtry=%d', mode, params.n_trees, n, p, mtry)
    return forest


def predict(forest, x):
    return forest.predict(x)


def oob_predict(forest, X):
    return forest.oob_predict(X)


def tree_error(forest, tree, X, targets):
    """Misclassification rate (classification) or mean squared error (regression)."""
    out = tree.predict(X)
    if forest.mode == CLASSIFICATION:
        return float(np.mean(np.argmax(out, axis=1) != targets))
    return float(np.mean((out[:, 0] - targets) ** 2))


def oob_error(forest, X, y):
    """Ensemble out-of-bag error over rows that are out-of-bag for some tree."""
    X, _ = forest._matrix(X)
    targets = forest.encode(y)
    covered = np.zeros(forest.n_train, dtype=bool)
    for rows in forest.oob:
        covered[rows] = True
    if not covered.any():
        raise EvaluationError('no tree has out-of-bag rows')
    prediction = forest.oob_predict(X)[covered]
    if forest.mode == CLASSIFICATION:
        return float(np.mean(np.argmax(prediction, axis=1) != targets[covered]))
    return float(np.mean((prediction - targets[covered]) ** 2))
