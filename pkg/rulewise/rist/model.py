import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from cohort.exceptions import ArgumentError, FitError, UndefinedSplitError
from cohort.models import ARMS
from forest.kernels import apply_tree, node_capacity
from rist.kernels import grow_survival_tree, logrank_sorted
from rist.params import RistParams

logger = logging.getLogger(__name__)


def logrank_statistic(left, right):
    """Two-sample log-rank chi-square for ``(times, events)`` pairs."""
    left_times, left_events = (np.asarray(v) for v in left)
    right_times, right_events = (np.asarray(v) for v in right)
    if len(left_times) == 0 or len(right_times) == 0:
        raise ArgumentError('both sides of a split must be non-empty')
    times = np.concatenate([left_times, right_times]).astype(float)
    events = np.concatenate([left_events, right_events]).astype(bool)
    is_left = np.concatenate([np.ones(len(left_times), bool), np.zeros(len(right_times), bool)])
    order = np.argsort(times, kind='mergesort')
    statistic = logrank_sorted(times[order], events[order], is_left[order])
    if statistic < 0:
        raise UndefinedSplitError('no events on either side; the log-rank statistic is undefined')
    return float(statistic)


def survival_view(cohort):
    """Times and event flags for survival fitting at the cohort horizon.

    Known rewards below the horizon are events, rewards at the horizon are
    censored there, and subjects still awaiting imputation are censored at
    their follow-up time.
    """
    if cohort.horizon is None:
        raise ArgumentError('restrict the cohort to a horizon before survival fitting')
    known = np.isfinite(cohort.reward)
    times = np.where(known, cohort.reward, cohort.time)
    events = known & (np.nan_to_num(cohort.reward, nan=cohort.horizon) < cohort.horizon)
    return times.astype(float), events


def survival_features(cohort):
    return np.ascontiguousarray(np.column_stack([cohort.X, cohort.treatment.astype(float)]))


@dataclass(frozen=True, eq=False)
class SurvivalTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_samples: np.ndarray
    n_events: np.ndarray
    km_ptr: np.ndarray = field(repr=False)
    km_times: np.ndarray = field(repr=False)
    km_surv: np.ndarray = field(repr=False)
    sample: np.ndarray = field(repr=False)

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def leaves(self):
        return np.flatnonzero(self.feature < 0)

    def apply(self, X):
        return apply_tree(self.feature, self.threshold, self.left, self.right, X)

    def leaf_curve(self, node):
        lo, hi = self.km_ptr[node], self.km_ptr[node + 1]
        return self.km_times[lo:hi], self.km_surv[lo:hi]

    def survival_on(self, grid):
        """Leaf survival evaluated on ``grid``; one row per node."""
        curves = np.ones((self.n_nodes, len(grid)))
        for node in self.leaves:
            times, surv = self.leaf_curve(node)
            if len(times) == 0:
                continue
            idx = np.searchsorted(times, grid, side='right')
            curves[node] = np.where(idx > 0, surv[np.maximum(idx - 1, 0)], 1.0)
        return curves

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())


@dataclass(frozen=True, eq=False)
class RistModel:
    trees: tuple
    params: RistParams
    seed: int | None
    horizon: float
    grid: np.ndarray = field(repr=False)
    schema: tuple = ()

    def survival(self, cohort, grid=None):
        """Ensemble-averaged survival of every subject on ``grid`` (default: event-time grid)."""
        if cohort.schema != self.schema:
            raise ArgumentError('cohort covariates differ from the ones the model was fitted on')
        grid = self.grid if grid is None else np.asarray(grid, dtype=float)
        X = survival_features(cohort)
        total = np.zeros((cohort.n, len(grid)))
        for tree in self.trees:
            total += tree.survival_on(grid)[tree.apply(X)]
        return total / len(self.trees)


def _grow(features, times, events, arm_rows, params, mtry, seed_seq):
    rng = np.random.default_rng(seed_seq)
    parts = [
        rng.choice(rows, size=max(1, math.ceil(params.subsample * len(rows))), replace=False)
        for rows in arm_rows if len(rows)
    ]
    sample = np.concatenate(parts).astype(np.int64)
    sample = sample[np.argsort(times[sample], kind='stable')]
    cap = node_capacity(len(sample), params.min_leaf)
    keys = rng.random((cap, features.shape[1]))
    draws = rng.random((cap, mtry * params.n_random_splits))
    arrays = grow_survival_tree(
        features, times, events, sample, params.min_leaf, params.min_events_per_leaf,
        mtry, params.n_random_splits, keys, draws,
    )
    return SurvivalTree(*arrays, sample=sample)


def fit_rist(cohort, params=None, seed=0):
    """Fit extremely randomized survival trees, each on half of every arm."""
    params = params or RistParams()
    if cohort.horizon is None:
        raise ArgumentError('restrict the cohort to a horizon before fitting RIST')
    if params.horizon is not None and params.horizon != cohort.horizon:
        raise ArgumentError(f'RIST horizon {params.horizon} differs from the cohort horizon {cohort.horizon}')
    times, events = survival_view(cohort)
    if not events.any():
        raise FitError('no events before the horizon; survival trees cannot be fitted')
    features = survival_features(cohort)
    mtry = params.resolve_mtry(features.shape[1])
    arm_rows = [np.flatnonzero(cohort.treatment == arm) for arm in ARMS]

    children = np.random.SeedSequence(seed).spawn(params.n_trees)
    trees = Parallel(n_jobs=params.n_jobs)(
        delayed(_grow)(features, times, events, arm_rows, params, mtry, child) for child in children
    )
    model = RistModel(
        trees=tuple(trees),
        params=params,
        seed=seed,
        horizon=cohort.horizon,
        grid=np.unique(times[events]),
        schema=cohort.schema,
    )
    logger.debug(
        'Fitted RIST: %d trees, n=%d, %d events, mean depth %.1f',
        params.n_trees, cohort.n, int(events.sum()), np.mean([t.depth() for t in trees]),
    )
    return model
