import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from cohort.exceptions import ArgumentError, EvaluationError
from cohort.folds import kfold_split, spawn_seeds
from forest.ensemble import fit_forest, tree_error
from forest.params import REGRESSION, ForestParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PermutationImportance:
    scores: np.ndarray
    se: np.ndarray
    per_tree: np.ndarray

    def within_noise(self, j, width=2.0):
        return abs(self.scores[j]) <= width * self.se[j]


def oob_permutation_importance(forest, X, y, seed=0):
    """Per covariate: mean over trees of (OOB error with the column shuffled - OOB error).

    Shuffles happen within each tree's out-of-bag rows, in tree order, from a
    single generator seeded by ``seed``.
    """
    X, _ = forest._matrix(X)
    if X.shape[0] != forest.n_train:
        raise ArgumentError(f'expected the {forest.n_train} training rows, got {X.shape[0]}')
    targets = forest.encode(y)
    rng = np.random.default_rng(seed)
    rows_per_tree = []
    for tree, rows in zip(forest.trees, forest.oob):
        if len(rows) < 2:
            continue
        X_oob = X[rows]
        t_oob = targets[rows]
        baseline = tree_error(forest, tree, X_oob, t_oob)
        row = np.empty(forest.n_features)
        for j in range(forest.n_features):
            shuffled = X_oob.copy()
            shuffled[:, j] = rng.permutation(shuffled[:, j])
            row[j] = tree_error(forest, tree, shuffled, t_oob) - baseline
        rows_per_tree.append(row)
    if not rows_per_tree:
        raise EvaluationError('no tree has out-of-bag rows; permutation importance is undefined')
    per_tree = np.vstack(rows_per_tree)
    se = per_tree.std(axis=0, ddof=1) / np.sqrt(len(per_tree)) if len(per_tree) > 1 else np.zeros(forest.n_features)
    return PermutationImportance(scores=per_tree.mean(axis=0), se=se, per_tree=per_tree)


def importance_design(cohort):
    """Covariates plus the treatment column, used to explain the reward."""
    cohort.require_complete_rewards()
    X = np.column_stack([cohort.X, cohort.treatment.astype(float)])
    return X, cohort.reward


def variable_importance_table(cohort, k=10, seed=0, params=None):
    """Per-fold importance of every covariate and the rank it earns in that fold.

    Within each fold a regression forest of the reward on the covariates and
    the treatment is grown on the training part; the treatment column is used
    for fitting but not ranked.
    """
    params = params or ForestParams()
    folds = kfold_split(cohort, k, seed)
    fold_seeds = spawn_seeds(seed, k)
    records = []
    for fold, train, _ in folds:
        part = cohort.subset(train)
        X, y = importance_design(part)
        forest = fit_forest(X, y, REGRESSION, params, seed=fold_seeds[fold])
        permutation = oob_permutation_importance(forest, X, y, seed=fold_seeds[fold])
        gini = forest.gini_importance()
        p = cohort.p
        ranks = rankdata(-permutation.scores[:p], method='average')
        for j, name in enumerate(cohort.schema):
            records.append({
                'fold': fold,
                'covariate': name,
                'importance': float(permutation.scores[j]),
                'importance_se': float(permutation.se[j]),
                'gini_importance': float(gini[j]),
                'rank': float(ranks[j]),
            })
        logger.info('Importance fold %d/%d: top covariate %s', fold + 1, k, cohort.schema[int(np.argmin(ranks))])
    return pd.DataFrame.from_records(records)


def aggregate_importance(per_fold, schema):
    """Mean rank across folds; ties go to larger mean importance, then schema order.

    ``mean_importance_se`` combines the per-fold permutation SEs of the mean.
    """
    summary = per_fold.groupby('covariate', sort=False).agg(
        mean_rank=('rank', 'mean'),
        mean_importance=('importance', 'mean'),
        sd_importance=('importance', 'std'),
        mean_importance_se=('importance_se', lambda se: float(np.sqrt(np.sum(se ** 2))) / len(se)),
        mean_gini_importance=('gini_importance', 'mean'),
    )
    summary = summary.reindex(list(schema))
    summary['schema_order'] = np.arange(len(schema))
    summary = summary.sort_values(
        ['mean_rank', 'mean_importance', 'schema_order'],
        ascending=[True, False, True],
        kind='mergesort',
    )
    summary['aggregate_rank'] = np.arange(1, len(summary) + 1)
    return summary.drop(columns='schema_order').rename_axis('covariate').reset_index()


def select_top_variables(cohort, k=10, m=10, seed=0, params=None):
    """Names of the ``m`` covariates with the best mean rank across ``k`` folds."""
    if not 1 <= m <= cohort.p:
        raise ArgumentError(f'm={m} must lie in [1, {cohort.p}]')
    table = aggregate_importance(variable_importance_table(cohort, k, seed, params), cohort.schema)
    return list(table['covariate'][:m])
