"""K-fold evaluation of learned treatment rules.

Each fold fits the propensity model, completes censored rewards with RIST
and fits the learner on the training folds only. The held-out fold is
completed with the training RIST model and scored by IPW with the training
propensity model.
"""
import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from cohort.exceptions import ArgumentError, FoldError, RulewiseError
from cohort.folds import kfold_split, spawn_seeds
from cohort.horizon import censoring_fraction, restrict_horizon
from forest.propensity import fit_propensity
from learners.fitting import fit_learner, parse_learner
from rist.imputation import draw_imputations, run_imputation
from valueeval.estimators import ipw_value
from valueeval.models import EvaluationConfig, FoldResult, ValueEstimate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PreparedFold:
    """Completed training and test cohorts of one fold, with its propensity model."""
    fold: int
    train: object
    test: object
    propensity: object
    learner_seed: int
    diagnostics: dict


def at_horizon(cohort, horizon=None):
    """``cohort`` restricted to ``horizon``, or as is when already restricted there."""
    if horizon is None:
        if cohort.horizon is None:
            raise ArgumentError('no horizon given and the cohort is not restricted to one')
        return cohort
    if cohort.horizon == float(horizon):
        return cohort
    return restrict_horizon(cohort, horizon)


def _stage(fold, stage, learner=None):
    """Run a fold step, turning any failure into a FoldError naming the step."""
    def run(function, *args, **kwargs):
        try:
            return function(*args, **kwargs)
        except (RulewiseError, ValueError, np.linalg.LinAlgError) as exc:
            raise FoldError(fold, stage, learner, exc) from exc
    return run


def prepare_fold(cohort, fold, train_rows, test_rows, seed, config, propensity=None):
    propensity_seed, impute_seed, test_seed, learner_seed = spawn_seeds(seed, 4)
    train, test = cohort.subset(train_rows), cohort.subset(test_rows)
    diagnostics = {
        'fold': fold,
        'n_train': train.n,
        'n_test': test.n,
        'censored_train': censoring_fraction(train),
        'censored_test': censoring_fraction(test),
    }

    if propensity is None:
        propensity = _stage(fold, 'propensity')(
            fit_propensity, train, config.forest, seed=propensity_seed, clip=config.clip,
        )
    scores = propensity.prob_treated(test.X)
    diagnostics['propensity_range'] = (float(scores.min()), float(scores.max()))

    diagnostics['imputed'] = int(train.needs_imputation.sum() + test.needs_imputation.sum())
    if diagnostics['imputed']:
        run = _stage(fold, 'imputation')(run_imputation, train, config.rist, seed=impute_seed)
        train = run.cohort
        test = _stage(fold, 'imputation')(draw_imputations, run.model, test, seed=test_seed)

    logger.info(
        'Fold %d: n_train=%d n_test=%d, censored %.1f%%, imputed %d, propensity [%.3f, %.3f]',
        fold, train.n, test.n, 100 * diagnostics['censored_train'], diagnostics['imputed'],
        *diagnostics['propensity_range'],
    )
    return PreparedFold(fold, train, test, propensity, learner_seed, diagnostics)


def evaluate_fold(prepared, learner, config):
    fold = prepared.fold
    rule = _stage(fold, 'fit', learner)(
        fit_learner, learner, prepared.train, prepared.propensity, config.learner, seed=prepared.learner_seed,
    )
    value = _stage(fold, 'evaluate', learner)(
        ipw_value, prepared.test, rule, prepared.propensity, config.normalized,
    )
    diagnostics = dict(prepared.diagnostics, learner=learner, **{
        key: rule.diagnostics[key] for key in ('converged', 'lam', 'iterations') if key in rule.diagnostics
    })
    if not diagnostics.get('converged', True):
        logger.warning('Fold %d: learner %s did not converge', fold, learner)
    logger.debug('Fold %d: %s value %.3f', fold, learner, value)
    return FoldResult(fold=fold, value=value, n_test=prepared.test.n, diagnostics=diagnostics)


def prepare_folds(cohort, k=10, horizon=None, seed=0, config=None, propensity=None):
    """Fold assignment and completed, propensity-scored cohorts for every fold.

    ``propensity`` fixes a known assignment model instead of fitting one per fold.
    """
    config = (config or EvaluationConfig()).with_overrides(k=k)
    cohort = at_horizon(cohort, horizon)
    cohort.require_both_arms()
    split_seed, fold_seed = spawn_seeds(seed, 2)
    folds = kfold_split(cohort, config.k, split_seed)
    seeds = spawn_seeds(fold_seed, config.k)
    prepared = Parallel(n_jobs=config.n_jobs)(
        delayed(prepare_fold)(cohort, fold, train, test, seeds[fold], config, propensity)
        for fold, train, test in folds
    )
    return folds, prepared


def cross_validated_values(cohort, learners, k=10, horizon=None, seed=0, config=None, propensity=None):
    """ValueEstimate per learner, all on the same folds, imputations and propensities."""
    config = (config or EvaluationConfig()).with_overrides(k=k)
    learners = [parse_learner(spec) for spec in learners]
    if not learners:
        raise ArgumentError('at least one learner is required')
    folds, prepared = prepare_folds(cohort, config.k, horizon, seed, config, propensity)
    horizon = prepared[0].train.horizon
    estimates = {}
    for learner in learners:
        results = Parallel(n_jobs=config.n_jobs)(
            delayed(evaluate_fold)(fold, learner, config) for fold in prepared
        )
        estimates[learner] = ValueEstimate.from_folds(learner, results, horizon, folds.signature())
        logger.info(
            'Learner %s at %.0f days: %.2f (%.2f, %.2f)',
            learner, horizon, estimates[learner].point, estimates[learner].ci_low, estimates[learner].ci_high,
        )
    return estimates


def cross_validated_value(cohort, learner_spec, k=10, horizon=None, seed=0, config=None, propensity=None):
    spec = parse_learner(learner_spec)
    return cross_validated_values(cohort, [spec], k, horizon, seed, config, propensity)[spec]
