import logging
from functools import partial

import numpy as np

from cohort.exceptions import ArgumentError, DegenerateWeightsError, FitError, UndefinedValueError
from cohort.folds import kfold_split, spawn_seeds
from cohort.models import ARMS
from forest.ensemble import fit_forest
from forest.params import REGRESSION, ForestParams
from learners.config import LearnerConfig
from learners.optimizer import fit_logistic, fit_ramp
from learners.outcome import fit_arm_outcomes, fit_main_effect, pseudo_contrast
from learners.rules import PairedForestRule, UniversalRule
from valueeval.estimators import ipw_value, value_from_decisions

logger = logging.getLogger(__name__)

LEARNERS = ('zero', 'rf', 'rwl', 'earl')
UNIVERSAL_PREFIX = 'universal:'
ZERO_TOLERANCE = 1e-9


def parse_learner(spec):
    """Validate a learner spec: a learner name or ``universal:+1`` / ``universal:-1``."""
    spec = str(spec).strip().lower()
    if spec in LEARNERS:
        return spec
    if spec.startswith(UNIVERSAL_PREFIX):
        arm = spec[len(UNIVERSAL_PREFIX):]
        if arm in ('+1', '1', '-1'):
            return f'{UNIVERSAL_PREFIX}{int(arm):+d}'
    raise ArgumentError(f"unknown learner '{spec}'; expected one of {LEARNERS} or universal:+1 / universal:-1")


def fit_zero_order(cohort, propensity, tie_arm=-1, normalized=True):
    """Universal rule with the larger IPW value; equal values go to ``tie_arm``."""
    cohort.require_complete_rewards()
    values = {arm: ipw_value(cohort, UniversalRule(arm), propensity, normalized) for arm in ARMS}
    if values[1] > values[-1]:
        arm = 1
    elif values[-1] > values[1]:
        arm = -1
    else:
        arm = tie_arm
    return UniversalRule(arm, diagnostics={'learner': 'zero', 'values': values, 'converged': True})


def fit_rf_policy(cohort, params=None, seed=0, tie_arm=-1):
    """Regression forest of the reward within each arm; recommend the larger prediction."""
    params = params or ForestParams()
    cohort.require_complete_rewards()
    forests = {}
    for arm, arm_seed in zip(ARMS, spawn_seeds(seed, len(ARMS))):
        rows = np.flatnonzero(cohort.treatment == arm)
        if len(rows) < 2 * params.min_leaf:
            raise FitError(f'arm {arm:+d} has {len(rows)} subjects; need at least {2 * params.min_leaf}')
        forests[arm] = fit_forest(cohort.X[rows], cohort.reward[rows], REGRESSION, params, seed=arm_seed)
    return PairedForestRule(
        forest_minus=forests[-1],
        forest_plus=forests[1],
        tie_arm=tie_arm,
        diagnostics={'learner': 'rf', 'converged': True},
    )


def choose_lambda(cohort, labels, weights, received, fit_classifier, config, seed):
    """Penalty from ``config.lam_grid`` with the best mean held-out IPW value."""
    folds = kfold_split(cohort, config.inner_folds, seed)
    scores = []
    for lam in config.lam_grid:
        fold_values = []
        for _, train, test in folds:
            try:
                standardizer, fit = fit_classifier(cohort.X[train], labels[train], weights[train], lam)
                decisions = standardizer.to_rule(fit.theta, config.tie_arm).apply(cohort.X[test])
                fold_values.append(value_from_decisions(
                    cohort.reward[test], cohort.treatment[test], decisions, received[test],
                ))
            except (DegenerateWeightsError, UndefinedValueError):
                fold_values.append(-np.inf)
        scores.append(np.mean(fold_values))
    best = int(np.argmax(scores))
    logger.debug('Penalty grid values %s; chose lam=%g', np.round(scores, 3).tolist(), config.lam_grid[best])
    return config.lam_grid[best]


def _fit_linear_rule(cohort, labels, weights, received, fit_classifier, config, seed, learner):
    lam = config.lam if config.lam is not None else choose_lambda(
        cohort, labels, weights, received, fit_classifier, config, seed,
    )
    standardizer, fit = fit_classifier(cohort.X, labels, weights, lam)
    return standardizer.to_rule(fit.theta, config.tie_arm, diagnostics={
        'learner': learner,
        'lam': lam,
        'converged': fit.converged,
        'objective': fit.objective,
        'iterations': fit.iterations,
    })


def fit_rwl(cohort, propensity, config=None, seed=0):
    """Residual weighted learning with a linear decision function.

    Residuals from a main-effect outcome model give each subject a weight
    |r| / pi(A; X) and a label A sign(r); the rule is the weighted ramp-loss
    (or hinge) classifier.
    """
    config = config or LearnerConfig()
    cohort.require_complete_rewards()
    cohort.require_both_arms()
    main_seed, lam_seed = spawn_seeds(seed, 2)
    main = fit_main_effect(cohort, config.outcome_model, config.forest, main_seed)
    residual = cohort.reward - main.for_cohort(cohort)
    if np.all(np.abs(residual) <= ZERO_TOLERANCE * max(1.0, np.max(np.abs(cohort.reward)))):
        raise DegenerateWeightsError('every residual is zero; use the zero-order rule instead')
    received = propensity.for_cohort(cohort)
    weights = np.abs(residual) / received
    labels = cohort.treatment * np.where(residual >= 0, 1.0, -1.0)
    fit_classifier = partial(
        fit_ramp,
        surrogate=config.surrogate,
        max_dc_iter=config.max_dc_iter,
        tol=config.tol,
        iterations=config.subgradient_iter,
    )
    return _fit_linear_rule(cohort, labels, weights, received, fit_classifier, config, lam_seed, 'rwl')


def fit_earl(cohort, propensity, config=None, seed=0, outcome_model=None):
    """Augmented relaxed learning: a logistic surrogate on doubly robust contrasts.

    Each subject gets weight |psi| and label sign(psi); ``outcome_model``
    overrides the arm-specific models fitted from ``config``.
    """
    config = config or LearnerConfig()
    cohort.require_complete_rewards()
    cohort.require_both_arms()
    outcome_seed, lam_seed = spawn_seeds(seed, 2)
    if outcome_model is None:
        outcome_model = fit_arm_outcomes(cohort, config.outcome_model, config.forest, outcome_seed)
    psi = pseudo_contrast(cohort, propensity, outcome_model)
    if np.all(np.abs(psi) <= ZERO_TOLERANCE * max(1.0, np.max(np.abs(cohort.reward)))):
        raise DegenerateWeightsError('every pseudo-contrast is zero; use the zero-order rule instead')
    received = propensity.for_cohort(cohort)
    labels = np.where(psi > 0, 1.0, np.where(psi < 0, -1.0, float(config.tie_arm)))
    fit_classifier = partial(fit_logistic, max_iter=config.max_iter)
    return _fit_linear_rule(cohort, labels, np.abs(psi), received, fit_classifier, config, lam_seed, 'earl')


def fit_learner(spec, cohort, propensity, config=None, seed=0):
    """Fit the rule named by ``spec`` on a completed cohort."""
    config = config or LearnerConfig()
    spec = parse_learner(spec)
    if spec == 'zero':
        return fit_zero_order(cohort, propensity, tie_arm=config.tie_arm)
    if spec == 'rf':
        return fit_rf_policy(cohort, config.forest, seed, tie_arm=config.tie_arm)
    if spec == 'rwl':
        return fit_rwl(cohort, propensity, config, seed)
    if spec == 'earl':
        return fit_earl(cohort, propensity, config, seed)
    return UniversalRule(int(spec[len(UNIVERSAL_PREFIX):]), diagnostics={'learner': spec, 'converged': True})
