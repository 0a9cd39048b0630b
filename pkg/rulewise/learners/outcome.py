import logging
from dataclasses import dataclass

import numpy as np

from cohort.exceptions import ArgumentError, FitError
from cohort.folds import spawn_seeds
from cohort.models import ARMS
from forest.ensemble import fit_forest
from forest.params import REGRESSION

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LinearFit:
    """Least-squares fit with intercept."""
    coef: np.ndarray

    @classmethod
    def fit(cls, X, y):
        design = np.column_stack([np.ones(len(X)), X])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        return cls(coef=coef)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.coef[0] + X @ self.coef[1:]


@dataclass(frozen=True, eq=False)
class MainEffectModel:
    """m(X) = E[Y | X] over both arms; out-of-bag on its own training cohort."""
    model: object
    fingerprint: str
    training_predictions: np.ndarray

    def for_cohort(self, cohort):
        if cohort.fingerprint() == self.fingerprint:
            return self.training_predictions
        return self.model.predict(cohort.X)


@dataclass(frozen=True, eq=False)
class ArmOutcomeModel:
    """mu(X, a): one regression per arm; a subject's own-arm prediction is out-of-bag."""
    models: dict
    fingerprint: str
    own_arm_predictions: np.ndarray

    def predict(self, X, arm):
        return self.models[arm].predict(np.atleast_2d(np.asarray(X, dtype=float)))

    def for_cohort(self, cohort):
        minus = self.predict(cohort.X, -1)
        plus = self.predict(cohort.X, 1)
        if cohort.fingerprint() == self.fingerprint:
            minus = np.where(cohort.treatment == -1, self.own_arm_predictions, minus)
            plus = np.where(cohort.treatment == 1, self.own_arm_predictions, plus)
        return minus, plus


def _fit_regression(X, y, kind, params, seed):
    if kind == 'linear':
        model = LinearFit.fit(X, y)
        return model, model.predict(X)
    forest = fit_forest(X, y, REGRESSION, params, seed=seed)
    return forest, forest.oob_predict(X)


def fit_main_effect(cohort, kind='forest', params=None, seed=0):
    cohort.require_complete_rewards()
    model, fitted = _fit_regression(cohort.X, cohort.reward, kind, params, seed)
    return MainEffectModel(model=model, fingerprint=cohort.fingerprint(), training_predictions=fitted)


def fit_arm_outcomes(cohort, kind='forest', params=None, seed=0):
    cohort.require_complete_rewards()
    cohort.require_both_arms()
    seeds = spawn_seeds(seed, len(ARMS))
    models = {}
    own = np.empty(cohort.n)
    for arm, arm_seed in zip(ARMS, seeds):
        rows = np.flatnonzero(cohort.treatment == arm)
        if len(rows) < 2:
            raise FitError(f'arm {arm:+d} has {len(rows)} subjects; an outcome model needs at least 2')
        models[arm], own[rows] = _fit_regression(cohort.X[rows], cohort.reward[rows], kind, params, arm_seed)
    return ArmOutcomeModel(models=models, fingerprint=cohort.fingerprint(), own_arm_predictions=own)


def arm_predictions(outcome_model, cohort):
    """(mu(X, -1), mu(X, +1)) from a fitted model or a plain callable ``f(X, arm)``."""
    if hasattr(outcome_model, 'for_cohort'):
        return outcome_model.for_cohort(cohort)
    if callable(outcome_model):
        minus = np.broadcast_to(np.asarray(outcome_model(cohort.X, -1), dtype=float), (cohort.n,))
        plus = np.broadcast_to(np.asarray(outcome_model(cohort.X, 1), dtype=float), (cohort.n,))
        return minus, plus
    raise ArgumentError('outcome model must be fitted or callable')


def pseudo_contrast(cohort, propensity, outcome_model):
    """Doubly robust per-subject contrast.

    psi = mu(X, +1) - mu(X, -1) + A (Y - mu(X, A)) / pi(A; X)
    """
    cohort.require_complete_rewards()
    minus, plus = arm_predictions(outcome_model, cohort)
    own = np.where(cohort.treatment == 1, plus, minus)
    received = propensity.for_cohort(cohort)
    return plus - minus + cohort.treatment * (cohort.reward - own) / received
