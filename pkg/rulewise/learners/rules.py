from dataclasses import dataclass, field

import numpy as np

from cohort.exceptions import ArgumentError
from cohort.models import ARMS
from toystrata.models import StratumRule


def _check_arm(arm, name='arm'):
    if arm not in ARMS:
        raise ArgumentError(f'{name} must be -1 or +1, got {arm}')
    return int(arm)


class TreatmentRule:
    """Decision function from covariates to an arm in {-1, +1}."""
    variant = None
    n_features = None

    def decide(self, X):
        raise NotImplementedError

    def apply(self, x):
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        if single:
            X = X.reshape(1, -1)
        if X.ndim != 2:
            raise ArgumentError('covariates must be a vector or a matrix')
        if self.n_features is not None and X.shape[1] != self.n_features:
            raise ArgumentError(f'rule expects {self.n_features} covariates, got {X.shape[1]}')
        decisions = self.decide(X).astype(np.int64)
        return int(decisions[0]) if single else decisions

    @property
    def name(self):
        return self.variant


def apply_rule(rule, x):
    return rule.apply(x)


@dataclass(frozen=True, eq=False)
class UniversalRule(TreatmentRule):
    arm: int
    diagnostics: dict = field(default_factory=dict, compare=False)
    variant = 'universal'

    def __post_init__(self):
        object.__setattr__(self, 'arm', _check_arm(self.arm))

    def decide(self, X):
        return np.full(X.shape[0], self.arm)

    @property
    def name(self):
        return f'universal:{self.arm:+d}'


@dataclass(frozen=True, eq=False)
class LinearRule(TreatmentRule):
    """sign(weights . x + intercept); a score of exactly zero goes to ``tie_arm``."""
    weights: tuple
    intercept: float
    tie_arm: int = -1
    diagnostics: dict = field(default_factory=dict, compare=False)
    variant = 'linear'

    def __post_init__(self):
        weights = tuple(float(w) for w in np.ravel(self.weights))
        if not all(np.isfinite(weights)) or not np.isfinite(self.intercept):
            raise ArgumentError('linear rule coefficients must be finite')
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'intercept', float(self.intercept))
        object.__setattr__(self, 'tie_arm', _check_arm(self.tie_arm, 'tie_arm'))

    @property
    def n_features(self):
        return len(self.weights)

    def score(self, X):
        return np.asarray(X, dtype=float) @ np.asarray(self.weights) + self.intercept

    def decide(self, X):
        score = self.score(X)
        return np.where(score > 0, 1, np.where(score < 0, -1, self.tie_arm))


@dataclass(frozen=True, eq=False)
class PairedForestRule(TreatmentRule):
    """Arm whose regression forest predicts the larger reward."""
    forest_minus: object
    forest_plus: object
    tie_arm: int = -1
    diagnostics: dict = field(default_factory=dict, compare=False)
    variant = 'paired-forest'

    def __post_init__(self):
        if self.forest_minus.n_features != self.forest_plus.n_features:
            raise ArgumentError('paired forests were fitted on different covariates')
        object.__setattr__(self, 'tie_arm', _check_arm(self.tie_arm, 'tie_arm'))

    @property
    def n_features(self):
        return self.forest_minus.n_features

    def decide(self, X):
        minus = self.forest_minus.predict(X)
        plus = self.forest_plus.predict(X)
        return np.where(plus > minus, 1, np.where(plus < minus, -1, self.tie_arm))


@dataclass(frozen=True, eq=False)
class StratumLookupRule(TreatmentRule):
    """Arm looked up from the 0/1 modifier pattern of each subject."""
    stratum_rule: StratumRule
    modifiers: tuple
    diagnostics: dict = field(default_factory=dict, compare=False)
    variant = 'stratum-lookup'

    @property
    def n_features(self):
        return len(self.modifiers)

    def decide(self, X):
        lookup = self.stratum_rule.as_dict()
        decisions = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            stratum = tuple(int(v) for v in row)
            if stratum not in lookup:
                raise ArgumentError(f'no arm assigned to stratum {stratum}')
            decisions[i] = lookup[stratum]
        return decisions
