import logging
from dataclasses import dataclass, field

import numpy as np

from cohort.exceptions import ArgumentError
from forest.ensemble import fit_forest
from forest.params import CLASSIFICATION, ForestParams

logger = logging.getLogger(__name__)

DEFAULT_CLIP = 0.01


def _check_clip(clip):
    if not 0 <= clip < 0.5:
        raise ArgumentError(f'clip must lie in [0, 0.5), got {clip}')


class Propensity:
    """P(A = +1 | X), clipped to [clip, 1 - clip]."""
    clip = 0.0

    def _raw(self, X):
        raise NotImplementedError

    def prob_treated(self, X):
        X = np.asarray(X, dtype=float)
        return np.clip(self._raw(X), self.clip, 1.0 - self.clip)

    def received(self, X, treatment):
        """Probability of the arm each subject actually received."""
        treated = self.prob_treated(X)
        return np.where(np.asarray(treatment) == 1, treated, 1.0 - treated)

    def for_cohort(self, cohort):
        return self.received(cohort.X, cohort.treatment)


@dataclass(frozen=True, eq=False)
class ConstantPropensity(Propensity):
    """Known assignment probability, the same for everyone."""
    p_treated: float = 0.5
    clip: float = 0.0

    def __post_init__(self):
        _check_clip(self.clip)
        if not 0 < self.p_treated < 1:
            raise ArgumentError(f'p_treated must lie in (0, 1), got {self.p_treated}')

    def _raw(self, X):
        X = np.atleast_2d(X)
        return np.full(X.shape[0], self.p_treated)


@dataclass(frozen=True, eq=False)
class KnownPropensity(Propensity):
    """Assignment probability given by a function of the covariate matrix."""
    function: object
    clip: float = 0.0

    def __post_init__(self):
        _check_clip(self.clip)

    def _raw(self, X):
        return np.asarray(self.function(np.atleast_2d(X)), dtype=float)


@dataclass(frozen=True, eq=False)
class PropensityModel(Propensity):
    """Probability forest for P(A = +1 | X).

    For the cohort it was fitted on, ``for_cohort`` uses out-of-bag
    probabilities.
    """
    forest: object
    clip: float = DEFAULT_CLIP
    fingerprint: str = ''
    training_scores: np.ndarray = field(default=None, repr=False)

    def _raw(self, X):
        probs = self.forest.predict(np.atleast_2d(X))
        return probs[:, self.forest.class_column(1.0)]

    def for_cohort(self, cohort):
        if self.training_scores is not None and cohort.fingerprint() == self.fingerprint:
            treated = np.clip(self.training_scores, self.clip, 1.0 - self.clip)
            return np.where(cohort.treatment == 1, treated, 1.0 - treated)
        return super().for_cohort(cohort)


def fit_propensity(cohort, params=None, seed=0, clip=DEFAULT_CLIP):
    _check_clip(clip)
    cohort.require_both_arms()
    forest = fit_forest(cohort.X, cohort.treatment, CLASSIFICATION, params or ForestParams(), seed=seed)
    oob = forest.oob_predict(cohort.X)[:, forest.class_column(1.0)]
    model = PropensityModel(forest=forest, clip=clip, fingerprint=cohort.fingerprint(), training_scores=oob)
    scores = np.clip(oob, clip, 1 - clip)
    logger.debug('Propensity fitted on n=%d: range [%.3f, %.3f]', cohort.n, scores.min(), scores.max())
    return model
