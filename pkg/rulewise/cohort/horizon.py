import logging

import numpy as np

from cohort.exceptions import ArgumentError

logger = logging.getLogger(__name__)


def restrict_horizon(cohort, horizon):
    """Turn follow-up into restricted rewards at ``horizon`` days.

    Follow-up reaching the horizon counts as event-free through it
    (reward = horizon). Events before the horizon keep their time. Subjects
    censored before the horizon get no reward and are flagged for imputation.
    """
    if horizon is None or not np.isfinite(horizon) or horizon <= 0:
        raise ArgumentError(f'horizon must be positive, got {horizon}')
    horizon = float(horizon)

    reached = cohort.time >= horizon
    observed_event = cohort.event & ~reached
    censored_early = ~cohort.event & ~reached

    reward = np.where(reached, horizon, np.where(observed_event, cohort.time, np.nan))
    event = observed_event.copy()

    restricted = cohort.replace(
        reward=reward,
        event=event,
        needs_imputation=censored_early,
        horizon=horizon,
    )
    logger.debug(
        'Restricted %d subjects to %.0f days: %d reached horizon, %d need imputation',
        cohort.n, horizon, int(reached.sum()), int(censored_early.sum()),
    )
    return restricted


def censoring_fraction(cohort):
    """Share of subjects censored before the horizon."""
    if cohort.n == 0:
        return 0.0
    return float(np.mean(cohort.needs_imputation))
