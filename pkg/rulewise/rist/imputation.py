import logging
from dataclasses import dataclass

import numpy as np
from lifelines import KaplanMeierFitter

from cohort.exceptions import ArgumentError
from cohort.folds import spawn_seeds
from rist.model import fit_rist, survival_view
from rist.params import RistParams

logger = logging.getLogger(__name__)

NEGLIGIBLE_SURVIVAL = 1e-12


@dataclass(frozen=True, eq=False)
class ImputationRun:
    cohort: object
    model: object
    history: tuple
    n_imputed: int


def _check_horizon(model, cohort):
    if cohort.horizon is None or model.horizon != cohort.horizon:
        raise ArgumentError(f'model horizon {model.horizon} differs from cohort horizon {cohort.horizon}')


def _draw_rewards(model, cohort, rng):
    """Rewards with every flagged subject's time drawn from its conditional survival.

    For a subject censored at c, u ~ Uniform(0, S(c)) and the imputed time is
    the first event-grid time after c where S drops to u or below; if S never
    gets there the subject survives to the horizon.
    """
    reward = cohort.reward.copy()
    flagged = np.flatnonzero(cohort.needs_imputation)
    if not len(flagged):
        return reward
    grid = model.grid
    surv = model.survival(cohort.subset(flagged))
    draws = rng.random(len(flagged))
    for row, i in enumerate(flagged):
        after = int(np.searchsorted(grid, cohort.time[i], side='right'))
        at_censoring = surv[row, after - 1] if after > 0 else 1.0
        if at_censoring <= NEGLIGIBLE_SURVIVAL:
            imputed = grid[after] if after < len(grid) else model.horizon
        else:
            u = draws[row] * at_censoring
            hits = np.flatnonzero(surv[row, after:] <= u)
            imputed = grid[after + hits[0]] if len(hits) else model.horizon
        reward[i] = min(imputed, model.horizon)
    return reward


def _complete(model, cohort, seed):
    reward = _draw_rewards(model, cohort, np.random.default_rng(seed))
    return cohort.replace(reward=reward, needs_imputation=np.zeros(cohort.n, dtype=bool))


def draw_imputations(model, cohort, seed=0):
    """One completion of ``cohort`` from a fitted model, without refitting."""
    _check_horizon(model, cohort)
    return _complete(model, cohort, seed)


def _cycles(model, cohort, params, seed):
    seeds = spawn_seeds(seed, 2 * params.n_imputation_cycles)
    history = []
    for cycle in range(params.n_imputation_cycles):
        if cycle:
            model = fit_rist(history[-1], params, seed=seeds[2 * cycle])
        history.append(_complete(model, cohort, seeds[2 * cycle + 1]))
        logger.debug('Imputation cycle %d/%d done', cycle + 1, params.n_imputation_cycles)
    return model, tuple(history)


def impute_censored(model, cohort, seed=0):
    """Complete every subject censored before the horizon.

    The first cycle draws from ``model``; each further cycle refits on the
    previous completed cohort and redraws from the original censoring times.
    """
    _check_horizon(model, cohort)
    _, history = _cycles(model, cohort, model.params, seed)
    return history[-1]


def run_imputation(cohort, params=None, seed=0):
    """Fit RIST on ``cohort`` and run every imputation cycle.

    The returned run keeps the last model, so held-out subjects can be
    completed with ``draw_imputations``.
    """
    params = params or RistParams()
    fit_seed, cycle_seed = spawn_seeds(seed, 2)
    model = fit_rist(cohort, params, seed=fit_seed)
    model, history = _cycles(model, cohort, params, cycle_seed)
    n_imputed = int(cohort.needs_imputation.sum())
    logger.info(
        'Imputed %d of %d subjects at horizon %.0f over %d cycles',
        n_imputed, cohort.n, cohort.horizon, params.n_imputation_cycles,
    )
    return ImputationRun(cohort=history[-1], model=model, history=history, n_imputed=n_imputed)


def completed_survival(cohort, times):
    """Kaplan-Meier survival of a cohort's (possibly censored) rewards at ``times``."""
    durations, events = survival_view(cohort)
    fitter = KaplanMeierFitter()
    fitter.fit(durations, event_observed=events)
    return fitter.survival_function_at_times(np.asarray(times, dtype=float)).to_numpy()
