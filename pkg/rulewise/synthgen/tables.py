import logging
from dataclasses import dataclass

import numpy as np

from cohort.exceptions import ArgumentError
from cohort.models import ARMS, Cohort
from forest.propensity import KnownPropensity
from learners.rules import StratumLookupRule
from synthgen.constants import TABLE_REWARDS
from toystrata.standardize import stratified_optimal_rule

logger = logging.getLogger(__name__)

DAYS_HORIZON = 365.0


def _alive_value(reward):
    if reward not in TABLE_REWARDS:
        raise ArgumentError(f"unknown table reward '{reward}'; expected one of {TABLE_REWARDS}")
    return 1.0 if reward == 'risk' else DAYS_HORIZON


def generate_from_table(table, seed=0, reward='risk'):
    """One subject per count in ``table``, in an order shuffled by ``seed``.

    Covariates are the stratum indicators and the arm is the table arm.
    ``reward='risk'`` scores survivors 1 and deaths 0; ``reward='days'``
    scores survivors 365 days and deaths 0.
    """
    alive_value = _alive_value(reward)
    covariates, treatment, died = [], [], []
    for s, stratum in enumerate(table.strata):
        for a, arm in enumerate(ARMS):
            n_died, n_alive = (int(v) for v in table.counts[s, a])
            size = n_died + n_alive
            covariates.append(np.tile(np.asarray(stratum, dtype=float), (size, 1)))
            treatment.append(np.full(size, arm))
            died.append(np.r_[np.ones(n_died, dtype=bool), np.zeros(n_alive, dtype=bool)])

    n = table.total
    order = np.random.default_rng(seed).permutation(n)
    covariates = np.concatenate(covariates).reshape(n, len(table.modifiers))[order]
    treatment = np.concatenate(treatment)[order]
    died = np.concatenate(died)[order]
    reward_values = np.where(died, 0.0, alive_value)

    prefix = table.name or 'table'
    cohort = Cohort(
        schema=table.modifiers,
        ids=[f'{prefix}-{i:06d}' for i in range(n)],
        covariates=covariates,
        treatment=treatment,
        time=reward_values,
        event=died,
        reward=reward_values,
        needs_imputation=np.zeros(n, dtype=bool),
        horizon=alive_value,
        outcome='survival' if reward == 'risk' else 'days_alive',
    )
    logger.debug('Generated %d subjects from %s', n, prefix)
    return cohort


@dataclass(frozen=True, eq=False)
class TableScenario:
    """Population described by a toy table.

    Strata occur with prevalence N_s / N, arm +1 is assigned with the
    table's per-stratum share and deaths occur with the per-cell risk.
    """
    table: object
    reward: str = 'risk'
    censoring_rate = 0.0

    def __post_init__(self):
        _alive_value(self.reward)

    @property
    def p(self):
        return len(self.table.modifiers)

    @property
    def name(self):
        return self.table.name

    @property
    def schema(self):
        return self.table.modifiers

    @property
    def horizon(self):
        return _alive_value(self.reward)

    def _stratum_index(self, X):
        lookup = {stratum: s for s, stratum in enumerate(self.table.strata)}
        X = np.atleast_2d(np.asarray(X, dtype=float))
        index = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            stratum = tuple(int(v) for v in row)
            if stratum not in lookup:
                raise ArgumentError(f'stratum {stratum} is not in table {self.table.name}')
            index[i] = lookup[stratum]
        return index

    def _cell_totals(self):
        return self.table.counts.sum(axis=2)

    def draw_covariates(self, n, rng):
        totals = self.table.stratum_totals()
        chosen = rng.choice(len(self.table.strata), size=n, p=totals / totals.sum())
        return np.asarray(self.table.strata, dtype=float).reshape(-1, self.p)[chosen]

    def prob_treated(self, X):
        cells = self._cell_totals()
        stratum_totals = cells.sum(axis=1)
        share = np.divide(
            cells[:, ARMS.index(1)], stratum_totals,
            out=np.full(len(stratum_totals), 0.5), where=stratum_totals > 0,
        )
        return share[self._stratum_index(X)]

    def propensity(self):
        return KnownPropensity(self.prob_treated)

    def risk(self, X, arm):
        cells = self._cell_totals()
        died = self.table.counts[:, :, 0]
        risks = np.divide(died, cells, out=np.zeros(cells.shape), where=cells > 0)
        index = self._stratum_index(X)
        arm_index = np.where(np.asarray(arm) == 1, ARMS.index(1), ARMS.index(-1))
        return risks[index, arm_index]

    def draw_reward(self, X, arm, rng):
        died = rng.random(len(np.atleast_2d(X))) < self.risk(X, arm)
        return np.where(died, 0.0, self.horizon)

    def draw_event_times(self, X, arm, rng):
        return self.draw_reward(X, arm, rng)

    def optimal_rule(self, tie_arm=-1):
        return StratumLookupRule(stratified_optimal_rule(self.table, tie_arm), self.table.modifiers)


def table_scenario(table, reward='risk'):
    return TableScenario(table, reward)
