import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from cohort.exceptions import ArgumentError

ARMS = (-1, 1)


def _frozen(values, dtype):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Subject:
    """One patient: covariates, the arm received and the observed follow-up."""
    id: str
    covariates: tuple
    treatment: int
    time: float
    event: bool
    reward: float | None = None
    needs_imputation: bool = False


@dataclass(frozen=True, eq=False)
class Cohort:
    """Column-oriented, immutable estimation dataset.

    ``reward`` holds NaN until the cohort is restricted to a horizon (or
    imputed); ``needs_imputation`` flags subjects censored before the horizon.
    """
    schema: tuple
    ids: np.ndarray
    covariates: np.ndarray
    treatment: np.ndarray
    time: np.ndarray
    event: np.ndarray
    reward: np.ndarray = None
    needs_imputation: np.ndarray = None
    horizon: float | None = None
    outcome: str = 'days_alive'

    def __post_init__(self):
        schema = tuple(str(name) for name in self.schema)
        covariates = np.asarray(self.covariates, dtype=float)
        n = len(self.treatment)
        if covariates.ndim == 1 and n:
            covariates = covariates.reshape(n, -1)
        if covariates.size == 0:
            covariates = covariates.reshape(n, len(schema))
        object.__setattr__(self, 'schema', schema)
        object.__setattr__(self, 'ids', _frozen([str(i) for i in self.ids], object))
        object.__setattr__(self, 'covariates', _frozen(covariates, float))
        object.__setattr__(self, 'treatment', _frozen(self.treatment, np.int64))
        object.__setattr__(self, 'time', _frozen(self.time, float))
        object.__setattr__(self, 'event', _frozen(self.event, bool))
        reward = np.full(n, np.nan) if self.reward is None else self.reward
        object.__setattr__(self, 'reward', _frozen(reward, float))
        flags = np.zeros(n, dtype=bool) if self.needs_imputation is None else self.needs_imputation
        object.__setattr__(self, 'needs_imputation', _frozen(flags, bool))
        if self.horizon is not None:
            object.__setattr__(self, 'horizon', float(self.horizon))
        self._validate()

    def _validate(self):
        n = self.n
        for name in ('ids', 'time', 'event', 'reward', 'needs_imputation'):
            if len(getattr(self, name)) != n:
                raise ArgumentError(f'{name} has {len(getattr(self, name))} entries, expected {n}')
        if self.covariates.shape != (n, len(self.schema)):
            raise ArgumentError(
                f'covariate matrix has shape {self.covariates.shape}, '
                f'expected ({n}, {len(self.schema)})'
            )
        if not np.all(np.isin(self.treatment, ARMS)):
            raise ArgumentError('treatment must be coded -1 or +1')
        if not np.all(np.isfinite(self.time)) or np.any(self.time < 0):
            raise ArgumentError('follow-up time must be finite and non-negative')
        if not np.all(np.isfinite(self.covariates)):
            raise ArgumentError('covariates must not contain missing values')
        if self.horizon is not None and self.horizon <= 0:
            raise ArgumentError('horizon must be positive')
        known = np.isfinite(self.reward)
        if np.any(self.reward[known] < 0):
            raise ArgumentError('reward must be non-negative')
        if self.horizon is not None and np.any(self.reward[known] > self.horizon):
            raise ArgumentError('reward exceeds the horizon')

    @classmethod
    def from_subjects(cls, schema, subjects, horizon=None, outcome='days_alive'):
        subjects = list(subjects)
        p = len(schema)
        return cls(
            schema=tuple(schema),
            ids=[s.id for s in subjects],
            covariates=np.array([s.covariates for s in subjects], dtype=float).reshape(len(subjects), p),
            treatment=[s.treatment for s in subjects],
            time=[s.time for s in subjects],
            event=[s.event for s in subjects],
            reward=[np.nan if s.reward is None else s.reward for s in subjects],
            needs_imputation=[s.needs_imputation for s in subjects],
            horizon=horizon,
            outcome=outcome,
        )

    @property
    def n(self):
        return len(self.treatment)

    @property
    def p(self):
        return len(self.schema)

    @property
    def X(self):
        return self.covariates

    @property
    def subjects(self):
        return [
            Subject(
                id=self.ids[i],
                covariates=tuple(self.covariates[i]),
                treatment=int(self.treatment[i]),
                time=float(self.time[i]),
                event=bool(self.event[i]),
                reward=None if np.isnan(self.reward[i]) else float(self.reward[i]),
                needs_imputation=bool(self.needs_imputation[i]),
            )
            for i in range(self.n)
        ]

    @property
    def has_complete_rewards(self):
        return bool(np.all(np.isfinite(self.reward)))

    def arm_counts(self):
        return {arm: int(np.sum(self.treatment == arm)) for arm in ARMS}

    def require_both_arms(self):
        counts = self.arm_counts()
        empty = [arm for arm, count in counts.items() if count == 0]
        if empty:
            raise ArgumentError(f'treatment arm {empty[0]:+d} is empty; both arms are required')

    def require_complete_rewards(self):
        if not self.has_complete_rewards:
            missing = int(np.sum(~np.isfinite(self.reward)))
            raise ArgumentError(
                f'{missing} subjects have no reward; restrict to a horizon and impute first'
            )

    def replace(self, **changes):
        return replace(self, **changes)

    def subset(self, indices):
        indices = np.asarray(indices)
        return replace(
            self,
            ids=self.ids[indices],
            covariates=self.covariates[indices],
            treatment=self.treatment[indices],
            time=self.time[indices],
            event=self.event[indices],
            reward=self.reward[indices],
            needs_imputation=self.needs_imputation[indices],
        )

    def select(self, names):
        """Restrict the covariates to ``names``, in the order given."""
        missing = [name for name in names if name not in self.schema]
        if missing:
            raise ArgumentError(f"unknown covariate '{missing[0]}'")
        columns = [self.schema.index(name) for name in names]
        return replace(self, schema=tuple(names), covariates=self.covariates[:, columns])

    def fingerprint(self):
        digest = hashlib.sha256()
        digest.update(self.covariates.tobytes())
        digest.update(self.treatment.tobytes())
        return digest.hexdigest()

    def equals(self, other):
        return (
            self.schema == other.schema
            and self.horizon == other.horizon
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.covariates, other.covariates)
            and np.array_equal(self.treatment, other.treatment)
            and np.array_equal(self.time, other.time)
            and np.array_equal(self.event, other.event)
            and np.array_equal(self.reward, other.reward, equal_nan=True)
            and np.array_equal(self.needs_imputation, other.needs_imputation)
        )


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    k: int
    assignment: np.ndarray = field(repr=False)
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, 'assignment', _frozen(self.assignment, np.int64))
        if self.k < 1 or np.any(self.assignment < 0) or np.any(self.assignment >= self.k):
            raise ArgumentError('fold indices must lie in [0, k)')

    def test_indices(self, fold):
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold):
        return np.flatnonzero(self.assignment != fold)

    def sizes(self):
        return np.bincount(self.assignment, minlength=self.k)

    def signature(self):
        return (self.k, len(self.assignment), hashlib.sha256(self.assignment.tobytes()).hexdigest())

    def __iter__(self):
        for fold in range(self.k):
            yield fold, self.train_indices(fold), self.test_indices(fold)
