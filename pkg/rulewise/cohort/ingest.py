import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from cohort.api.serializers import SchemaConfigSerializer
from cohort.exceptions import CohortInputError, CohortValueError, SchemaError
from cohort.models import Cohort

logger = logging.getLogger(__name__)

RESERVED_COLUMNS = ('reward', 'horizon')


@dataclass(frozen=True)
class SchemaConfig:
    id_column: str = 'id'
    treatment_column: str = 'treatment'
    treatment_labels: dict = field(default_factory=lambda: {'-1': -1, '1': 1, '+1': 1})
    outcomes: dict = field(default_factory=lambda: {'days_alive': ('time', 'event')})
    covariates: tuple | None = None
    missing: str = 'reject-file'

    @classmethod
    def from_dict(cls, data):
        serializer = SchemaConfigSerializer(data=data or {})
        serializer.is_valid(raise_exception=True)
        values = dict(serializer.validated_data)
        values['outcomes'] = {
            name: (columns['time'], columns['event'])
            for name, columns in values['outcomes'].items()
        }
        if values.get('covariates') is not None:
            values['covariates'] = tuple(values['covariates'])
        return cls(**values)

    @classmethod
    def from_file(cls, path):
        with open(path) as handle:
            return cls.from_dict(json.load(handle))

    @property
    def default_outcome(self):
        return next(iter(self.outcomes))

    def label_for(self, arm):
        for label, value in self.treatment_labels.items():
            if value == arm:
                return label
        raise KeyError(arm)

    def outcome_columns(self):
        return {column for pair in self.outcomes.values() for column in pair}


def _read_frame(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'Cohort file not found: {path}')
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as exc:
        raise CohortInputError(f'Cohort file {path} is empty') from exc


def _to_float(text):
    try:
        return float(text)
    except ValueError:
        return np.nan


def _numeric(frame, column):
    # float() parses the shortest repr exactly, so written cohorts reload bit-for-bit
    return np.array([_to_float(text) for text in frame[column]], dtype=float)


def load_cohort(path, schema_config=None, outcome=None):
    """Read and validate a cohort CSV.

    Treatment labels are mapped onto -1/+1 by ``schema_config``. Rows with
    missing or non-numeric covariates reject the whole file unless the
    config's ``missing`` policy is ``drop-row``.
    """
    config = schema_config or SchemaConfig()
    outcome = outcome or config.default_outcome
    if outcome not in config.outcomes:
        raise SchemaError(outcome, source='schema outcomes')
    time_column, event_column = config.outcomes[outcome]

    frame = _read_frame(path)
    if frame.empty:
        raise CohortInputError(f'Cohort file {path} has no data rows')
    for column in (config.id_column, config.treatment_column, time_column, event_column):
        if column not in frame.columns:
            raise SchemaError(column, source=str(path))

    if config.covariates is not None:
        schema = list(config.covariates)
        for column in schema:
            if column not in frame.columns:
                raise SchemaError(column, source=str(path))
    else:
        taken = {config.id_column, config.treatment_column, *config.outcome_columns(), *RESERVED_COLUMNS}
        schema = [column for column in frame.columns if column not in taken]

    labels = frame[config.treatment_column].str.strip()
    treatment = labels.map(config.treatment_labels)
    covariates = np.column_stack([_numeric(frame, c) for c in schema]) if schema else np.empty((len(frame), 0))
    time = _numeric(frame, time_column)
    event = _numeric(frame, event_column)

    bad_covariates = ~np.all(np.isfinite(covariates), axis=1)
    if bad_covariates.any():
        rows = np.flatnonzero(bad_covariates)
        if config.missing == 'reject-file':
            row = int(rows[0])
            column = schema[int(np.flatnonzero(~np.isfinite(covariates[row]))[0])]
            raise CohortValueError('missing or non-numeric covariate', row=row, column=column)
        logger.warning('Dropping %d rows with missing covariates from %s', len(rows), path)

    keep = ~bad_covariates
    unmapped = keep & treatment.isna().to_numpy()
    if unmapped.any():
        row = int(np.flatnonzero(unmapped)[0])
        raise CohortValueError(
            f"treatment value '{labels.iloc[row]}' has no arm mapping",
            row=row, column=config.treatment_column,
        )
    bad_time = keep & (~np.isfinite(time) | (time < 0))
    if bad_time.any():
        raise CohortValueError('time must be a non-negative number', row=int(np.flatnonzero(bad_time)[0]), column=time_column)
    bad_event = keep & ~np.isin(event, (0.0, 1.0))
    if bad_event.any():
        raise CohortValueError('event must be 0 or 1', row=int(np.flatnonzero(bad_event)[0]), column=event_column)

    reward = _numeric(frame, 'reward') if 'reward' in frame.columns else np.full(len(frame), np.nan)
    horizon = None
    if 'horizon' in frame.columns:
        horizons = np.unique(_numeric(frame, 'horizon'))
        if len(horizons) != 1 or not np.isfinite(horizons[0]):
            raise CohortValueError('horizon column must hold one value', column='horizon')
        horizon = float(horizons[0])

    time, event, reward = time[keep], event[keep].astype(bool), reward[keep]
    needs_imputation = np.zeros(len(time), dtype=bool)
    if horizon is not None:
        needs_imputation = ~np.isfinite(reward) & ~event & (time < horizon)

    cohort = Cohort(
        schema=tuple(schema),
        ids=frame[config.id_column].to_numpy()[keep],
        covariates=covariates[keep],
        treatment=treatment.to_numpy()[keep].astype(np.int64),
        time=time,
        event=event,
        reward=reward,
        needs_imputation=needs_imputation,
        horizon=horizon,
        outcome=outcome,
    )
    logger.info('Loaded %d subjects (%d covariates) from %s', cohort.n, cohort.p, path)
    return cohort


def cohort_frame(cohort, schema_config=None):
    config = schema_config or SchemaConfig()
    time_column, event_column = config.outcomes.get(cohort.outcome, ('time', 'event'))
    columns = {
        config.id_column: cohort.ids,
        config.treatment_column: [config.label_for(int(arm)) for arm in cohort.treatment],
        time_column: cohort.time,
        event_column: cohort.event.astype(int),
    }
    for j, name in enumerate(cohort.schema):
        columns[name] = cohort.covariates[:, j]
    if cohort.horizon is not None:
        columns['reward'] = cohort.reward
        columns['horizon'] = np.full(cohort.n, cohort.horizon)
    return pd.DataFrame(columns)


def write_cohort(cohort, path, schema_config=None):
    """Write ``cohort`` so that ``load_cohort`` returns an identical cohort."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cohort_frame(cohort, schema_config).to_csv(path, index=False, float_format='%.17g', na_rep='')
    return path
