from pathlib import Path

import numpy as np
import pandas as pd

from cohort.exceptions import CohortInputError, CohortValueError, SchemaError
from cohort.models import ARMS
from toystrata.models import DEFAULT_ARM_LABELS, StratifiedTable, arm_index

ARM_ALIASES = {'-1': -1, '1': 1, '+1': 1}


def load_table(path, arm_labels=None):
    """Read a stratified table CSV: modifier columns..., arm, died, alive.

    Several rows for the same (stratum, arm) are summed.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'Table file not found: {path}')
    labels = dict(arm_labels or DEFAULT_ARM_LABELS)
    lookup = {**ARM_ALIASES, **{str(label).lower(): arm for arm, label in labels.items()}}
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as exc:
        raise CohortInputError(f'Table file {path} is empty') from exc
    if frame.empty:
        raise CohortInputError(f'Table file {path} has no rows')
    for column in ('arm', 'died', 'alive'):
        if column not in frame.columns:
            raise SchemaError(column, source=str(path))
    modifiers = tuple(c for c in frame.columns if c not in ('arm', 'died', 'alive'))

    cells = {}
    for row, record in enumerate(frame.to_dict('records')):
        arm = lookup.get(record['arm'].strip().lower())
        if arm is None:
            raise CohortValueError(f"arm '{record['arm']}' is not a known arm label", row=row, column='arm')
        try:
            stratum = tuple(int(record[m]) for m in modifiers)
            died, alive = int(record['died']), int(record['alive'])
        except ValueError as exc:
            raise CohortValueError(f'non-integer count or modifier ({exc})', row=row) from exc
        if any(v not in (0, 1) for v in stratum):
            raise CohortValueError('modifier values must be 0 or 1', row=row)
        counts = cells.setdefault(stratum, np.zeros((2, 2), dtype=np.int64))
        counts[arm_index(arm)] += (died, alive)

    strata = tuple(sorted(cells, reverse=True))
    return StratifiedTable(
        modifiers=modifiers,
        strata=strata,
        counts=[cells[s] for s in strata],
        arm_labels=labels,
        name=path.stem,
    )


def write_table(table, path):
    rows = []
    for s, stratum in enumerate(table.strata):
        for a, arm in enumerate(ARMS):
            died, alive = table.counts[s, a]
            rows.append({
                **dict(zip(table.modifiers, stratum)),
                'arm': table.arm_label(arm),
                'died': int(died),
                'alive': int(alive),
            })
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=[*table.modifiers, 'arm', 'died', 'alive']).to_csv(path, index=False)
    return path
