from dataclasses import dataclass, field

import numpy as np

from cohort.exceptions import ArgumentError
from cohort.models import ARMS

DEFAULT_ARM_LABELS = {-1: 'furosemide', 1: 'torsemide'}


def arm_index(arm):
    return ARMS.index(arm)


@dataclass(frozen=True, eq=False)
class StratifiedTable:
    """Died/alive counts per (stratum, arm).

    A stratum is a tuple of 0/1 values, one per named binary modifier.
    ``counts[s, a]`` holds (died, alive) for stratum ``s`` and arm ``ARMS[a]``.
    """
    modifiers: tuple
    strata: tuple
    counts: np.ndarray = field(repr=False)
    arm_labels: dict = field(default_factory=lambda: dict(DEFAULT_ARM_LABELS))
    name: str = ''

    def __post_init__(self):
        strata = tuple(tuple(int(v) for v in stratum) for stratum in self.strata)
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        counts.setflags(write=False)
        object.__setattr__(self, 'modifiers', tuple(self.modifiers))
        object.__setattr__(self, 'strata', strata)
        object.__setattr__(self, 'counts', counts)
        if counts.shape != (len(strata), 2, 2):
            raise ArgumentError(f'counts must have shape ({len(strata)}, 2, 2), got {counts.shape}')
        if np.any(counts < 0):
            raise ArgumentError('counts must be non-negative')
        if len(set(strata)) != len(strata):
            raise ArgumentError('strata must be unique')
        for stratum in strata:
            if len(stratum) != len(self.modifiers) or any(v not in (0, 1) for v in stratum):
                raise ArgumentError(f'stratum {stratum} does not match modifiers {self.modifiers}')

    def cell(self, stratum, arm):
        died, alive = self.counts[self.strata.index(stratum), arm_index(arm)]
        return int(died), int(alive)

    def stratum_totals(self):
        return self.counts.sum(axis=(1, 2))

    @property
    def total(self):
        return int(self.counts.sum())

    def arm_total(self, arm):
        return int(self.counts[:, arm_index(arm)].sum())

    def describe(self, stratum):
        if not self.modifiers:
            return 'all'
        return ', '.join(
            name if value else f'no {name}' for name, value in zip(self.modifiers, stratum)
        )

    def arm_label(self, arm):
        return self.arm_labels.get(arm, f'{arm:+d}')

    def scaled(self, factor):
        if factor <= 0:
            raise ArgumentError('scale factor must be positive')
        return StratifiedTable(self.modifiers, self.strata, self.counts * int(factor), self.arm_labels, self.name)


@dataclass(frozen=True)
class StratumRule:
    """Arm assignment for every stratum of a table."""
    assignments: tuple

    @classmethod
    def from_mapping(cls, mapping):
        for stratum, arm in mapping.items():
            if arm not in ARMS:
                raise ArgumentError(f'stratum {stratum} assigned to invalid arm {arm}')
        return cls(tuple(sorted((tuple(s), int(a)) for s, a in mapping.items())))

    @classmethod
    def universal(cls, table, arm):
        return cls.from_mapping({stratum: arm for stratum in table.strata})

    def as_dict(self):
        return dict(self.assignments)

    def __getitem__(self, stratum):
        return self.as_dict()[tuple(stratum)]

    def covers(self, table):
        assigned = self.as_dict()
        return all(stratum in assigned for stratum in table.strata)
