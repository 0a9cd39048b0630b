import math
from dataclasses import asdict, dataclass

from cohort.exceptions import ArgumentError

CLASSIFICATION = 'classification'
REGRESSION = 'regression'
MODES = (CLASSIFICATION, REGRESSION)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    mtry: int | None = None
    min_leaf: int = 5
    max_depth: int | None = None
    sample_fraction: float = 1.0
    bootstrap: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ArgumentError('n_trees must be at least 1')
        if self.min_leaf < 1:
            raise ArgumentError('min_leaf must be at least 1')
        if self.mtry is not None and self.mtry < 1:
            raise ArgumentError('mtry must be at least 1')
        if self.max_depth is not None and self.max_depth < 0:
            raise ArgumentError('max_depth must be non-negative')
        if not 0 < self.sample_fraction <= 1:
            raise ArgumentError('sample_fraction must lie in (0, 1]')

    def resolve_mtry(self, p):
        """A third of the covariates per split unless set explicitly."""
        mtry = self.mtry if self.mtry is not None else math.ceil(p / 3)
        if not 1 <= mtry <= p:
            raise ArgumentError(f'mtry={mtry} must lie in [1, {p}]')
        return mtry

    def with_overrides(self, **overrides):
        values = asdict(self)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return ForestParams(**values)

    def as_dict(self):
        return asdict(self)
