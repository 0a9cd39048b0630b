from dataclasses import asdict, dataclass

from cohort.exceptions import ArgumentError


@dataclass(frozen=True)
class RistParams:
    n_trees: int = 50
    n_imputation_cycles: int = 2
    min_events_per_leaf: int = 1
    n_random_splits: int = 10
    min_leaf: int = 6
    mtry: int | None = None
    subsample: float = 0.5
    horizon: float | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ArgumentError('n_trees must be at least 1')
        if self.n_imputation_cycles < 1:
            raise ArgumentError('n_imputation_cycles must be at least 1')
        if self.min_events_per_leaf < 1:
            raise ArgumentError('min_events_per_leaf must be at least 1')
        if self.n_random_splits < 1:
            raise ArgumentError('n_random_splits must be at least 1')
        if self.min_leaf < 1:
            raise ArgumentError('min_leaf must be at least 1')
        if self.mtry is not None and self.mtry < 1:
            raise ArgumentError('mtry must be at least 1')
        if not 0 < self.subsample <= 1:
            raise ArgumentError('subsample must lie in (0, 1]')
        if self.horizon is not None and self.horizon <= 0:
            raise ArgumentError('horizon must be positive')

    def resolve_mtry(self, p):
        """Every feature is a split candidate unless set explicitly."""
        mtry = p if self.mtry is None else self.mtry
        if not 1 <= mtry <= p:
            raise ArgumentError(f'mtry={mtry} must lie in [1, {p}]')
        return mtry

    def with_overrides(self, **overrides):
        values = asdict(self)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return RistParams(**values)

    def as_dict(self):
        return asdict(self)
