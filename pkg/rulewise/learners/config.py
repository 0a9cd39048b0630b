from dataclasses import asdict, dataclass, field, replace

import numpy as np

from cohort.exceptions import ArgumentError
from cohort.models import ARMS
from forest.params import ForestParams

SURROGATES = ('ramp', 'hinge')
OUTCOME_MODELS = ('forest', 'linear')
DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-3, 1, 5))


@dataclass(frozen=True)
class LearnerConfig:
    surrogate: str = 'ramp'
    lam: float | None = None
    lam_grid: tuple = DEFAULT_LAMBDA_GRID
    inner_folds: int = 5
    max_dc_iter: int = 20
    tol: float = 1e-6
    subgradient_iter: int = 400
    max_iter: int = 500
    outcome_model: str = 'forest'
    forest: ForestParams = field(default_factory=ForestParams)
    tie_arm: int = -1

    def __post_init__(self):
        if self.surrogate not in SURROGATES:
            raise ArgumentError(f"surrogate must be one of {SURROGATES}, got '{self.surrogate}'")
        if self.outcome_model not in OUTCOME_MODELS:
            raise ArgumentError(f"outcome_model must be one of {OUTCOME_MODELS}, got '{self.outcome_model}'")
        if self.lam is not None and self.lam <= 0:
            raise ArgumentError('lam must be positive')
        if not self.lam_grid or any(v <= 0 for v in self.lam_grid):
            raise ArgumentError('lam_grid must hold positive values')
        if self.inner_folds < 2:
            raise ArgumentError('inner_folds must be at least 2')
        for name in ('max_dc_iter', 'subgradient_iter', 'max_iter'):
            if getattr(self, name) < 1:
                raise ArgumentError(f'{name} must be at least 1')
        if self.tol <= 0:
            raise ArgumentError('tol must be positive')
        if self.tie_arm not in ARMS:
            raise ArgumentError('tie_arm must be -1 or +1')
        object.__setattr__(self, 'lam_grid', tuple(float(v) for v in self.lam_grid))

    def with_overrides(self, **overrides):
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self):
        values = asdict(self)
        values['lam_grid'] = list(self.lam_grid)
        return values
