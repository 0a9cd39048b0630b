from dataclasses import asdict, dataclass, field, replace

import numpy as np

from cohort.exceptions import ArgumentError
from forest.params import ForestParams
from forest.propensity import DEFAULT_CLIP
from learners.config import LearnerConfig
from learners.serialization import learner_config_from_dict
from rist.params import RistParams
from valueeval.api.serializers import EvaluationConfigSerializer

Z_95 = 1.96


def mean_interval(values):
    """(mean, se, low, high) with se = sd / sqrt(k) and a normal 95% interval."""
    values = np.asarray(values, dtype=float)
    point = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return point, se, point - Z_95 * se, point + Z_95 * se


@dataclass(frozen=True)
class FoldResult:
    fold: int
    value: float
    n_test: int
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ValueEstimate:
    """Cross-validated value of one learner, in reward units."""
    learner: str
    point: float
    se: float
    ci_low: float
    ci_high: float
    n_folds: int
    fold_values: tuple
    horizon: float | None = None
    fold_signature: tuple = ()
    comparator_difference: tuple | None = None
    diagnostics: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.se < 0:
            raise ArgumentError('standard error must be non-negative')
        if not self.ci_low <= self.point <= self.ci_high:
            raise ArgumentError('point estimate must lie inside its interval')

    @classmethod
    def from_folds(cls, learner, results, horizon=None, fold_signature=()):
        results = sorted(results, key=lambda r: r.fold)
        values = [r.value for r in results]
        point, se, low, high = mean_interval(values)
        return cls(
            learner=learner,
            point=point,
            se=se,
            ci_low=low,
            ci_high=high,
            n_folds=len(values),
            fold_values=tuple(values),
            horizon=horizon,
            fold_signature=tuple(fold_signature),
            diagnostics=tuple(r.diagnostics for r in results),
        )

    def with_difference(self, difference):
        return replace(self, comparator_difference=tuple(difference))

    def as_dict(self):
        data = asdict(self)
        data['fold_values'] = list(self.fold_values)
        data.pop('diagnostics')
        return data


@dataclass(frozen=True)
class EvaluationConfig:
    """Settings shared by every fold of a cross-validated evaluation."""
    k: int = 10
    clip: float = DEFAULT_CLIP
    normalized: bool = True
    forest: ForestParams = field(default_factory=ForestParams)
    rist: RistParams = field(default_factory=RistParams)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    n_jobs: int = 1

    def __post_init__(self):
        if self.k < 2:
            raise ArgumentError(f'k must be at least 2, got {self.k}')
        if not 0 <= self.clip < 0.5:
            raise ArgumentError(f'clip must lie in [0, 0.5), got {self.clip}')

    def with_overrides(self, **overrides):
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self):
        return {
            'k': self.k,
            'clip': self.clip,
            'normalized': self.normalized,
            'forest': self.forest.as_dict(),
            'rist': self.rist.as_dict(),
            'learner': self.learner.as_dict(),
            'n_jobs': self.n_jobs,
        }


def evaluation_config_from_dict(data, base=None):
    serializer = EvaluationConfigSerializer(data=data or {})
    serializer.is_valid(raise_exception=True)
    values = dict(serializer.validated_data)
    base = base or EvaluationConfig()
    if 'forest' in values:
        values['forest'] = base.forest.with_overrides(**values['forest'])
    if 'rist' in values:
        values['rist'] = base.rist.with_overrides(**values['rist'])
    if 'learner' in values:
        values['learner'] = learner_config_from_dict(values['learner'], base.learner)
    return base.with_overrides(**values)
