import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from django.conf import settings

from cohort.exceptions import ArgumentError
from cohort.ingest import SchemaConfig
from learners.fitting import parse_learner
from learners.serialization import learner_config_from_dict
from pipeline.api.serializers import RunConfigSerializer
from valueeval.models import EvaluationConfig

DEFAULT_LEARNERS = ('rf', 'rwl', 'earl')
DEFAULT_TOP_M = 10


def _defaults():
    return settings.RULEWISE


@dataclass(frozen=True)
class RunConfig:
    """One pipeline invocation: input, horizons, learners, folds, seeds and overrides."""
    input: str | None = None
    schema: SchemaConfig = field(default_factory=SchemaConfig)
    outcomes: tuple | None = None
    horizons: tuple = field(default_factory=lambda: tuple(_defaults()['HORIZONS']))
    learners: tuple = DEFAULT_LEARNERS
    comparator: str = 'zero'
    seed: int = field(default_factory=lambda: _defaults()['SEED'])
    output_dir: str = field(default_factory=lambda: _defaults()['OUTPUT_DIR'])
    select_variables: bool = True
    top_m: int = DEFAULT_TOP_M
    evaluation: EvaluationConfig = field(default_factory=lambda: EvaluationConfig(
        k=_defaults()['FOLDS'], clip=_defaults()['CLIP'], n_jobs=_defaults()['N_JOBS'],
    ))

    def __post_init__(self):
        object.__setattr__(self, 'horizons', tuple(float(h) for h in self.horizons))
        object.__setattr__(self, 'learners', tuple(parse_learner(spec) for spec in self.learners))
        object.__setattr__(self, 'comparator', parse_learner(self.comparator))
        if self.outcomes is not None:
            object.__setattr__(self, 'outcomes', tuple(self.outcomes))
        if not self.horizons or any(h <= 0 for h in self.horizons):
            raise ArgumentError('horizons must be positive')
        if self.top_m < 1:
            raise ArgumentError('top_m must be at least 1')

    @property
    def k(self):
        return self.evaluation.k

    @property
    def rules(self):
        """Comparator first, then every learner not equal to it."""
        return (self.comparator, *(spec for spec in self.learners if spec != self.comparator))

    def check_input(self):
        if self.input is None:
            raise ArgumentError('no input cohort given')
        if not Path(self.input).exists():
            raise FileNotFoundError(f'Cohort file not found: {self.input}')

    def with_overrides(self, **overrides):
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_dict(cls, data, base=None):
        serializer = RunConfigSerializer(data=data or {})
        serializer.is_valid(raise_exception=True)
        values = dict(serializer.validated_data)
        base = base or cls()

        evaluation = {key: values.pop(key) for key in ('k', 'normalized', 'clip', 'n_jobs') if key in values}
        if 'forest' in values:
            evaluation['forest'] = base.evaluation.forest.with_overrides(**values.pop('forest'))
        if 'rist' in values:
            evaluation['rist'] = base.evaluation.rist.with_overrides(**values.pop('rist'))
        if 'learner' in values:
            evaluation['learner'] = learner_config_from_dict(values.pop('learner'), base.evaluation.learner)
        values['evaluation'] = base.evaluation.with_overrides(**evaluation)

        schema_path = values.pop('schema_path', None)
        if schema_path is not None:
            values['schema'] = SchemaConfig.from_file(schema_path)
        elif 'schema' in values:
            values['schema'] = SchemaConfig.from_dict(values['schema'])
        return base.with_overrides(**values)

    @classmethod
    def from_file(cls, path, base=None):
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f'Config file not found: {path}')
        with open(path) as handle:
            return cls.from_dict(json.load(handle), base)

    def as_dict(self):
        return {
            'input': self.input,
            'schema': {
                'id_column': self.schema.id_column,
                'treatment_column': self.schema.treatment_column,
                'treatment_labels': dict(self.schema.treatment_labels),
                'outcomes': {name: list(columns) for name, columns in self.schema.outcomes.items()},
                'covariates': list(self.schema.covariates) if self.schema.covariates else None,
                'missing': self.schema.missing,
            },
            'outcomes': list(self.outcomes) if self.outcomes else None,
            'horizons': list(self.horizons),
            'learners': list(self.learners),
            'comparator': self.comparator,
            'seed': self.seed,
            'output_dir': self.output_dir,
            'select_variables': self.select_variables,
            'top_m': self.top_m,
            'evaluation': self.evaluation.as_dict(),
        }
