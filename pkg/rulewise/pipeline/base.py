from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from cohort.exceptions import RulewiseError
from cohort.ingest import SchemaConfig
from pipeline.config import RunConfig
from valueeval.report import format_table


def _validation_message(detail):
    if isinstance(detail, dict):
        return '; '.join(f'{key}: {_validation_message(value)}' for key, value in detail.items())
    if isinstance(detail, list):
        return ', '.join(_validation_message(item) for item in detail)
    return str(detail)


class RulewiseCommand(BaseCommand):
    """Management command with the shared ``--seed``, ``--out`` and ``--config`` flags.

    Subclasses implement ``run``; library errors become ``CommandError``.
    """

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, help='Base random seed')
        parser.add_argument('--out', help='Output directory or file')
        parser.add_argument('--config', help='JSON run configuration')

    def run_config(self, options, **overrides):
        """RunConfig from ``--config``, then command-line values on top."""
        config = RunConfig.from_file(options['config']) if options.get('config') else RunConfig()
        return config.with_overrides(seed=options.get('seed'), output_dir=options.get('out'), **overrides)

    def handle(self, *args, **options):
        try:
            return self.run(*args, **options)
        except ValidationError as exc:
            raise CommandError(f'Invalid configuration: {_validation_message(exc.detail)}')
        except (RulewiseError, ValueError, FileNotFoundError) as exc:
            raise CommandError(str(exc))

    def run(self, *args, **options):
        raise NotImplementedError

    def show_report(self, report):
        self.stdout.write(format_table(report))

    def written(self, paths):
        for path in paths:
            self.stdout.write(f'  Wrote {path}')


def add_cohort_arguments(parser, horizons=True):
    parser.add_argument('input', nargs='?', help='Cohort CSV (defaults to the config input)')
    parser.add_argument('--schema', help='JSON schema config for the cohort columns')
    parser.add_argument('--outcome', action='append', help='Outcome to analyse; repeat for several')
    if horizons:
        parser.add_argument('--horizon', type=float, action='append', help='Horizon in days; repeat for several')


def cohort_overrides(options):
    """RunConfig fields given on the command line."""
    return {
        'input': options.get('input'),
        'schema': SchemaConfig.from_file(options['schema']) if options.get('schema') else None,
        'outcomes': tuple(options['outcome']) if options.get('outcome') else None,
        'horizons': tuple(options['horizon']) if options.get('horizon') else None,
    }


def add_evaluation_arguments(parser):
    parser.add_argument('--learners', help='Comma-separated learners, e.g. rf,rwl,earl')
    parser.add_argument('--comparator', help="Rule the learners are compared with (default 'zero')")
    parser.add_argument('--k', type=int, help='Number of cross-validation folds')
    parser.add_argument('--n-jobs', type=int, help='Folds evaluated in parallel')


def evaluation_overrides(config, options):
    """``config`` with the learner and fold flags applied."""
    learners = options.get('learners')
    config = config.with_overrides(
        learners=tuple(spec for spec in learners.split(',') if spec.strip()) if learners else None,
        comparator=options.get('comparator'),
    )
    evaluation = config.evaluation.with_overrides(k=options.get('k'), n_jobs=options.get('n_jobs'))
    return config.with_overrides(evaluation=evaluation)
