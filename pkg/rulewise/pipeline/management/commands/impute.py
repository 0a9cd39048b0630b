from pathlib import Path

from cohort.horizon import censoring_fraction, restrict_horizon
from cohort.ingest import load_cohort, write_cohort
from pipeline.base import RulewiseCommand, add_cohort_arguments, cohort_overrides
from pipeline.runner import outcomes_for, write_manifest
from rist.imputation import run_imputation


class Command(RulewiseCommand):
    help = 'Impute rewards of subjects censored before the horizon with RIST'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        add_cohort_arguments(parser)
        parser.add_argument('--cycles', type=int, help='Imputation cycles')
        parser.add_argument('--trees', type=int, help='Survival trees per forest')

    def run(self, *args, **options):
        config = self.run_config(options, **cohort_overrides(options))
        config.check_input()
        params = config.evaluation.rist.with_overrides(n_imputation_cycles=options['cycles'], n_trees=options['trees'])
        out = Path(config.output_dir)
        horizon = config.horizons[-1]
        outcome = outcomes_for(config)[0]

        cohort = restrict_horizon(load_cohort(config.input, config.schema, outcome=outcome), horizon)
        self.stdout.write(
            f'{outcome} at {horizon:g} days: {int(cohort.needs_imputation.sum())} of {cohort.n} '
            f'subjects censored before the horizon ({100 * censoring_fraction(cohort):.1f}%)'
        )
        run = run_imputation(cohort, params, seed=config.seed)
        path = write_cohort(run.cohort, out / f'imputed_{outcome}_{horizon:g}.csv', config.schema)
        echo = dict(config.as_dict(), rist=params.as_dict())
        manifest = write_manifest(out, 'impute', echo, {'seed': config.seed}, [path])
        self.stdout.write(f'Imputed {run.n_imputed} subjects over {len(run.history)} cycles')
        self.written([path, manifest])
        self.stdout.write(self.style.SUCCESS('Done.'))
