from pipeline.base import (
    RulewiseCommand, add_cohort_arguments, add_evaluation_arguments, cohort_overrides, evaluation_overrides,
)
from pipeline.runner import run_pipeline


class Command(RulewiseCommand):
    help = 'Variable selection, cross-validated evaluation and the report for each outcome and horizon'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        add_cohort_arguments(parser)
        add_evaluation_arguments(parser)
        parser.add_argument('--no-select', action='store_true', help='Evaluate on every covariate')
        parser.add_argument('--top-m', type=int, help='Covariates kept by variable selection')

    def run(self, *args, **options):
        config = self.run_config(options, top_m=options['top_m'], **cohort_overrides(options))
        config = evaluation_overrides(config, options)
        select = False if options['no_select'] else None
        result = run_pipeline(config, select_variables=select, command='pipeline')
        for (outcome, horizon), keep in result.selected.items():
            self.stdout.write(f'{outcome} at {horizon:g} days: kept {", ".join(keep)}')
        self.show_report(result.report)
        self.written(result.files)
        self.stdout.write(self.style.SUCCESS('Done.'))
