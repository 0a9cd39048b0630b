from pipeline.base import (
    RulewiseCommand, add_cohort_arguments, add_evaluation_arguments, cohort_overrides, evaluation_overrides,
)
from pipeline.runner import run_pipeline


class Command(RulewiseCommand):
    help = 'Cross-validated value of the comparator and each learner on every covariate'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        add_cohort_arguments(parser)
        add_evaluation_arguments(parser)

    def run(self, *args, **options):
        config = self.run_config(options, **cohort_overrides(options))
        config = evaluation_overrides(config, options)
        result = run_pipeline(config, select_variables=False, command='evaluate')
        self.show_report(result.report)
        self.written(result.files)
        self.stdout.write(self.style.SUCCESS('Done.'))
