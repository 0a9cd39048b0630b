from pathlib import Path

from cohort.horizon import restrict_horizon
from cohort.ingest import load_cohort
from pipeline.base import RulewiseCommand, add_cohort_arguments, cohort_overrides
from pipeline.runner import importance_tables, outcomes_for, write_manifest


class Command(RulewiseCommand):
    help = 'Cross-validated permutation importance of every covariate'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        add_cohort_arguments(parser)
        parser.add_argument('--k', type=int, help='Number of folds')

    def run(self, *args, **options):
        config = self.run_config(options, **cohort_overrides(options))
        if options['k'] is not None:
            config = config.with_overrides(evaluation=config.evaluation.with_overrides(k=options['k']))
        config.check_input()
        out = Path(config.output_dir)
        horizon = config.horizons[-1]
        outcome = outcomes_for(config)[0]
        evaluation = config.evaluation

        cohort = restrict_horizon(load_cohort(config.input, config.schema, outcome=outcome), horizon)
        per_fold, aggregate = importance_tables(cohort, evaluation.k, config.seed, evaluation.forest, evaluation.rist)

        self.stdout.write(self.style.MIGRATE_HEADING(f'Importance of {cohort.p} covariates over {evaluation.k} folds'))
        for row in aggregate.itertuples():
            self.stdout.write(
                f'  {row.aggregate_rank:>3}  {row.covariate:<24} mean rank {row.mean_rank:6.2f}  '
                f'importance {row.mean_importance:.4g} (se {row.mean_importance_se:.2g})'
            )

        out.mkdir(parents=True, exist_ok=True)
        files = [out / 'importance.csv', out / 'importance_folds.csv']
        aggregate.to_csv(files[0], index=False, float_format='%.6f')
        per_fold.to_csv(files[1], index=False, float_format='%.6f')
        files.append(write_manifest(out, 'importance', config.as_dict(), {'seed': config.seed}, files))
        self.written(files)
        self.stdout.write(self.style.SUCCESS('Done.'))
