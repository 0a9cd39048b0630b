from pathlib import Path

from learners.fitting import LEARNERS
from learners.serialization import save_rule
from pipeline.base import RulewiseCommand, add_cohort_arguments, cohort_overrides
from pipeline.runner import fit_rule, write_manifest


class Command(RulewiseCommand):
    help = 'Fit one treatment rule on the whole cohort and save it as JSON'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        add_cohort_arguments(parser)
        parser.add_argument('--learner', default='earl', help=f'One of {", ".join(LEARNERS)} or universal:+1 / universal:-1')
        parser.add_argument('--select', action='store_true', help='Keep only the top covariates by importance')
        parser.add_argument('--top-m', type=int)

    def run(self, *args, **options):
        config = self.run_config(options, top_m=options['top_m'], **cohort_overrides(options))
        horizon = config.horizons[-1]
        rule, covariates = fit_rule(config, options['learner'], horizon=horizon, select_variables=options['select'])

        out = Path(config.output_dir)
        rule_path = save_rule(rule, out / 'rule.json', covariates)
        seeds = {'seed': config.seed}
        manifest = write_manifest(out, 'fit', dict(config.as_dict(), learner=options['learner']), seeds, [rule_path])
        self.stdout.write(f'{rule.variant} rule on {len(covariates)} covariates at {horizon:g} days')
        self.written([rule_path, manifest])
        self.stdout.write(self.style.SUCCESS('Done.'))
