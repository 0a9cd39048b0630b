import json
from pathlib import Path

from cohort.exceptions import ArgumentError
from cohort.ingest import write_cohort
from pipeline.base import RulewiseCommand
from pipeline.runner import write_manifest
from synthgen.constants import TABLE_REWARDS
from synthgen.scenario import ScenarioSpec, generate_scenario
from synthgen.tables import generate_from_table
from toystrata.datasets import BUILTIN_TABLES
from toystrata.tableio import load_table


class Command(RulewiseCommand):
    help = 'Simulate a cohort from a scenario spec or reconstruct one from a toy table'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--spec', help='JSON scenario spec')
        source.add_argument('--table', help=f'One of {", ".join(BUILTIN_TABLES)} or a table CSV path')
        parser.add_argument('--n', type=int, help='Number of subjects (scenario specs only)')
        parser.add_argument('--reward', choices=TABLE_REWARDS, default='days', help='Reward scale for table cohorts')
        parser.add_argument('--mc-n', type=int, default=200_000, help='Monte Carlo draws for the truth values')

    def run(self, *args, **options):
        config = self.run_config(options)
        out = Path(options['out']) if options.get('out') else Path(config.output_dir) / 'cohort.csv'
        files = []
        if options['spec']:
            if options['n'] is None:
                raise ArgumentError('--n is required with --spec')
            spec = ScenarioSpec.from_file(options['spec'])
            cohort, truth = generate_scenario(spec, options['n'], seed=config.seed, mc_n=options['mc_n'])
            truth_path = out.with_name(f'{out.stem}_truth.json')
            files.append(write_cohort(cohort, out))
            truth_path.write_text(json.dumps(truth.as_dict(), indent=2))
            files.append(truth_path)
            self.stdout.write(
                f'Oracle value {truth.optimal_value:.2f} (se {truth.optimal_se:.3f}), '
                f'best universal {truth.best_universal:.2f}, gap {truth.gap:.2f}'
            )
            echo = {'spec': spec.as_dict(), 'n': options['n'], 'mc_n': options['mc_n']}
        else:
            name = options['table']
            table = BUILTIN_TABLES[name]() if name in BUILTIN_TABLES else load_table(name)
            cohort = generate_from_table(table, seed=config.seed, reward=options['reward'])
            files.append(write_cohort(cohort, out))
            echo = {'table': name, 'reward': options['reward']}

        self.stdout.write(f'Simulated {cohort.n} subjects, {int(cohort.needs_imputation.sum())} censored before the horizon')
        files.append(write_manifest(out.parent, 'simulate', echo, {'seed': config.seed}, files))
        self.written(files)
        self.stdout.write(self.style.SUCCESS('Done.'))
