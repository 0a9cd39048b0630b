import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.conf import settings
from django.test import SimpleTestCase, override_settings

from cohort.exceptions import ArgumentError
from cohort.ingest import load_cohort, write_cohort
from cohort.models import Cohort
from learners.serialization import load_rule
from pipeline.config import RunConfig
from pipeline.runner import MANIFEST
from synthgen.scenario import ScenarioFunction, ScenarioSpec, generate_scenario

SMALL_RUN = {
    'k': 3,
    'forest': {'n_trees': 20},
    'rist': {'n_trees': 10, 'n_imputation_cycles': 1},
    'learner': {'lam': 0.01, 'forest': {'n_trees': 20}},
}


def small_spec(**changes):
    spec = ScenarioSpec(
        p=4,
        baseline=ScenarioFunction('constant', value=200.0),
        contrast=ScenarioFunction('threshold', covariate=0, cutoff=0.0, scale=20.0),
        noise=10.0,
        censoring_rate=0.2,
        horizon=365.0,
        name='small',
    )
    return spec.with_overrides(**changes)


def run(command, *args, **options):
    out = StringIO()
    call_command(command, *args, stdout=out, **options)
    return out.getvalue()


class CommandTestCase(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        cohort, _ = generate_scenario(small_spec(), 240, seed=3, mc_n=10_000)
        self.cohort_path = write_cohort(cohort, self.dir / 'cohort.csv')
        self.config_path = self.dir / 'config.json'
        self.config_path.write_text(json.dumps(SMALL_RUN))

    def tearDown(self):
        self.tmp.cleanup()

    def options(self, out, **extra):
        return dict(config=str(self.config_path), out=str(self.dir / out), horizon=[365.0], seed=11, **extra)


class ToyCommandTestCase(SimpleTestCase):

    def test_table1(self):
        output = run('toy', 'table1')
        self.assertIn('everyone furosemide', output)
        for value in ('0.52', '0.47', '0.17'):
            self.assertIn(value, output)

    def test_table3(self):
        output = run('toy', 'table3')
        for value in ('0.52', '0.46', '0.15'):
            self.assertIn(value, output)

    def test_all_rules(self):
        output = run('toy', 'table1', all_rules=True)
        self.assertIn('Every stratum rule', output)

    def test_writes_rule(self):
        with tempfile.TemporaryDirectory() as tmp:
            run('toy', 'table1', out=tmp)
            rule, covariates = load_rule(Path(tmp) / 'rule.json')
            self.assertEqual(rule.variant, 'stratum-lookup')
            self.assertTrue((Path(tmp) / MANIFEST).exists())

    def test_missing_table(self):
        with self.assertRaises(CommandError):
            run('toy', 'missing.csv')


class SimulateCommandTestCase(SimpleTestCase):

    def test_scenario_spec(self):
        with tempfile.TemporaryDirectory() as tmp:
            spec_path = Path(tmp) / 'spec.json'
            spec_path.write_text(json.dumps(small_spec().as_dict()))
            output = run('simulate', spec=str(spec_path), n=150, mc_n=10_000, seed=2, out=str(Path(tmp) / 'sim.csv'))
            self.assertIn('Oracle value', output)
            cohort = load_cohort(Path(tmp) / 'sim.csv')
            self.assertEqual(cohort.n, 150)
            self.assertEqual(cohort.p, 4)
            truth = json.loads((Path(tmp) / 'sim_truth.json').read_text())
            self.assertGreater(truth['gap'], 0)

    def test_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            run('simulate', table='table1', seed=2, out=str(Path(tmp) / 'table1.csv'))
            cohort = load_cohort(Path(tmp) / 'table1.csv')
            self.assertEqual(cohort.n, 19850)
            self.assertFalse(cohort.needs_imputation.any())

    def test_spec_needs_n(self):
        with tempfile.TemporaryDirectory() as tmp:
            spec_path = Path(tmp) / 'spec.json'
            spec_path.write_text(json.dumps(small_spec().as_dict()))
            with self.assertRaises(CommandError):
                run('simulate', spec=str(spec_path), out=str(Path(tmp) / 'sim.csv'))


class ImputeCommandTestCase(CommandTestCase):

    def test_completes_censored_subjects(self):
        run('impute', str(self.cohort_path), cycles=2, trees=10, **self.options('impute'))
        cohort = load_cohort(self.dir / 'impute' / 'imputed_days_alive_365.csv')
        self.assertFalse(cohort.needs_imputation.any())
        self.assertTrue((cohort.reward <= 365.0).all())


class ImportanceCommandTestCase(CommandTestCase):

    def test_writes_tables(self):
        output = run('importance', str(self.cohort_path), **self.options('importance'))
        self.assertIn('x1', output)
        aggregate = pd.read_csv(self.dir / 'importance' / 'importance.csv')
        self.assertEqual(sorted(aggregate['covariate']), ['x1', 'x2', 'x3', 'x4'])
        per_fold = pd.read_csv(self.dir / 'importance' / 'importance_folds.csv')
        self.assertEqual(len(per_fold), 3 * 4)

    def test_pure_noise_cohort(self):
        rng = np.random.default_rng(21)
        n = 300
        reward = np.clip(rng.normal(200, 40, n), 0, 365)
        noise = Cohort(
            schema=('x1', 'x2', 'x3'),
            ids=[f'n{i}' for i in range(n)],
            covariates=rng.uniform(-1, 1, size=(n, 3)),
            treatment=np.where(rng.random(n) < 0.5, 1, -1),
            time=reward,
            event=np.ones(n, dtype=bool),
            reward=reward,
            horizon=365,
        )
        path = write_cohort(noise, self.dir / 'noise.csv')
        run('importance', str(path), **self.options('noise'))
        aggregate = pd.read_csv(self.dir / 'noise' / 'importance.csv')
        self.assertTrue((aggregate['mean_importance'] <= 2 * aggregate['mean_importance_se']).all())


class FitCommandTestCase(CommandTestCase):

    def test_saves_rule_with_covariates(self):
        run('fit', str(self.cohort_path), learner='rwl', **self.options('fit'))
        rule, covariates = load_rule(self.dir / 'fit' / 'rule.json')
        self.assertEqual(rule.variant, 'linear')
        self.assertEqual(covariates, ['x1', 'x2', 'x3', 'x4'])

    def test_selection(self):
        run('fit', str(self.cohort_path), learner='earl', select=True, top_m=2, **self.options('fit'))
        _, covariates = load_rule(self.dir / 'fit' / 'rule.json')
        self.assertEqual(len(covariates), 2)

    def test_unknown_learner(self):
        with self.assertRaises(CommandError):
            run('fit', str(self.cohort_path), learner='svm', **self.options('fit'))


class EvaluateCommandTestCase(CommandTestCase):

    def test_report_rows(self):
        output = run('evaluate', str(self.cohort_path), learners='rwl,earl', **self.options('evaluate'))
        self.assertIn('horizon 365 days', output)
        report = pd.read_csv(self.dir / 'evaluate' / 'report.csv')
        self.assertEqual(list(report['rule']), ['zero', 'rwl', 'earl'])
        self.assertTrue(pd.isna(report.loc[0, 'diff']))
        self.assertTrue((report['ci_low'] <= report['value']).all())
        self.assertFalse((self.dir / 'evaluate' / 'importance.csv').exists())

    def test_block_per_horizon(self):
        options = self.options('evaluate', learners='universal:+1')
        options['horizon'] = [180.0, 365.0]
        output = run('evaluate', str(self.cohort_path), **options)
        self.assertIn('horizon 180 days', output)
        self.assertIn('horizon 365 days', output)
        report = pd.read_csv(self.dir / 'evaluate' / 'report.csv')
        self.assertEqual(sorted(set(report['horizon_days'])), [180.0, 365.0])
        self.assertTrue((report.loc[report['horizon_days'] == 180.0, 'value'] <= 180.0).all())

    def test_single_fold_rejected(self):
        with self.assertRaises(CommandError):
            run('evaluate', str(self.cohort_path), k=1, **self.options('evaluate'))

    def test_missing_input(self):
        with self.assertRaises(CommandError):
            run('evaluate', str(self.dir / 'absent.csv'), **self.options('evaluate'))


class PipelineCommandTestCase(CommandTestCase):

    def test_selection_and_report(self):
        output = run('pipeline', str(self.cohort_path), learners='rwl', top_m=2, **self.options('first'))
        self.assertIn('kept', output)
        importance = pd.read_csv(self.dir / 'first' / 'importance.csv')
        self.assertEqual(len(importance), 4)
        manifest = json.loads((self.dir / 'first' / MANIFEST).read_text())
        self.assertEqual(manifest['command'], 'pipeline')
        self.assertIn('report.csv', manifest['outputs'])

    def test_rerun_is_identical(self):
        for out in ('first', 'second'):
            run('pipeline', str(self.cohort_path), learners='rwl', no_select=True, **self.options(out))
        for name in ('report.csv', 'report.txt'):
            first = (self.dir / 'first' / name).read_bytes()
            second = (self.dir / 'second' / name).read_bytes()
            self.assertEqual(first, second)

    def test_invalid_config(self):
        self.config_path.write_text(json.dumps({'horizons': [-5]}))
        with self.assertRaises(CommandError):
            run('pipeline', str(self.cohort_path), config=str(self.config_path))


class RunConfigTestCase(SimpleTestCase):

    def test_nested_overrides(self):
        config = RunConfig.from_dict(dict(SMALL_RUN, learners=['rwl', 'universal:1']))
        self.assertEqual(config.k, 3)
        self.assertEqual(config.evaluation.forest.n_trees, 20)
        self.assertEqual(config.evaluation.rist.n_imputation_cycles, 1)
        self.assertEqual(config.evaluation.learner.lam, 0.01)
        self.assertEqual(config.rules, ('zero', 'rwl', 'universal:+1'))

    def test_comparator_listed_once(self):
        config = RunConfig(learners=('zero', 'rf'))
        self.assertEqual(config.rules, ('zero', 'rf'))

    def test_bad_horizon(self):
        with self.assertRaises(ArgumentError):
            RunConfig(horizons=(0,))

    def test_missing_config_file(self):
        with self.assertRaises(FileNotFoundError):
            RunConfig.from_file('nope.json')

    def test_defaults_come_from_settings(self):
        with override_settings(RULEWISE=dict(settings.RULEWISE, HORIZONS=[90.0], FOLDS=4)):
            config = RunConfig()
        self.assertEqual(config.horizons, (90.0,))
        self.assertEqual(config.k, 4)
