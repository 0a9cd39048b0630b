import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from cohort.exceptions import ArgumentError, CohortInputError, CohortValueError, SchemaError
from cohort.folds import kfold_split
from cohort.horizon import restrict_horizon
from cohort.ingest import SchemaConfig, load_cohort, write_cohort
from cohort.models import Cohort

TESTDATA = Path(__file__).resolve().parent / 'testdata'


def make_cohort(n, seed=0, p=2, horizon=None):
    rng = np.random.default_rng(seed)
    return Cohort(
        schema=tuple(f'x{j + 1}' for j in range(p)),
        ids=[f's{i}' for i in range(n)],
        covariates=rng.normal(size=(n, p)),
        treatment=np.where(rng.random(n) < 0.4, 1, -1),
        time=rng.uniform(0, 500, size=n),
        event=rng.random(n) < 0.6,
        horizon=horizon,
    )


class LoadCohortTestCase(SimpleTestCase):

    def setUp(self):
        self.config = SchemaConfig.from_file(TESTDATA / 'drug_schema.json')
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, text):
        path = Path(self.tmp.name) / 'cohort.csv'
        path.write_text(text)
        return path

    def test_load_three_subjects(self):
        cohort = load_cohort(TESTDATA / 'three_subjects.csv', self.config)
        self.assertEqual(cohort.n, 3)
        self.assertEqual(cohort.schema, ('x1',))
        self.assertEqual(list(cohort.treatment), [-1, 1, -1])
        self.assertEqual(list(cohort.event), [True, False, False])
        self.assertEqual(cohort.subjects[0].covariates, (0.3,))

    def test_unmapped_treatment_names_row(self):
        path = self.write('id,drug,time,event,x1\na,furosemide,1,1,0\nb,bumetanide,2,0,1\n')
        with self.assertRaises(CohortValueError) as ctx:
            load_cohort(path, self.config)
        self.assertEqual(ctx.exception.row, 1)
        self.assertIn('bumetanide', str(ctx.exception))

    def test_missing_column(self):
        path = self.write('id,drug,time,x1\na,furosemide,1,0\n')
        with self.assertRaises(SchemaError) as ctx:
            load_cohort(path, self.config)
        self.assertEqual(ctx.exception.column, 'event')

    def test_empty_file(self):
        with self.assertRaises(CohortInputError):
            load_cohort(self.write(''), self.config)
        with self.assertRaises(CohortInputError):
            load_cohort(self.write('id,drug,time,event,x1\n'), self.config)

    def test_missing_covariate_rejects_file_by_default(self):
        path = self.write('id,drug,time,event,x1\na,furosemide,1,1,\nb,torsemide,2,0,1\n')
        with self.assertRaises(CohortValueError) as ctx:
            load_cohort(path, self.config)
        self.assertEqual((ctx.exception.row, ctx.exception.column), (0, 'x1'))

    def test_missing_covariate_drop_row_policy(self):
        path = self.write('id,drug,time,event,x1\na,furosemide,1,1,abc\nb,torsemide,2,0,1\n')
        config = SchemaConfig.from_dict({
            'treatment_column': 'drug',
            'treatment_labels': {'furosemide': -1, 'torsemide': 1},
            'missing': 'drop-row',
        })
        cohort = load_cohort(path, config)
        self.assertEqual(list(cohort.ids), ['b'])

    def test_drop_row_policy_skips_checks_on_dropped_rows(self):
        path = self.write(
            'id,drug,time,event,x1\n'
            'a,furosemide,,2,\n'
            'b,bumetanide,-4,1,\n'
            'c,torsemide,2,0,1\n'
        )
        config = SchemaConfig.from_dict({
            'treatment_column': 'drug',
            'treatment_labels': {'furosemide': -1, 'torsemide': 1},
            'missing': 'drop-row',
        })
        cohort = load_cohort(path, config)
        self.assertEqual(list(cohort.ids), ['c'])

    def test_bad_time_on_kept_row_still_rejected(self):
        path = self.write('id,drug,time,event,x1\na,furosemide,1,1,\nb,torsemide,-2,0,1\n')
        config = SchemaConfig.from_dict({
            'treatment_column': 'drug',
            'treatment_labels': {'furosemide': -1, 'torsemide': 1},
            'missing': 'drop-row',
        })
        with self.assertRaises(CohortValueError) as ctx:
            load_cohort(path, config)
        self.assertEqual((ctx.exception.row, ctx.exception.column), (1, 'time'))

    def test_round_trip_is_bitwise(self):
        cohort = make_cohort(50, seed=3, p=3)
        path = write_cohort(cohort, Path(self.tmp.name) / 'out.csv')
        self.assertTrue(load_cohort(path).equals(cohort))

    def test_round_trip_keeps_restricted_rewards(self):
        cohort = restrict_horizon(make_cohort(40, seed=4), 365)
        path = write_cohort(cohort, Path(self.tmp.name) / 'restricted.csv')
        reloaded = load_cohort(path)
        self.assertTrue(reloaded.equals(cohort))
        self.assertEqual(reloaded.horizon, 365.0)

    def test_named_outcomes(self):
        path = self.write(
            'id,treatment,time,event,time_hf,event_hf,x1\n'
            'a,1,300,0,120,1,0.5\n'
            'b,-1,200,1,200,1,0.1\n'
        )
        config = SchemaConfig.from_dict({'outcomes': {
            'days_alive': {'time': 'time', 'event': 'event'},
            'days_alive_hf_free': {'time': 'time_hf', 'event': 'event_hf'},
        }})
        cohort = load_cohort(path, config, outcome='days_alive_hf_free')
        self.assertEqual(cohort.schema, ('x1',))
        self.assertEqual(list(cohort.time), [120.0, 200.0])
        self.assertEqual(cohort.outcome, 'days_alive_hf_free')


class CohortInvariantTestCase(SimpleTestCase):

    def test_rejects_bad_treatment_code(self):
        with self.assertRaises(ArgumentError):
            Cohort(schema=('x',), ids=['a'], covariates=[[0.0]], treatment=[0], time=[1.0], event=[True])

    def test_rejects_negative_time(self):
        with self.assertRaises(ArgumentError):
            Cohort(schema=('x',), ids=['a'], covariates=[[0.0]], treatment=[1], time=[-1.0], event=[True])

    def test_require_both_arms(self):
        cohort = Cohort(schema=('x',), ids=['a', 'b'], covariates=[[0.0], [1.0]],
                        treatment=[1, 1], time=[1.0, 2.0], event=[True, True])
        with self.assertRaises(ArgumentError):
            cohort.require_both_arms()

    def test_arrays_are_read_only(self):
        cohort = make_cohort(5)
        with self.assertRaises(ValueError):
            cohort.time[0] = 1.0


class RestrictHorizonTestCase(SimpleTestCase):

    def single(self, time, event):
        return Cohort(schema=('x',), ids=['a'], covariates=[[0.0]], treatment=[1], time=[time], event=[event])

    def test_truncates_at_horizon(self):
        cohort = restrict_horizon(self.single(400, True), 365)
        self.assertEqual(cohort.reward[0], 365)
        self.assertFalse(cohort.event[0])
        self.assertFalse(cohort.needs_imputation[0])

    def test_event_before_horizon(self):
        cohort = restrict_horizon(self.single(100, True), 365)
        self.assertEqual(cohort.reward[0], 100)
        self.assertTrue(cohort.event[0])

    def test_censored_before_horizon(self):
        cohort = restrict_horizon(self.single(200, False), 365)
        self.assertTrue(np.isnan(cohort.reward[0]))
        self.assertTrue(cohort.needs_imputation[0])

    def test_idempotent(self):
        once = restrict_horizon(make_cohort(200, seed=9), 180)
        twice = restrict_horizon(once, 180)
        self.assertTrue(once.equals(twice))

    def test_rejects_non_positive_horizon(self):
        with self.assertRaises(ArgumentError):
            restrict_horizon(make_cohort(3), 0)


class KFoldSplitTestCase(SimpleTestCase):

    def test_exact_division(self):
        folds = kfold_split(make_cohort(100), 10, seed=1)
        self.assertEqual(list(folds.sizes()), [10] * 10)
        seen = np.concatenate([folds.test_indices(f) for f in range(10)])
        self.assertEqual(sorted(seen), list(range(100)))

    def test_remainder_distribution(self):
        sizes = kfold_split(make_cohort(101), 10, seed=1).sizes()
        self.assertTrue(set(sizes) <= {10, 11})
        self.assertEqual(sizes.sum(), 101)

    def test_deterministic(self):
        cohort = make_cohort(77)
        first = kfold_split(cohort, 7, seed=42)
        second = kfold_split(cohort, 7, seed=42)
        self.assertTrue(np.array_equal(first.assignment, second.assignment))

    def test_per_arm_balance(self):
        cohort = make_cohort(253, seed=5)
        folds = kfold_split(cohort, 10, seed=2)
        for arm in (-1, 1):
            in_arm = cohort.treatment == arm
            share = in_arm.sum() / 10
            counts = np.bincount(folds.assignment[in_arm], minlength=10)
            self.assertTrue(np.all(np.abs(counts - share) <= 1))

    def test_k_larger_than_cohort(self):
        with self.assertRaises(ArgumentError):
            kfold_split(make_cohort(5), 6, seed=0)

    def test_k_below_two(self):
        with self.assertRaises(ArgumentError):
            kfold_split(make_cohort(5), 1, seed=0)
