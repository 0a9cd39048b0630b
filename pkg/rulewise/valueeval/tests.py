import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, tag
from rest_framework.exceptions import ValidationError

from cohort.exceptions import ArgumentError, FoldError, UndefinedValueError
from cohort.models import Cohort
from forest.params import ForestParams
from forest.propensity import ConstantPropensity
from learners.config import LearnerConfig
from learners.rules import LinearRule, UniversalRule
from rist.params import RistParams
from synthgen.constants import MIN_MC_DRAWS
from synthgen.scenario import ScenarioFunction, ScenarioSpec, generate_scenario, true_value
from synthgen.tables import table_scenario
from toystrata.datasets import table1
from toystrata.models import StratumRule
from toystrata.standardize import standardized_risk
from valueeval.compare import compare_to_zero_order, paired_difference
from valueeval.crossval import cross_validated_value, cross_validated_values, prepare_folds
from valueeval.estimators import ipw_value
from valueeval.models import EvaluationConfig, FoldResult, ValueEstimate, evaluation_config_from_dict
from valueeval.report import REPORT_COLUMNS, format_table, report_frame, write_report

FAST = EvaluationConfig(
    k=3,
    forest=ForestParams(n_trees=30),
    rist=RistParams(n_trees=10, n_imputation_cycles=1),
    learner=LearnerConfig(lam=0.01, forest=ForestParams(n_trees=30)),
)


def two_subjects():
    return Cohort(
        schema=('x1',),
        ids=['a', 'b'],
        covariates=[[-1.0], [1.0]],
        treatment=[-1, 1],
        time=[10.0, 20.0],
        event=[True, True],
        reward=[10.0, 20.0],
        horizon=365,
    )


def threshold_spec(**changes):
    spec = ScenarioSpec(
        p=10,
        contrast=ScenarioFunction('threshold', covariate=0, cutoff=0.0, scale=20.0),
        noise=10.0,
    )
    return spec.with_overrides(**changes)


class IpwValueTestCase(SimpleTestCase):

    def test_rule_matching_everyone(self):
        value = ipw_value(two_subjects(), LinearRule((1.0,), 0.0), ConstantPropensity(0.5))
        self.assertEqual(value, 15.0)

    def test_single_match(self):
        self.assertEqual(ipw_value(two_subjects(), UniversalRule(1), ConstantPropensity(0.5)), 20.0)

    def test_unnormalized(self):
        value = ipw_value(two_subjects(), LinearRule((1.0,), 0.0), ConstantPropensity(0.5), normalized=False)
        self.assertEqual(value, 30.0)

    def test_no_match(self):
        cohort = two_subjects().replace(treatment=[-1, -1])
        with self.assertRaises(UndefinedValueError):
            ipw_value(cohort, UniversalRule(1), ConstantPropensity(0.5))

    def test_incomplete_rewards(self):
        cohort = two_subjects().replace(reward=[10.0, np.nan])
        with self.assertRaises(ArgumentError):
            ipw_value(cohort, UniversalRule(1), ConstantPropensity(0.5))

    def test_normalized_value_within_matching_rewards(self):
        spec = threshold_spec(assignment='logistic', assignment_coefficients=(1.5, -1.0))
        cohort, _ = generate_scenario(spec, n=500, seed=0, mc_n=MIN_MC_DRAWS)
        rng = np.random.default_rng(0)
        for _ in range(10):
            rule = LinearRule(rng.normal(size=spec.p), rng.normal())
            matched = cohort.reward[cohort.treatment == rule.apply(cohort.X)]
            value = ipw_value(cohort, rule, spec.propensity())
            self.assertGreaterEqual(value, matched.min())
            self.assertLessEqual(value, matched.max())

    def test_universal_value_matches_standardization(self):
        scenario = table_scenario(table1())
        cohort, _ = generate_scenario(scenario, n=50_000, seed=1, mc_n=MIN_MC_DRAWS)
        for arm in (-1, 1):
            with self.subTest(arm=arm):
                value = ipw_value(cohort, UniversalRule(arm), scenario.propensity())
                expected = 1 - standardized_risk(table1(), StratumRule.universal(table1(), arm))
                self.assertAlmostEqual(value, expected, delta=0.01)

    @tag('slow')
    def test_unnormalized_estimator_unbiased(self):
        spec = threshold_spec()
        rule = LinearRule((1.0,) + (0.0,) * 9, 0.0)
        truth, _ = true_value(spec, rule, mc_n=1_000_000, seed=11)
        estimates = [
            ipw_value(generate_scenario(spec, n=2000, seed=seed, mc_n=MIN_MC_DRAWS)[0], rule,
                      spec.propensity(), normalized=False)
            for seed in range(200)
        ]
        se = np.std(estimates, ddof=1) / np.sqrt(len(estimates))
        self.assertLess(abs(np.mean(estimates) - truth), 3 * se)


class CrossValidatedValueTestCase(SimpleTestCase):

    def setUp(self):
        self.spec = threshold_spec()
        self.cohort, self.truth = generate_scenario(self.spec, n=600, seed=0, mc_n=MIN_MC_DRAWS)

    def test_constant_reward(self):
        spec = ScenarioSpec(p=3, baseline=ScenarioFunction('constant', value=150.0))
        cohort, _ = generate_scenario(spec, n=200, seed=0, mc_n=MIN_MC_DRAWS)
        estimate = cross_validated_value(cohort, 'universal:+1', k=5, propensity=ConstantPropensity(0.5))
        self.assertAlmostEqual(estimate.point, 150.0)
        self.assertAlmostEqual(estimate.se, 0.0)
        self.assertEqual(estimate.n_folds, 5)

    def test_deterministic(self):
        first = cross_validated_value(self.cohort, 'rf', k=3, seed=4, config=FAST)
        second = cross_validated_value(self.cohort, 'rf', k=3, seed=4, config=FAST)
        self.assertEqual(first, second)

    def test_interval_brackets_point(self):
        estimate = cross_validated_value(self.cohort, 'zero', k=3, config=FAST)
        self.assertLessEqual(estimate.ci_low, estimate.point)
        self.assertLessEqual(estimate.point, estimate.ci_high)
        self.assertEqual(len(estimate.fold_values), 3)
        self.assertEqual(estimate.horizon, 365.0)

    def test_single_fold_rejected(self):
        with self.assertRaises(ArgumentError):
            cross_validated_value(self.cohort, 'zero', k=1)

    def test_failure_names_fold_stage_and_learner(self):
        cohort = self.cohort.replace(reward=np.full(self.cohort.n, 120.0))
        config = FAST.with_overrides(learner=LearnerConfig(lam=0.01, outcome_model='linear'))
        with self.assertRaises(FoldError) as ctx:
            cross_validated_value(cohort, 'rwl', k=3, config=config, propensity=ConstantPropensity(0.5))
        self.assertEqual(ctx.exception.fold, 0)
        self.assertEqual(ctx.exception.stage, 'fit')
        self.assertEqual(ctx.exception.learner, 'rwl')

    def test_censored_folds_are_completed(self):
        spec = threshold_spec(p=3, event_law='exponential', censoring_rate=0.3)
        cohort, _ = generate_scenario(spec, n=300, seed=2, mc_n=MIN_MC_DRAWS)
        folds, prepared = prepare_folds(cohort, k=3, config=FAST)
        self.assertEqual(folds.k, 3)
        for fold in prepared:
            self.assertTrue(fold.train.has_complete_rewards)
            self.assertTrue(fold.test.has_complete_rewards)
            self.assertGreater(fold.diagnostics['imputed'], 0)
        self.assertEqual(sum(fold.test.n for fold in prepared), cohort.n)

    def test_new_horizon_restricts(self):
        estimate = cross_validated_value(self.cohort, 'zero', k=3, horizon=180, config=FAST)
        self.assertEqual(estimate.horizon, 180.0)
        self.assertLessEqual(estimate.point, 180.0)

    def test_shared_folds_across_learners(self):
        estimates = cross_validated_values(self.cohort, ['zero', 'universal:-1'], k=3, config=FAST)
        self.assertEqual(estimates['zero'].fold_signature, estimates['universal:-1'].fold_signature)

    @tag('slow')
    def test_learners_beat_zero_order(self):
        spec = threshold_spec()
        cohort, truth = generate_scenario(spec, n=2000, seed=3, mc_n=1_000_000)
        estimates = cross_validated_values(cohort, ['zero', 'rf', 'rwl', 'earl'], k=10, seed=0)
        compared = compare_to_zero_order(estimates, estimates['zero'])
        for estimate in compared[1:]:
            with self.subTest(estimate.learner):
                self.assertGreater(estimate.comparator_difference[0], 0)
                self.assertGreater(estimate.point - truth.best_universal, truth.gap / 2)
        self.assertLess(abs(estimates['rwl'].point - truth.optimal_value), 0.05 * truth.optimal_value)

    @tag('slow')
    def test_learners_agree_without_heterogeneity(self):
        spec = threshold_spec(contrast=ScenarioFunction('constant', value=0.0))
        cohort, _ = generate_scenario(spec, n=2000, seed=4, mc_n=MIN_MC_DRAWS)
        rules = ['zero', 'rf', 'rwl', 'earl', 'universal:+1', 'universal:-1']
        estimates = cross_validated_values(cohort, rules, k=10, seed=0)
        for i, first in enumerate(rules):
            for second in rules[i + 1:]:
                with self.subTest(first=first, second=second):
                    a, b = estimates[first], estimates[second]
                    self.assertLess(abs(a.point - b.point), 2 * np.hypot(a.se, b.se))

    @tag('slow')
    def test_fold_interval_coverage(self):
        spec = threshold_spec()
        truth, _ = true_value(spec, UniversalRule(1), mc_n=1_000_000, seed=5)
        covered = []
        estimates = []
        for seed in range(100):
            cohort, _ = generate_scenario(spec, n=2000, seed=seed, mc_n=MIN_MC_DRAWS)
            estimate = cross_validated_value(cohort, 'universal:+1', k=10, seed=seed, propensity=spec.propensity())
            estimates.append(estimate.point)
            covered.append(estimate.ci_low <= truth <= estimate.ci_high)
        se = np.std(estimates, ddof=1) / np.sqrt(len(estimates))
        self.assertLess(abs(np.mean(estimates) - truth), 3 * se)
        self.assertGreaterEqual(np.mean(covered), 0.88)
        self.assertLessEqual(np.mean(covered), 0.99)


def fold_estimate(learner, values, signature=(3, 30, 'abc')):
    results = [FoldResult(fold=i, value=v, n_test=10) for i, v in enumerate(values)]
    return ValueEstimate.from_folds(learner, results, horizon=365.0, fold_signature=signature)


class CompareTestCase(SimpleTestCase):

    def test_self_comparison(self):
        zero = fold_estimate('zero', [200.0, 210.0, 190.0])
        point, low, high = paired_difference(zero, zero)
        self.assertEqual(point, 0.0)
        self.assertLessEqual(low, 0.0)
        self.assertGreaterEqual(high, 0.0)

    def test_paired_difference(self):
        zero = fold_estimate('zero', [200.0, 210.0, 190.0])
        rwl = fold_estimate('rwl', [205.0, 216.0, 194.0])
        point, low, high = paired_difference(rwl, zero)
        self.assertAlmostEqual(point, 5.0)
        self.assertAlmostEqual(point, rwl.point - zero.point)
        self.assertGreater(low, 0.0)

    def test_mismatched_folds(self):
        zero = fold_estimate('zero', [200.0, 210.0, 190.0])
        other = fold_estimate('rf', [200.0, 210.0, 190.0], signature=(3, 30, 'xyz'))
        with self.assertRaises(ArgumentError):
            paired_difference(other, zero)

    def test_table_order(self):
        zero = fold_estimate('zero', [200.0, 210.0, 190.0])
        results = {
            'zero': zero,
            'rwl': fold_estimate('rwl', [205.0, 216.0, 194.0]),
            'rf': fold_estimate('rf', [201.0, 212.0, 191.0]),
        }
        compared = compare_to_zero_order(results, zero)
        self.assertEqual([e.learner for e in compared], ['zero', 'rwl', 'rf'])
        self.assertIsNone(compared[0].comparator_difference)


class ReportTestCase(SimpleTestCase):

    def setUp(self):
        zero = fold_estimate('zero', [200.0, 210.0, 190.0])
        results = {
            'zero': zero,
            'rwl': fold_estimate('rwl', [205.0, 216.0, 194.0]),
            'rf': fold_estimate('rf', [201.0, 212.0, 191.0]),
            'earl': fold_estimate('earl', [203.0, 211.0, 193.0]),
        }
        compared = compare_to_zero_order(results, zero)
        self.frame = report_frame([('days_alive', compared), ('readmission_free', compared)])

    def test_long_frame(self):
        self.assertEqual(tuple(self.frame.columns), REPORT_COLUMNS)
        self.assertEqual(len(self.frame), 8)
        self.assertTrue(np.isnan(self.frame.loc[0, 'diff']))

    def test_text_layout(self):
        text = format_table(self.frame)
        lines = text.splitlines()
        self.assertIn('horizon 365 days', lines[0])
        self.assertEqual([line.split()[0] for line in lines[2:]], ['Zero-order', 'RWL', 'RF', 'EARL'])
        self.assertIn('days_alive difference (95% CI)', lines[1])
        self.assertIn('5.0 (', text)

    def test_written_files_are_stable(self):
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, txt_path = write_report(self.frame, Path(tmp) / 'first')
            again, _ = write_report(self.frame, Path(tmp) / 'second')
            self.assertEqual(csv_path.read_bytes(), again.read_bytes())
            self.assertEqual(tuple(pd.read_csv(csv_path).columns), REPORT_COLUMNS)
            self.assertTrue(txt_path.exists())


class EvaluationConfigTestCase(SimpleTestCase):

    def test_overrides(self):
        config = evaluation_config_from_dict({'k': 5, 'rist': {'n_trees': 7}, 'learner': {'lam': 0.5}})
        self.assertEqual(config.k, 5)
        self.assertEqual(config.rist.n_trees, 7)
        self.assertEqual(config.learner.lam, 0.5)
        self.assertEqual(config.clip, 0.01)

    def test_invalid(self):
        with self.assertRaises(ValidationError):
            evaluation_config_from_dict({'k': 1})
        with self.assertRaises(ArgumentError):
            EvaluationConfig(k=1)
