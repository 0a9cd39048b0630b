import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag
from rest_framework.exceptions import ValidationError

from cohort.exceptions import ArgumentError
from cohort.horizon import censoring_fraction
from cohort.ingest import load_cohort, write_cohort
from learners.rules import LinearRule, UniversalRule
from synthgen.constants import MIN_MC_DRAWS
from synthgen.scenario import ScenarioFunction, ScenarioSpec, generate_scenario, true_value
from synthgen.tables import generate_from_table, table_scenario
from toystrata.datasets import table1, table3
from toystrata.standardize import standardized_risk, stratified_optimal_rule, stratum_risks


def interaction_spec(**changes):
    spec = ScenarioSpec(
        p=4,
        contrast=ScenarioFunction('interaction', pair=(0, 1), scale=20.0),
        noise=10.0,
        name='interaction',
    )
    return spec.with_overrides(**changes)


class GenerateFromTableTestCase(SimpleTestCase):

    def test_table1_counts(self):
        cohort = generate_from_table(table1(), seed=0)
        self.assertEqual(cohort.n, 19850)
        cell = (cohort.X[:, 0] == 1) & (cohort.treatment == -1)
        self.assertEqual(int(cell.sum()), 9000)
        self.assertEqual(int(np.sum(cell & (cohort.reward == 0))), 7000)

    def test_table3_stratum_size(self):
        cohort = generate_from_table(table3(), seed=0)
        self.assertEqual(cohort.n, 19850)
        stratum = np.all(cohort.X == [1, 1, 1], axis=1) & (cohort.treatment == 1)
        self.assertEqual(int(stratum.sum()), 415)

    def test_empirical_risks_are_exact(self):
        table = table3()
        cohort = generate_from_table(table, seed=3)
        for (stratum, arm), risk in stratum_risks(table).items():
            rows = np.all(cohort.X == stratum, axis=1) & (cohort.treatment == arm)
            self.assertEqual(float(np.mean(cohort.reward[rows] == 0)), risk)

    def test_days_scale(self):
        cohort = generate_from_table(table1(), seed=0, reward='days')
        self.assertEqual(set(np.unique(cohort.reward)), {0.0, 365.0})
        self.assertEqual(cohort.horizon, 365.0)
        self.assertTrue(cohort.has_complete_rewards)

    def test_seed_only_changes_order(self):
        first = generate_from_table(table1(), seed=0)
        second = generate_from_table(table1(), seed=1)
        self.assertFalse(np.array_equal(first.treatment, second.treatment))
        self.assertEqual(first.arm_counts(), second.arm_counts())
        self.assertTrue(generate_from_table(table1(), seed=0).equals(first))

    def test_unknown_reward_scale(self):
        with self.assertRaises(ArgumentError):
            generate_from_table(table1(), reward='weeks')

    def test_written_cohort_reloads(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_cohort(generate_from_table(table1(), seed=0, reward='days'), Path(tmp) / 'table1.csv')
            cohort = load_cohort(path)
        self.assertEqual(cohort.n, 19850)
        self.assertEqual(cohort.arm_counts()[-1], 17000)
        self.assertEqual(cohort.schema, ('reduced_ef',))


class ScenarioSpecTestCase(SimpleTestCase):

    def test_invalid_probability(self):
        with self.assertRaises(ArgumentError):
            ScenarioSpec(p=2, p_treated=1.0)

    def test_function_index_out_of_range(self):
        with self.assertRaises(ArgumentError):
            ScenarioSpec(p=2, contrast=ScenarioFunction('threshold', covariate=5))

    def test_unknown_function_kind(self):
        with self.assertRaises(ArgumentError):
            ScenarioFunction('spline')

    def test_document_round_trip(self):
        spec = interaction_spec(censoring_rate=0.2, assignment='logistic', assignment_coefficients=(0.5, -0.5))
        self.assertEqual(ScenarioSpec.from_dict(spec.as_dict()), spec)

    def test_document_validation(self):
        with self.assertRaises(ValidationError):
            ScenarioSpec.from_dict({'p': 3, 'noise': -1})
        with self.assertRaises(ValidationError):
            ScenarioSpec.from_dict({'p': 3, 'contrast': {'kind': 'spline'}})

    def test_contrast_catalogue(self):
        X = np.array([[0.5, -0.5], [0.5, 0.5], [-0.2, 0.1]])
        linear = ScenarioFunction('linear', intercept=1.0, coefficients=(2.0,))
        threshold = ScenarioFunction('threshold', covariate=1, cutoff=0.0, scale=3.0)
        interaction = ScenarioFunction('interaction', pair=(0, 1), scale=20.0)
        np.testing.assert_allclose(linear(X), [2.0, 2.0, 0.6])
        np.testing.assert_allclose(threshold(X), [-3.0, 3.0, 3.0])
        np.testing.assert_allclose(interaction(X), [-20.0, 20.0, -20.0])

    def test_logistic_assignment(self):
        spec = ScenarioSpec(p=2, assignment='logistic', assignment_intercept=0.0, assignment_coefficients=(1.0, 0.0))
        self.assertAlmostEqual(float(spec.prob_treated([[0.0, 3.0]])[0]), 0.5)
        self.assertGreater(float(spec.prob_treated([[2.0, 0.0]])[0]), 0.8)


class TrueValueTestCase(SimpleTestCase):

    def test_constant_reward(self):
        spec = ScenarioSpec(p=3, baseline=ScenarioFunction('constant', value=150.0))
        value, se = true_value(spec, UniversalRule(1), mc_n=MIN_MC_DRAWS)
        self.assertEqual(value, 150.0)
        self.assertEqual(se, 0.0)

    def test_too_few_draws(self):
        with self.assertRaises(ArgumentError):
            true_value(ScenarioSpec(p=1), UniversalRule(1), mc_n=100)

    def test_table1_tailored_rule(self):
        table = table1()
        rule = stratified_optimal_rule(table)
        scenario = table_scenario(table)
        value, se = true_value(scenario, scenario.optimal_rule(), mc_n=200_000, seed=1)
        expected = 1 - standardized_risk(table, rule)
        self.assertAlmostEqual(expected, 1 - 0.169, places=3)
        self.assertLess(abs(value - expected), 3 * se)

    def test_optimal_rule_beats_random_rules(self):
        spec = interaction_spec()
        rng = np.random.default_rng(0)
        best, _ = true_value(spec, spec.optimal_rule(), mc_n=50_000, seed=2)
        for _ in range(20):
            rule = LinearRule(rng.normal(size=spec.p), rng.normal())
            value, se = true_value(spec, rule, mc_n=50_000, seed=2)
            self.assertGreaterEqual(best, value - 1e-9)


class GenerateScenarioTestCase(SimpleTestCase):

    def test_null_contrast(self):
        spec = ScenarioSpec(p=3, noise=20.0)
        _, truth = generate_scenario(spec, n=100, seed=0, mc_n=MIN_MC_DRAWS)
        for value, se in truth.universal.values():
            self.assertLess(abs(truth.optimal_value - value), 3 * se + 1e-9)

    def test_interaction_gap(self):
        spec = interaction_spec()
        cohort, truth = generate_scenario(spec, n=500, seed=0)
        self.assertAlmostEqual(truth.gap, 10.0, delta=0.3)
        X = cohort.X
        expected = np.where(X[:, 0] * X[:, 1] > 0, 1, -1)
        np.testing.assert_array_equal(truth.optimal_rule.apply(X), expected)

    def test_rewards_complete_without_censoring(self):
        cohort, _ = generate_scenario(interaction_spec(), n=300, seed=4, mc_n=MIN_MC_DRAWS)
        self.assertTrue(cohort.has_complete_rewards)
        self.assertEqual(cohort.horizon, 365.0)
        self.assertEqual(cohort.schema, ('x1', 'x2', 'x3', 'x4'))

    def test_censoring_rate(self):
        spec = ScenarioSpec(p=2, event_law='exponential', censoring_rate=0.3)
        cohort, _ = generate_scenario(spec, n=5000, seed=0, mc_n=MIN_MC_DRAWS)
        self.assertAlmostEqual(censoring_fraction(cohort), 0.3, delta=0.03)

    def test_randomized_assignment_share(self):
        spec = interaction_spec(p_treated=0.3)
        cohort, _ = generate_scenario(spec, n=4000, seed=5, mc_n=MIN_MC_DRAWS)
        share = np.mean(cohort.treatment == 1)
        self.assertLess(abs(share - 0.3), 3 * np.sqrt(0.3 * 0.7 / cohort.n))

    def test_deterministic(self):
        spec = interaction_spec(censoring_rate=0.2)
        first, truth = generate_scenario(spec, n=200, seed=9, mc_n=MIN_MC_DRAWS)
        second, again = generate_scenario(spec, n=200, seed=9, mc_n=MIN_MC_DRAWS)
        self.assertTrue(first.equals(second))
        self.assertEqual(truth.optimal_value, again.optimal_value)

    def test_empty_cohort_rejected(self):
        with self.assertRaises(ArgumentError):
            generate_scenario(interaction_spec(), n=0)

    @tag('slow')
    def test_interaction_gap_with_large_oracle(self):
        _, truth = generate_scenario(interaction_spec(), n=10, seed=1, mc_n=1_000_000)
        self.assertAlmostEqual(truth.gap, 10.0, delta=0.1)
        self.assertGreaterEqual(truth.optimal_value, truth.best_universal - 2 * truth.optimal_se)
