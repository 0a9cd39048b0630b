import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag
from rest_framework.exceptions import ValidationError

from cohort.exceptions import ArgumentError, DegenerateWeightsError, FitError
from cohort.models import Cohort
from forest.params import ForestParams
from forest.propensity import ConstantPropensity
from learners.config import LearnerConfig
from learners.fitting import fit_earl, fit_learner, fit_rf_policy, fit_rwl, fit_zero_order, parse_learner
from learners.optimizer import fit_ramp, normalize_weights
from learners.outcome import pseudo_contrast
from learners.rules import LinearRule, StratumLookupRule, UniversalRule, apply_rule
from learners.serialization import learner_config_from_dict, load_rule, rule_from_document, rule_to_document, save_rule
from synthgen.constants import MIN_MC_DRAWS
from synthgen.scenario import ScenarioFunction, ScenarioSpec, generate_scenario
from synthgen.tables import generate_from_table, table_scenario
from toystrata.datasets import table1
from toystrata.standardize import stratified_optimal_rule

FAST = LearnerConfig(lam=0.01, forest=ForestParams(n_trees=50))


def threshold_spec(**changes):
    """Treatment helps by 20 days where x1 > 0 and hurts by 20 days elsewhere."""
    spec = ScenarioSpec(
        p=10,
        contrast=ScenarioFunction('threshold', covariate=0, cutoff=0.0, scale=20.0),
        noise=10.0,
        name='threshold',
    )
    return spec.with_overrides(**changes)


def complete_cohort(X, treatment, reward, horizon=365):
    n = len(treatment)
    return Cohort(
        schema=tuple(f'x{j + 1}' for j in range(X.shape[1])),
        ids=[f's{i}' for i in range(n)],
        covariates=X,
        treatment=treatment,
        time=reward,
        event=np.ones(n, dtype=bool),
        reward=reward,
        horizon=horizon,
    )


def agreement(rule, spec, n=4000, seed=99):
    X = spec.draw_covariates(n, np.random.default_rng(seed))
    return float(np.mean(rule.apply(X) == spec.optimal_rule().apply(X)))


def scale_rewards(cohort, c):
    return cohort.replace(reward=cohort.reward * c, time=cohort.time * c, horizon=cohort.horizon * c)


class ApplyRuleTestCase(SimpleTestCase):

    def test_linear_rule(self):
        rule = LinearRule((1.0, 0.0), 0.0)
        self.assertEqual(apply_rule(rule, [2.0, 5.0]), 1)
        self.assertEqual(apply_rule(rule, [-1.0, 5.0]), -1)
        self.assertEqual(apply_rule(rule, [0.0, 5.0]), -1)
        self.assertEqual(apply_rule(LinearRule((1.0, 0.0), 0.0, tie_arm=1), [0.0, 5.0]), 1)

    def test_universal_rule_on_matrix(self):
        decisions = apply_rule(UniversalRule(1), np.zeros((4, 3)))
        np.testing.assert_array_equal(decisions, [1, 1, 1, 1])
        self.assertEqual(UniversalRule(-1).name, 'universal:-1')

    def test_dimension_mismatch(self):
        with self.assertRaises(ArgumentError):
            apply_rule(LinearRule((1.0, 0.0), 0.0), [1.0, 2.0, 3.0])

    def test_stratum_lookup(self):
        rule = StratumLookupRule(stratified_optimal_rule(table1()), ('reduced_ef',))
        self.assertEqual(apply_rule(rule, [1]), 1)
        self.assertEqual(apply_rule(rule, [0]), -1)
        with self.assertRaises(ArgumentError):
            apply_rule(rule, [2])

    def test_invalid_arm(self):
        with self.assertRaises(ArgumentError):
            UniversalRule(0)


class ParseLearnerTestCase(SimpleTestCase):

    def test_names(self):
        self.assertEqual(parse_learner('RWL'), 'rwl')
        self.assertEqual(parse_learner('universal:1'), 'universal:+1')
        self.assertEqual(parse_learner('universal:-1'), 'universal:-1')

    def test_unknown(self):
        with self.assertRaises(ArgumentError):
            parse_learner('svm')


class ZeroOrderTestCase(SimpleTestCase):

    def test_dominant_arm(self):
        rng = np.random.default_rng(0)
        treatment = np.where(rng.random(400) < 0.5, 1, -1)
        reward = 100 + 20 * (treatment == 1) + rng.normal(0, 5, 400)
        cohort = complete_cohort(rng.normal(size=(400, 2)), treatment, reward)
        rule = fit_zero_order(cohort, ConstantPropensity(0.5))
        self.assertEqual(rule.arm, 1)
        self.assertTrue(rule.diagnostics['converged'])

    def test_table1_prefers_torsemide(self):
        cohort = generate_from_table(table1(), seed=0)
        rule = fit_zero_order(cohort, table_scenario(table1()).propensity())
        self.assertEqual(rule.arm, 1)
        self.assertAlmostEqual(rule.diagnostics['values'][1], 1 - 0.47, delta=0.005)

    def test_tie_goes_to_tie_arm(self):
        treatment = np.array([1, -1, 1, -1])
        cohort = complete_cohort(np.zeros((4, 1)), treatment, np.full(4, 50.0))
        self.assertEqual(fit_zero_order(cohort, ConstantPropensity(0.5)).arm, -1)
        self.assertEqual(fit_zero_order(cohort, ConstantPropensity(0.5), tie_arm=1).arm, 1)


class RfPolicyTestCase(SimpleTestCase):

    def test_planted_interaction(self):
        rng = np.random.default_rng(1)
        n = 1000
        X = rng.uniform(-1, 1, size=(n, 5))
        treatment = np.where(rng.random(n) < 0.5, 1, -1)
        reward = 100 + 50 * ((X[:, 0] > 0) & (treatment == 1))
        rule = fit_rf_policy(complete_cohort(X, treatment, reward.astype(float)), ForestParams(n_trees=50), seed=0)
        X_new = rng.uniform(-1, 1, size=(2000, 5))
        treated = rule.apply(X_new) == 1
        self.assertGreater(np.mean(treated[X_new[:, 0] > 0.1]), 0.9)

    def test_small_arm_rejected(self):
        treatment = np.array([1] * 30 + [-1] * 4)
        cohort = complete_cohort(np.zeros((34, 1)), treatment, np.ones(34))
        with self.assertRaises(FitError):
            fit_rf_policy(cohort, ForestParams(n_trees=5))


class RampClassifierTestCase(SimpleTestCase):

    def test_separable_labels(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(-1, 1, size=(500, 2))
        labels = np.where(X[:, 0] + X[:, 1] > 0, 1.0, -1.0)
        standardizer, fit = fit_ramp(X, labels, np.ones(500), lam=1e-3)
        predicted = standardizer.to_rule(fit.theta).apply(X)
        self.assertGreaterEqual(np.mean(predicted == labels), 0.98)

    def test_zero_weights(self):
        with self.assertRaises(DegenerateWeightsError):
            normalize_weights(np.zeros(5))

    def test_weights_rescaled_to_mean_one(self):
        self.assertAlmostEqual(float(normalize_weights([1.0, 3.0]).mean()), 1.0)


class RwlTestCase(SimpleTestCase):

    def setUp(self):
        self.spec = threshold_spec()
        self.cohort, _ = generate_scenario(self.spec, n=1000, seed=0, mc_n=MIN_MC_DRAWS)

    def test_recovers_threshold(self):
        rule = fit_rwl(self.cohort, self.spec.propensity(), FAST, seed=0)
        self.assertGreaterEqual(agreement(rule, self.spec), 0.8)
        self.assertEqual(rule.diagnostics['learner'], 'rwl')
        self.assertEqual(rule.diagnostics['lam'], 0.01)

    def test_constant_reward_is_degenerate(self):
        cohort = self.cohort.replace(reward=np.full(self.cohort.n, 120.0))
        with self.assertRaises(DegenerateWeightsError):
            fit_rwl(cohort, self.spec.propensity(), FAST.with_overrides(outcome_model='linear'))

    def test_covariate_scale_does_not_matter(self):
        config = FAST.with_overrides(outcome_model='linear')
        scaled = self.cohort.replace(covariates=self.cohort.X * 1000.0)
        rule = fit_rwl(self.cohort, self.spec.propensity(), config, seed=0)
        scaled_rule = fit_rwl(scaled, self.spec.propensity(), config, seed=0)
        X = self.spec.draw_covariates(2000, np.random.default_rng(5))
        self.assertGreaterEqual(np.mean(rule.apply(X) == scaled_rule.apply(X * 1000.0)), 0.99)

    def test_reward_scale_does_not_matter(self):
        scaled = scale_rewards(self.cohort, 8.0)
        rule = fit_rwl(self.cohort, self.spec.propensity(), FAST, seed=0)
        scaled_rule = fit_rwl(scaled, self.spec.propensity(), FAST, seed=0)
        np.testing.assert_array_equal(rule.apply(self.cohort.X), scaled_rule.apply(scaled.X))

    def test_penalty_chosen_from_grid(self):
        config = FAST.with_overrides(lam=None, outcome_model='linear', lam_grid=(0.01, 1.0), subgradient_iter=100)
        cohort = self.cohort.subset(np.arange(400))
        rule = fit_rwl(cohort, self.spec.propensity(), config, seed=0)
        self.assertIn(rule.diagnostics['lam'], (0.01, 1.0))

    def test_deterministic(self):
        first = fit_rwl(self.cohort, self.spec.propensity(), FAST, seed=3)
        second = fit_rwl(self.cohort, self.spec.propensity(), FAST, seed=3)
        self.assertEqual(first.weights, second.weights)

    def test_incomplete_rewards_rejected(self):
        reward = self.cohort.reward.copy()
        reward[0] = np.nan
        with self.assertRaises(ArgumentError):
            fit_rwl(self.cohort.replace(reward=reward), self.spec.propensity(), FAST)


class EarlTestCase(SimpleTestCase):

    def test_exact_outcome_model_gives_true_contrast(self):
        spec = threshold_spec(noise=0.0)
        cohort, _ = generate_scenario(spec, n=300, seed=1, mc_n=MIN_MC_DRAWS)
        psi = pseudo_contrast(cohort, spec.propensity(), spec.mean_event_time)
        np.testing.assert_allclose(psi, spec.contrast(cohort.X), atol=1e-9)

    def test_recovers_threshold(self):
        spec = threshold_spec()
        cohort, _ = generate_scenario(spec, n=1000, seed=2, mc_n=MIN_MC_DRAWS)
        rule = fit_earl(cohort, spec.propensity(), FAST, seed=0)
        self.assertGreaterEqual(agreement(rule, spec), 0.8)
        self.assertTrue(rule.diagnostics['converged'])

    def test_reward_scale_does_not_matter(self):
        spec = threshold_spec()
        cohort, _ = generate_scenario(spec, n=600, seed=2, mc_n=MIN_MC_DRAWS)
        scaled = scale_rewards(cohort, 8.0)
        rule = fit_earl(cohort, spec.propensity(), FAST, seed=0)
        scaled_rule = fit_earl(scaled, spec.propensity(), FAST, seed=0)
        np.testing.assert_array_equal(rule.apply(cohort.X), scaled_rule.apply(scaled.X))

    @tag('slow')
    def test_double_robustness(self):
        spec = ScenarioSpec(
            p=3,
            assignment='logistic',
            assignment_coefficients=(1.0, 1.0),
            baseline=ScenarioFunction('linear', intercept=200.0, coefficients=(30.0, 30.0)),
            contrast=ScenarioFunction('linear', intercept=5.0, coefficients=(10.0,)),
            noise=10.0,
        )
        wrong_propensity = ConstantPropensity(0.5)

        def wrong_outcome(X, arm):
            return np.zeros(len(X))

        checks = {
            'outcome misspecified': (spec.propensity(), wrong_outcome),
            'propensity misspecified': (wrong_propensity, spec.mean_event_time),
        }
        for label, (propensity, outcome) in checks.items():
            means = [
                pseudo_contrast(generate_scenario(spec, n=2000, seed=seed, mc_n=MIN_MC_DRAWS)[0], propensity, outcome).mean()
                for seed in range(100)
            ]
            se = np.std(means, ddof=1) / np.sqrt(len(means))
            with self.subTest(label):
                self.assertLess(abs(np.mean(means) - 5.0), 3 * se)


class FitLearnerTestCase(SimpleTestCase):

    def test_universal_spec(self):
        cohort, _ = generate_scenario(threshold_spec(), n=100, seed=0, mc_n=MIN_MC_DRAWS)
        rule = fit_learner('universal:+1', cohort, ConstantPropensity(0.5))
        self.assertEqual(rule.arm, 1)

    @tag('slow')
    def test_learner_recovery_with_default_settings(self):
        spec = threshold_spec()
        cohort, _ = generate_scenario(spec, n=2000, seed=7, mc_n=MIN_MC_DRAWS)
        for learner in ('rf', 'rwl', 'earl'):
            with self.subTest(learner):
                rule = fit_learner(learner, cohort, spec.propensity(), seed=0)
                self.assertGreaterEqual(agreement(rule, spec), 0.8)


class RuleSerializationTestCase(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def round_trip(self, rule, covariates=None):
        path = save_rule(rule, Path(self.tmp.name) / 'rule.json', covariates)
        return load_rule(path)

    def test_linear_rule(self):
        rule = LinearRule((0.5, -2.0), 0.25, diagnostics={'learner': 'rwl', 'lam': 0.1})
        loaded, covariates = self.round_trip(rule, ('x1', 'x2'))
        self.assertEqual(covariates, ['x1', 'x2'])
        self.assertEqual(loaded.weights, rule.weights)
        self.assertEqual(loaded.intercept, rule.intercept)
        self.assertEqual(loaded.diagnostics['lam'], 0.1)

    def test_paired_forest_rule(self):
        cohort, _ = generate_scenario(threshold_spec(p=3), n=200, seed=0, mc_n=MIN_MC_DRAWS)
        rule = fit_rf_policy(cohort, ForestParams(n_trees=10), seed=0)
        loaded, _ = self.round_trip(rule)
        np.testing.assert_array_equal(loaded.apply(cohort.X), rule.apply(cohort.X))

    def test_stratum_and_universal_rules(self):
        rule = StratumLookupRule(stratified_optimal_rule(table1()), ('reduced_ef',))
        loaded, _ = self.round_trip(rule)
        self.assertEqual(loaded.stratum_rule, rule.stratum_rule)
        universal, _ = self.round_trip(fit_zero_order(generate_from_table(table1()), ConstantPropensity(0.5)))
        self.assertEqual(universal.variant, 'universal')

    def test_other_major_version_rejected(self):
        document = rule_to_document(UniversalRule(1))
        document['format_version'] = '2.0'
        with self.assertRaises(ArgumentError):
            rule_from_document(document)

    def test_missing_variant_field(self):
        with self.assertRaises(ValidationError):
            rule_from_document({'format': 'rulewise-rule', 'format_version': '1.0', 'variant': 'linear'})

    def test_config_overrides(self):
        config = learner_config_from_dict({'surrogate': 'hinge', 'forest': {'n_trees': 25}})
        self.assertEqual(config.surrogate, 'hinge')
        self.assertEqual(config.forest.n_trees, 25)
        self.assertEqual(config.forest.min_leaf, 5)
        with self.assertRaises(ValidationError):
            learner_config_from_dict({'inner_folds': 1})
