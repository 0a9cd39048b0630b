import numpy as np
from django.test import SimpleTestCase, tag
from lifelines.statistics import logrank_test

from cohort.exceptions import ArgumentError, FitError, UndefinedSplitError
from cohort.horizon import restrict_horizon
from cohort.models import Cohort
from rist.imputation import completed_survival, draw_imputations, impute_censored, run_imputation
from rist.model import fit_rist, logrank_statistic, survival_features
from rist.params import RistParams

SMALL = RistParams(n_trees=10)


def exponential_cohort(n, seed, mean=365.0, censor_max=None, p=2, horizon=365.0):
    """Exponential event times, optionally censored by an independent uniform."""
    rng = np.random.default_rng(seed)
    event_time = rng.exponential(mean, size=n)
    if censor_max is None:
        time, event = event_time, np.ones(n, dtype=bool)
    else:
        censor = rng.uniform(0, censor_max, size=n)
        time, event = np.minimum(event_time, censor), event_time <= censor
    cohort = Cohort(
        schema=tuple(f'x{j + 1}' for j in range(p)),
        ids=[f's{i}' for i in range(n)],
        covariates=rng.normal(size=(n, p)),
        treatment=np.where(rng.random(n) < 0.5, 1, -1),
        time=time,
        event=event,
    )
    return restrict_horizon(cohort, horizon)


class LogrankStatisticTestCase(SimpleTestCase):

    def test_identical_samples(self):
        side = ([1.0, 2.0, 3.0, 5.0], [1, 0, 1, 1])
        self.assertAlmostEqual(logrank_statistic(side, side), 0.0)

    def test_separated_groups(self):
        left = (np.ones(20), np.ones(20, bool))
        right = (np.full(20, 100.0), np.ones(20, bool))
        self.assertGreater(logrank_statistic(left, right), 15)

    def test_exchange_symmetry_and_reference(self):
        rng = np.random.default_rng(0)
        left = (rng.exponential(10, 40).round(), rng.random(40) < 0.7)
        right = (rng.exponential(15, 35).round(), rng.random(35) < 0.7)
        statistic = logrank_statistic(left, right)
        self.assertAlmostEqual(statistic, logrank_statistic(right, left), places=10)
        reference = logrank_test(left[0], right[0], event_observed_A=left[1], event_observed_B=right[1])
        self.assertAlmostEqual(statistic, reference.test_statistic, places=6)

    def test_no_events(self):
        side = ([1.0, 2.0], [0, 0])
        with self.assertRaises(UndefinedSplitError):
            logrank_statistic(side, side)

    def test_empty_side(self):
        with self.assertRaises(ArgumentError):
            logrank_statistic(([], []), ([1.0], [1]))


class FitRistTestCase(SimpleTestCase):

    def test_uncensored_leaves_hold_empirical_survival(self):
        cohort = exponential_cohort(300, seed=1, mean=100)
        model = fit_rist(cohort, RistParams(n_trees=3), seed=0)
        features = survival_features(cohort)
        times = cohort.reward
        for tree in model.trees:
            leaves = tree.apply(features[tree.sample])
            for leaf in tree.leaves:
                leaf_times = times[tree.sample[leaves == leaf]]
                km_times, km_surv = tree.leaf_curve(leaf)
                for t, s in zip(km_times, km_surv):
                    self.assertAlmostEqual(s, np.mean(leaf_times > t))

    def test_planted_hazard_split(self):
        rng = np.random.default_rng(2)
        n = 600
        X = rng.uniform(-1, 1, size=(n, 3))
        time = rng.exponential(np.where(X[:, 0] > 0, 30.0, 300.0))
        cohort = restrict_horizon(Cohort(
            schema=('x1', 'x2', 'x3'), ids=range(n), covariates=X,
            treatment=np.where(rng.random(n) < 0.5, 1, -1), time=time, event=np.ones(n, bool),
        ), 365)
        model = fit_rist(cohort, RistParams(n_trees=20), seed=3)
        on_signal = sum(tree.feature[0] == 0 for tree in model.trees)
        self.assertTrue(all(tree.depth() >= 1 for tree in model.trees))
        self.assertGreaterEqual(on_signal, 16)

    def test_same_seed_same_model(self):
        cohort = exponential_cohort(200, seed=4, censor_max=700)
        first = fit_rist(cohort, SMALL, seed=9)
        second = fit_rist(cohort, SMALL, seed=9)
        for a, b in zip(first.trees, second.trees):
            self.assertTrue(np.array_equal(a.feature, b.feature))
            self.assertTrue(np.array_equal(a.threshold, b.threshold))
            self.assertTrue(np.array_equal(a.km_surv, b.km_surv))

    def test_half_of_each_arm(self):
        cohort = exponential_cohort(201, seed=5, censor_max=700)
        tree = fit_rist(cohort, RistParams(n_trees=1), seed=0).trees[0]
        for arm in (-1, 1):
            in_arm = np.sum(cohort.treatment == arm)
            self.assertEqual(np.sum(cohort.treatment[tree.sample] == arm), -(-in_arm // 2))

    def test_leaf_invariants(self):
        cohort = exponential_cohort(400, seed=6, censor_max=700)
        model = fit_rist(cohort, RistParams(n_trees=5, min_events_per_leaf=2), seed=1)
        for tree in model.trees:
            if tree.n_nodes > 1:
                self.assertTrue(np.all(tree.n_events[tree.leaves] >= 2))
            for leaf in tree.leaves:
                km_times, km_surv = tree.leaf_curve(leaf)
                self.assertTrue(np.all(np.diff(km_surv) <= 0))
                self.assertTrue(np.all((km_surv >= 0) & (km_surv <= 1)))
                self.assertTrue(np.all(km_times < model.horizon))

    def test_no_events(self):
        cohort = restrict_horizon(Cohort(
            schema=('x',), ids=range(20), covariates=np.arange(20.0)[:, None],
            treatment=[1, -1] * 10, time=np.full(20, 400.0), event=np.ones(20, bool),
        ), 365)
        with self.assertRaises(FitError):
            fit_rist(cohort, SMALL, seed=0)

    def test_needs_horizon(self):
        cohort = Cohort(schema=('x',), ids=['a', 'b'], covariates=[[0.0], [1.0]],
                        treatment=[1, -1], time=[1.0, 2.0], event=[True, True])
        with self.assertRaises(ArgumentError):
            fit_rist(cohort, SMALL, seed=0)


class ImputeCensoredTestCase(SimpleTestCase):

    def setUp(self):
        self.cohort = exponential_cohort(400, seed=10, censor_max=770)
        self.model = fit_rist(self.cohort, SMALL, seed=0)

    def test_complete_cases_unchanged(self):
        completed = impute_censored(self.model, self.cohort, seed=1)
        known = ~self.cohort.needs_imputation
        self.assertTrue(np.array_equal(completed.reward[known], self.cohort.reward[known]))
        self.assertFalse(completed.needs_imputation.any())
        self.assertTrue(completed.has_complete_rewards)

    def test_imputed_times_within_support(self):
        completed = impute_censored(self.model, self.cohort, seed=2)
        flagged = self.cohort.needs_imputation
        self.assertTrue(flagged.any())
        self.assertTrue(np.all(completed.reward[flagged] > self.cohort.time[flagged]))
        self.assertTrue(np.all(completed.reward[flagged] <= 365))

    def test_censored_near_horizon(self):
        late = Cohort(
            schema=self.cohort.schema, ids=['late'], covariates=[[0.0, 0.0]],
            treatment=[1], time=[360.0], event=[False],
        )
        completed = draw_imputations(self.model, restrict_horizon(late, 365), seed=3)
        self.assertTrue(360 < completed.reward[0] <= 365)

    def test_no_op_without_censoring(self):
        cohort = exponential_cohort(200, seed=11)
        model = fit_rist(cohort, SMALL, seed=0)
        self.assertTrue(np.array_equal(impute_censored(model, cohort, seed=0).reward, cohort.reward))

    def test_mismatched_horizon(self):
        with self.assertRaises(ArgumentError):
            impute_censored(self.model, restrict_horizon(self.cohort, 180), seed=0)

    def test_run_is_deterministic(self):
        first = run_imputation(self.cohort, SMALL, seed=4)
        second = run_imputation(self.cohort, SMALL, seed=4)
        self.assertTrue(first.cohort.equals(second.cohort))
        self.assertEqual(len(first.history), 2)
        self.assertEqual(first.n_imputed, int(self.cohort.needs_imputation.sum()))

    @tag('slow')
    def test_completed_km_matches_true_survival(self):
        cohort = exponential_cohort(5000, seed=12, censor_max=770)
        self.assertAlmostEqual(cohort.needs_imputation.mean(), 0.3, delta=0.03)
        run = run_imputation(cohort, RistParams(), seed=5)
        flagged = cohort.needs_imputation
        self.assertTrue(np.all(run.cohort.reward[flagged] > cohort.time[flagged]))
        self.assertTrue(np.all(run.cohort.reward <= 365))
        grid = np.linspace(0, 365, 200)
        truth = np.exp(-grid / 365.0)
        completed = completed_survival(run.cohort, grid)
        self.assertLess(np.max(np.abs(completed - truth)), 0.05)
        first_cycle = completed_survival(run.history[0], grid)
        self.assertLess(np.max(np.abs(completed - first_cycle)), 0.1)
