import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from cohort.exceptions import ArgumentError
from cohort.models import Cohort
from forest.ensemble import fit_forest, oob_error, predict
from forest.importance import aggregate_importance, oob_permutation_importance, select_top_variables, variable_importance_table
from forest.params import CLASSIFICATION, REGRESSION, ForestParams
from forest.propensity import fit_propensity
from forest.serialization import forest_to_document, forest_from_document, load_forest, save_forest
from forest.tree import gini_impurity
from synthgen.tables import generate_from_table
from toystrata.datasets import table1

FAST = ForestParams(n_trees=30)


def planted_cohort(n, seed, n_noise=10, signals=2):
    """Reward driven by the first ``signals`` covariates, the rest pure noise."""
    rng = np.random.default_rng(seed)
    p = signals + n_noise
    X = rng.uniform(-1, 1, size=(n, p))
    treatment = np.where(rng.random(n) < 0.5, 1, -1)
    reward = 200 + 60 * X[:, 0] + 60 * X[:, 1] * (signals > 1) + rng.normal(0, 10, n)
    reward = np.clip(reward, 0, 365)
    return Cohort(
        schema=tuple(f'x{j + 1}' for j in range(p)),
        ids=[f's{i}' for i in range(n)],
        covariates=X,
        treatment=treatment,
        time=reward,
        event=np.ones(n, dtype=bool),
        reward=reward,
        horizon=365,
    )



def noise_cohort(n, seed, p=4):
    """Reward independent of every covariate and of the treatment."""
    rng = np.random.default_rng(seed)
    reward = np.clip(rng.normal(200, 40, n), 0, 365)
    return Cohort(
        schema=tuple(f'x{j + 1}' for j in range(p)),
        ids=[f's{i}' for i in range(n)],
        covariates=rng.uniform(-1, 1, size=(n, p)),
        treatment=np.where(rng.random(n) < 0.5, 1, -1),
        time=reward,
        event=np.ones(n, dtype=bool),
        reward=reward,
        horizon=365,
    )

class GiniImpurityTestCase(SimpleTestCase):

    def test_known_values(self):
        self.assertAlmostEqual(gini_impurity([5, 5]), 0.5)
        self.assertEqual(gini_impurity([10, 0]), 0.0)
        self.assertAlmostEqual(gini_impurity([7, 3]), 0.42)

    def test_maximal_at_uniform_and_permutation_invariant(self):
        self.assertAlmostEqual(gini_impurity([4, 4, 4]), 2 / 3)
        self.assertGreater(gini_impurity([4, 4, 4]), gini_impurity([6, 4, 2]))
        self.assertEqual(gini_impurity([6, 4, 2]), gini_impurity([2, 6, 4]))

    def test_all_zero_counts(self):
        with self.assertRaises(ArgumentError):
            gini_impurity([0, 0])


class FitForestTestCase(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(11)
        self.X = rng.uniform(-1, 1, size=(600, 3))
        self.y = np.where(self.X[:, 0] > 0.2, 1, -1)

    def test_separable_oob_error(self):
        forest = fit_forest(self.X, self.y, CLASSIFICATION, ForestParams(n_trees=50), seed=1)
        self.assertLess(oob_error(forest, self.X, self.y), 0.05)

    def test_constant_regression_target(self):
        forest = fit_forest(self.X, np.full(600, 7.0), REGRESSION, FAST, seed=1)
        self.assertTrue(np.all(forest.predict(self.X) == 7.0))
        self.assertTrue(all(tree.n_nodes == 1 for tree in forest.trees))

    def test_same_seed_same_trees(self):
        first = fit_forest(self.X, self.y, CLASSIFICATION, FAST, seed=5)
        second = fit_forest(self.X, self.y, CLASSIFICATION, FAST, seed=5)
        for a, b in zip(first.trees, second.trees):
            self.assertTrue(np.array_equal(a.feature, b.feature))
            self.assertTrue(np.array_equal(a.threshold, b.threshold))
            self.assertTrue(np.array_equal(a.value, b.value))

    def test_result_does_not_depend_on_workers(self):
        serial = fit_forest(self.X, self.y, CLASSIFICATION, FAST, seed=5)
        parallel = fit_forest(self.X, self.y, CLASSIFICATION, FAST.with_overrides(n_jobs=2), seed=5)
        self.assertTrue(np.array_equal(serial.predict(self.X), parallel.predict(self.X)))

    def test_single_class_rejected(self):
        with self.assertRaises(ArgumentError):
            fit_forest(self.X, np.ones(600), CLASSIFICATION, FAST, seed=0)

    def test_regression_predictions_within_target_range(self):
        y = self.X[:, 1] * 10 + self.X[:, 2]
        prediction = fit_forest(self.X, y, REGRESSION, FAST, seed=2).predict(self.X)
        self.assertGreaterEqual(prediction.min(), y.min())
        self.assertLessEqual(prediction.max(), y.max())

    def test_leaves_respect_min_leaf(self):
        forest = fit_forest(self.X, self.X[:, 1], REGRESSION, ForestParams(n_trees=10, min_leaf=8), seed=3)
        for tree in forest.trees:
            leaves = tree.feature < 0
            self.assertTrue(np.all(tree.n_samples[leaves] >= 8))
            self.assertTrue(np.all(np.isfinite(tree.threshold[~leaves])))

    def test_mtry_out_of_range(self):
        with self.assertRaises(ArgumentError):
            fit_forest(self.X, self.y, CLASSIFICATION, ForestParams(n_trees=2, mtry=4), seed=0)

    @tag('slow')
    def test_more_trees_do_not_hurt_oob_error(self):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(800, 6))
        y = np.where(X[:, 0] + X[:, 1] + rng.normal(0, 0.7, 800) > 0, 1, -1)
        small = oob_error(fit_forest(X, y, CLASSIFICATION, ForestParams(n_trees=50), seed=4), X, y)
        large = oob_error(fit_forest(X, y, CLASSIFICATION, ForestParams(n_trees=500), seed=4), X, y)
        self.assertLessEqual(large, small + 0.02)


class PredictTestCase(SimpleTestCase):

    def test_single_tree_pure_leaf(self):
        params = ForestParams(n_trees=1, min_leaf=1, bootstrap=False)
        forest = fit_forest([[0.0], [1.0]], [-1, 1], CLASSIFICATION, params, seed=0)
        self.assertEqual(predict(forest, [1.0])[forest.class_column(1.0)], 1.0)

    def test_identical_stumps(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(100, 2))
        y = X[:, 0] + 0.1 * X[:, 1]
        params = ForestParams(n_trees=5, mtry=2, max_depth=1, bootstrap=False)
        forest = fit_forest(X, y, REGRESSION, params, seed=0)
        stump = forest.trees[0].predict(X)[:, 0]
        self.assertTrue(np.allclose(forest.predict(X), stump))

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(300, 4))
        y = rng.integers(0, 3, size=300)
        probs = fit_forest(X, y, CLASSIFICATION, FAST, seed=0).predict(rng.normal(size=(50, 4)))
        self.assertTrue(np.allclose(probs.sum(axis=1), 1.0))

    def test_dimension_mismatch(self):
        forest = fit_forest(np.eye(4), [0, 1, 0, 1], CLASSIFICATION, ForestParams(n_trees=2, min_leaf=1), seed=0)
        with self.assertRaises(ArgumentError):
            forest.predict([1.0, 2.0])


class PermutationImportanceTestCase(SimpleTestCase):

    def test_planted_signal_is_most_important(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(-1, 1, size=(600, 10))
        y = np.sign(X[:, 0])
        forest = fit_forest(X, y, CLASSIFICATION, ForestParams(n_trees=60), seed=2)
        result = oob_permutation_importance(forest, X, y, seed=2)
        self.assertEqual(int(np.argmax(result.scores)), 0)
        self.assertTrue(np.all(result.scores[0] > result.scores[1:]))
        quiet = sum(result.within_noise(j) for j in range(1, 10))
        self.assertGreaterEqual(quiet, 7)

    def test_independent_covariate_within_noise(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(-1, 1, size=(600, 2))
        y = 3 * X[:, 0] + rng.normal(0, 0.5, 600)
        forest = fit_forest(X, y, REGRESSION, ForestParams(n_trees=60), seed=5)
        result = oob_permutation_importance(forest, X, y, seed=5)
        self.assertTrue(result.within_noise(1))
        self.assertFalse(result.within_noise(0))

    def test_pure_noise_cohort(self):
        cohort = noise_cohort(400, seed=14)
        summary = aggregate_importance(variable_importance_table(cohort, k=3, seed=0, params=FAST), cohort.schema)
        self.assertTrue((summary['mean_importance'] <= 2 * summary['mean_importance_se']).all())

    def test_duplicated_signal_shares_importance(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, size=600)
        X = np.column_stack([x, x, rng.uniform(-1, 1, size=(600, 3))])
        y = np.sign(x)
        forest = fit_forest(X, y, CLASSIFICATION, ForestParams(n_trees=60), seed=3)
        result = oob_permutation_importance(forest, X, y, seed=3)
        self.assertGreater(result.scores[0], 0)
        self.assertGreater(result.scores[1], 0)

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(200, 3))
        y = X[:, 0] * 3
        forest = fit_forest(X, y, REGRESSION, FAST, seed=1)
        first = oob_permutation_importance(forest, X, y, seed=4)
        second = oob_permutation_importance(forest, X, y, seed=4)
        self.assertTrue(np.array_equal(first.per_tree, second.per_tree))

    def test_gini_importance_favours_signal(self):
        rng = np.random.default_rng(12)
        X = rng.uniform(-1, 1, size=(400, 4))
        forest = fit_forest(X, np.sign(X[:, 2]), CLASSIFICATION, FAST, seed=0)
        self.assertEqual(int(np.argmax(forest.gini_importance())), 2)


class SelectTopVariablesTestCase(SimpleTestCase):

    def setUp(self):
        self.cohort = planted_cohort(300, seed=1, n_noise=3)
        self.params = ForestParams(n_trees=20)

    def test_all_covariates_when_m_equals_p(self):
        selected = select_top_variables(self.cohort, k=3, m=self.cohort.p, seed=0, params=self.params)
        self.assertEqual(sorted(selected), sorted(self.cohort.schema))
        self.assertEqual(set(selected[:2]), {'x1', 'x2'})

    def test_deterministic(self):
        first = select_top_variables(self.cohort, k=3, m=2, seed=6, params=self.params)
        second = select_top_variables(self.cohort, k=3, m=2, seed=6, params=self.params)
        self.assertEqual(first, second)

    def test_per_fold_table_shape(self):
        per_fold = variable_importance_table(self.cohort, k=3, seed=0, params=self.params)
        self.assertEqual(len(per_fold), 3 * self.cohort.p)
        summary = aggregate_importance(per_fold, self.cohort.schema)
        self.assertEqual(list(summary['aggregate_rank']), list(range(1, self.cohort.p + 1)))

    def test_m_larger_than_p(self):
        with self.assertRaises(ArgumentError):
            select_top_variables(self.cohort, k=3, m=self.cohort.p + 1, seed=0)

    @tag('slow')
    def test_planted_signals_selected_across_seeds(self):
        hits = 0
        for seed in range(10):
            cohort = planted_cohort(500, seed=100 + seed)
            selected = select_top_variables(cohort, k=10, m=2, seed=seed, params=ForestParams(n_trees=50))
            hits += set(selected) == {'x1', 'x2'}
        self.assertGreaterEqual(hits, 9)


class PropensityTestCase(SimpleTestCase):

    def test_randomized_assignment(self):
        rng = np.random.default_rng(13)
        n = 1000
        cohort = Cohort(
            schema=('x1', 'x2'), ids=range(n), covariates=rng.normal(size=(n, 2)),
            treatment=np.where(rng.random(n) < 0.5, 1, -1), time=np.ones(n), event=np.ones(n, bool),
        )
        model = fit_propensity(cohort, ForestParams(n_trees=50), seed=0)
        self.assertTrue(0.45 <= model.prob_treated(cohort.X).mean() <= 0.55)

    def test_deterministic_assignment_hits_clip(self):
        rng = np.random.default_rng(14)
        x = rng.uniform(-3, 3, size=400)
        cohort = Cohort(
            schema=('x1',), ids=range(400), covariates=x[:, None],
            treatment=np.where(x > 0, 1, -1), time=np.ones(400), event=np.ones(400, bool),
        )
        model = fit_propensity(cohort, FAST, seed=0, clip=0.01)
        self.assertTrue(np.allclose(model.prob_treated([[-2.9], [2.9]]), [0.01, 0.99]))
        scores = model.for_cohort(cohort)
        self.assertTrue(np.all((scores >= 0.01) & (scores <= 0.99)))

    def test_table1_arm_share_per_stratum(self):
        cohort = generate_from_table(table1(), seed=0)
        model = fit_propensity(cohort, ForestParams(n_trees=20), seed=0)
        self.assertAlmostEqual(model.prob_treated([[1.0]])[0], 1100 / 10100, delta=0.03)

    def test_single_arm_rejected(self):
        cohort = Cohort(schema=('x',), ids=['a', 'b'], covariates=[[0.0], [1.0]],
                        treatment=[1, 1], time=[1.0, 2.0], event=[True, True])
        with self.assertRaises(ArgumentError):
            fit_propensity(cohort)


class SerializationTestCase(SimpleTestCase):

    def test_saved_forest_predicts_identically(self):
        rng = np.random.default_rng(15)
        X = rng.normal(size=(200, 3))
        y = np.where(X[:, 0] > 0, 1, -1)
        forest = fit_forest(X, y, CLASSIFICATION, ForestParams(n_trees=10), seed=1)
        with tempfile.TemporaryDirectory() as tmp:
            loaded = load_forest(save_forest(forest, Path(tmp) / 'forest.json'))
        self.assertTrue(np.array_equal(loaded.predict(X), forest.predict(X)))
        self.assertEqual(loaded.classes, forest.classes)

    def test_reloaded_forest_keeps_gini_importance(self):
        rng = np.random.default_rng(16)
        X = rng.uniform(-1, 1, size=(300, 3))
        for mode, y in ((CLASSIFICATION, np.sign(X[:, 1])), (REGRESSION, 5 * X[:, 2] + rng.normal(0, 0.1, 300))):
            with self.subTest(mode=mode):
                forest = fit_forest(X, y, mode, ForestParams(n_trees=10), seed=2)
                reloaded = forest_from_document(forest_to_document(forest))
                np.testing.assert_allclose(reloaded.gini_importance(), forest.gini_importance())
                self.assertGreater(reloaded.gini_importance().max(), 0)

    def test_documents_without_impurity_still_load(self):
        forest = fit_forest(np.eye(4), [0, 1, 0, 1], CLASSIFICATION, ForestParams(n_trees=1, min_leaf=1), seed=0)
        document = forest_to_document(forest)
        document['format_version'] = '1.0'

        def strip(nested):
            if len(nested) == 3:
                return nested[:2]
            return [nested[0], nested[1], strip(nested[2]), strip(nested[3])]

        for entry in document['trees']:
            entry['nodes'] = strip(entry['nodes'])
        loaded = forest_from_document(document)
        self.assertTrue(np.array_equal(loaded.predict(np.eye(4)), forest.predict(np.eye(4))))

    def test_other_major_version_rejected(self):
        forest = fit_forest(np.eye(4), [0, 1, 0, 1], CLASSIFICATION, ForestParams(n_trees=1, min_leaf=1), seed=0)
        document = forest_to_document(forest)
        document['format_version'] = '2.0'
        with self.assertRaises(ArgumentError):
            forest_from_document(document)
