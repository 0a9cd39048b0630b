import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from cohort.exceptions import ArgumentError, DegenerateStratumError
from toystrata.datasets import table1, table3
from toystrata.models import StratifiedTable, StratumRule
from toystrata.standardize import (
    enumerate_rules, pooled_risks, standardized_risk, stratified_optimal_rule, stratum_risks,
)
from toystrata.tableio import load_table, write_table

REDUCED, PRESERVED = (1,), (0,)


def random_table(rng, n_modifiers):
    strata = [tuple(int(b) for b in np.binary_repr(i, width=n_modifiers)) for i in range(2 ** n_modifiers)]
    counts = rng.integers(0, 60, size=(len(strata), 2, 2))
    counts[:, :, 1] += 1  # every cell non-empty
    return StratifiedTable(tuple(f'm{j}' for j in range(n_modifiers)), strata, counts)


class StratumRiskTestCase(SimpleTestCase):

    def test_table1_cells(self):
        risks = stratum_risks(table1())
        self.assertEqual(round(risks[(REDUCED, -1)], 2), 0.78)
        self.assertEqual(round(risks[(REDUCED, 1)], 2), 0.09)
        self.assertEqual(round(risks[(PRESERVED, -1)], 2), 0.25)
        self.assertEqual(round(risks[(PRESERVED, 1)], 2), 0.86)

    def test_table1_pooled(self):
        pooled = pooled_risks(table1())
        self.assertEqual(round(pooled['stratum'][REDUCED], 2), 0.70)
        self.assertEqual(round(pooled['stratum'][PRESERVED], 2), 0.36)
        self.assertEqual(round(pooled['arm'][-1], 2), 0.53)
        self.assertEqual(round(pooled['arm'][1], 2), 0.56)
        self.assertEqual(round(pooled['overall'], 2), 0.53)

    def test_zero_deaths(self):
        table = StratifiedTable(('m',), [(1,), (0,)], [((0, 10), (1, 1)), ((2, 2), (3, 3))])
        self.assertEqual(stratum_risks(table)[((1,), -1)], 0.0)

    def test_degenerate_cell_names_stratum(self):
        table = StratifiedTable(('ckd',), [(1,), (0,)], [((0, 0), (1, 1)), ((2, 2), (3, 3))])
        with self.assertRaises(DegenerateStratumError) as ctx:
            stratum_risks(table)
        self.assertIn('ckd', str(ctx.exception))


class StandardizedRiskTestCase(SimpleTestCase):

    def test_table1_rules(self):
        table = table1()
        furosemide = standardized_risk(table, StratumRule.universal(table, -1))
        torsemide = standardized_risk(table, StratumRule.universal(table, 1))
        tailored = standardized_risk(table, StratumRule.from_mapping({REDUCED: 1, PRESERVED: -1}))
        self.assertAlmostEqual(furosemide, (10100 * 7000 / 9000 + 9750 * 0.25) / 19850, places=12)
        self.assertAlmostEqual(furosemide, 0.52, delta=0.005)
        self.assertAlmostEqual(torsemide, 0.47, delta=0.005)
        self.assertAlmostEqual(tailored, 0.17, delta=0.005)

    def test_table3_rules(self):
        table = table3()
        self.assertAlmostEqual(standardized_risk(table, StratumRule.universal(table, -1)), 0.52, delta=0.005)
        self.assertAlmostEqual(standardized_risk(table, StratumRule.universal(table, 1)), 0.46, delta=0.005)
        self.assertAlmostEqual(standardized_risk(table, stratified_optimal_rule(table)), 0.15, delta=0.005)

    def test_rule_missing_stratum(self):
        with self.assertRaises(ArgumentError):
            standardized_risk(table1(), StratumRule.from_mapping({REDUCED: 1}))

    def test_invariant_to_uniform_scaling(self):
        table = table3()
        rule = stratified_optimal_rule(table)
        self.assertAlmostEqual(standardized_risk(table, rule), standardized_risk(table.scaled(7), rule), places=12)

    def test_optimal_rule_beats_every_enumerated_rule(self):
        rng = np.random.default_rng(2024)
        for trial in range(50):
            table = random_table(rng, 1 + trial % 3)
            best = standardized_risk(table, stratified_optimal_rule(table))
            for rule in enumerate_rules(table):
                self.assertLessEqual(best, standardized_risk(table, rule) + 1e-12)

    def test_enumerate_rules_count(self):
        self.assertEqual(len(list(enumerate_rules(table3()))), 2 ** 8)


class OptimalRuleTestCase(SimpleTestCase):

    def test_table1(self):
        rule = stratified_optimal_rule(table1())
        self.assertEqual(rule.as_dict(), {REDUCED: 1, PRESERVED: -1})

    def test_table3_torsemide_only_for_reduced_ef_with_ckd(self):
        rule = stratified_optimal_rule(table3())
        for (reduced_ef, t2dm, ckd), arm in rule.as_dict().items():
            self.assertEqual(arm, 1 if (reduced_ef and ckd) else -1)

    def test_tie_goes_to_default_arm(self):
        table = StratifiedTable(('m',), [(1,)], [((3, 7), (30, 70))])
        self.assertEqual(stratified_optimal_rule(table)[(1,)], -1)
        self.assertEqual(stratified_optimal_rule(table, tie_arm=1)[(1,)], 1)


class TableIoTestCase(SimpleTestCase):

    def test_write_then_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_table(table3(), Path(tmp) / 't3.csv')
            loaded = load_table(path)
        self.assertEqual(loaded.modifiers, ('reduced_ef', 't2dm', 'ckd'))
        self.assertEqual(loaded.total, 19850)
        self.assertEqual(loaded.cell((1, 1, 1), 1), (15, 400))

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_table('missing.csv')
