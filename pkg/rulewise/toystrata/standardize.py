import itertools
from fractions import Fraction

from cohort.exceptions import ArgumentError, DegenerateStratumError
from cohort.models import ARMS
from toystrata.models import StratumRule


def _risk_fraction(table, stratum, arm):
    died, alive = table.cell(stratum, arm)
    if died + alive == 0:
        raise DegenerateStratumError(table.describe(stratum), arm)
    return Fraction(died, died + alive)


def stratum_risks(table):
    """Mortality risk died / (died + alive) for every (stratum, arm) cell."""
    return {
        (stratum, arm): float(_risk_fraction(table, stratum, arm))
        for stratum in table.strata
        for arm in ARMS
    }


def pooled_risks(table):
    """Risks pooled over arms per stratum, over strata per arm, and overall."""
    risks = {'stratum': {}, 'arm': {}}
    for s, stratum in enumerate(table.strata):
        died, total = table.counts[s, :, 0].sum(), table.counts[s].sum()
        if total == 0:
            raise DegenerateStratumError(table.describe(stratum))
        risks['stratum'][stratum] = float(Fraction(int(died), int(total)))
    for a, arm in enumerate(ARMS):
        died, total = table.counts[:, a, 0].sum(), table.counts[:, a].sum()
        if total == 0:
            raise ArgumentError(f'arm {arm:+d} has no subjects')
        risks['arm'][arm] = float(Fraction(int(died), int(total)))
    risks['overall'] = float(Fraction(int(table.counts[:, :, 0].sum()), table.total))
    return risks


def standardized_risk(table, rule):
    """Counterfactual risk if every subject in stratum s received rule(s).

    Weights are stratum prevalences N_s / N over both arms.
    """
    assigned = rule.as_dict()
    missing = [stratum for stratum in table.strata if stratum not in assigned]
    if missing:
        raise ArgumentError(f'rule does not assign stratum {table.describe(missing[0])}')
    weighted = sum(
        (int(n_s) * _risk_fraction(table, stratum, assigned[stratum])
         for stratum, n_s in zip(table.strata, table.stratum_totals())),
        Fraction(0),
    )
    return float(weighted / table.total)


def stratified_optimal_rule(table, tie_arm=-1):
    """Per stratum, the arm with strictly lower risk; ties go to ``tie_arm``."""
    if tie_arm not in ARMS:
        raise ArgumentError(f'tie arm must be -1 or +1, got {tie_arm}')
    choice = {}
    for stratum in table.strata:
        control, treated = (_risk_fraction(table, stratum, arm) for arm in ARMS)
        if control < treated:
            choice[stratum] = -1
        elif treated < control:
            choice[stratum] = 1
        else:
            choice[stratum] = tie_arm
    return StratumRule.from_mapping(choice)


def enumerate_rules(table):
    """Every one of the 2^S stratum rules."""
    for arms in itertools.product(ARMS, repeat=len(table.strata)):
        yield StratumRule.from_mapping(dict(zip(table.strata, arms)))
