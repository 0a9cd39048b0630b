import numpy as np

from cohort.exceptions import ArgumentError, UndefinedValueError


def value_from_decisions(reward, treatment, decisions, received, normalized=True):
    """IPW value of a rule from its decisions and the received-arm probabilities.

    Unnormalized: sum_i Y_i 1{A_i = d_i} / pi_i / n. Normalized (Hajek): the
    same numerator over sum_i 1{A_i = d_i} / pi_i.
    """
    reward = np.asarray(reward, dtype=float)
    received = np.asarray(received, dtype=float)
    if np.any(~np.isfinite(reward)):
        raise ArgumentError('rewards must be complete; impute censored subjects first')
    if np.any(received <= 0) or np.any(received > 1):
        raise ArgumentError('received-arm probabilities must lie in (0, 1]')
    match = np.asarray(treatment) == np.asarray(decisions)
    if not match.any():
        raise UndefinedValueError('no subject received the arm the rule recommends')
    weights = match / received
    numerator = float(np.sum(weights * reward))
    if normalized:
        return numerator / float(np.sum(weights))
    return numerator / len(reward)


def ipw_value(cohort, rule, propensity, normalized=True):
    cohort.require_complete_rewards()
    decisions = np.asarray(rule.apply(cohort.X)).reshape(-1)
    return value_from_decisions(cohort.reward, cohort.treatment, decisions, propensity.for_cohort(cohort), normalized)
