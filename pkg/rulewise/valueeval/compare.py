import numpy as np

from cohort.exceptions import ArgumentError
from valueeval.models import mean_interval


def _check_comparable(estimate, comparator):
    if estimate.n_folds != comparator.n_folds or estimate.fold_signature != comparator.fold_signature:
        raise ArgumentError(
            f'{estimate.learner} and {comparator.learner} were not evaluated on the same folds'
        )
    if estimate.horizon != comparator.horizon:
        raise ArgumentError(
            f'{estimate.learner} ({estimate.horizon} days) and {comparator.learner} '
            f'({comparator.horizon} days) use different horizons'
        )


def paired_difference(estimate, comparator):
    """(difference, low, high) from the per-fold paired differences."""
    _check_comparable(estimate, comparator)
    differences = np.asarray(estimate.fold_values) - np.asarray(comparator.fold_values)
    point, _, low, high = mean_interval(differences)
    return point, low, high


def compare_to_zero_order(results, zero_order):
    """Estimates with their paired difference against ``zero_order``.

    The comparator comes first and carries no difference; the other
    learners follow in the order of ``results``.
    """
    compared = [zero_order]
    for learner, estimate in results.items():
        if learner == zero_order.learner:
            continue
        compared.append(estimate.with_difference(paired_difference(estimate, zero_order)))
    return compared
