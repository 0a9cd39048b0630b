import numpy as np

from cohort.exceptions import ArgumentError
from cohort.models import ARMS, FoldAssignment


def kfold_split(cohort, k, seed):
    """Assign subjects to ``k`` folds, stratified by treatment arm.

    Each arm is shuffled and the two shuffled arms are dealt round-robin as
    one sequence, so fold sizes differ by at most one overall and per arm.
    """
    if k < 2:
        raise ArgumentError(f'k must be at least 2, got {k}')
    if k > cohort.n:
        raise ArgumentError(f'k={k} exceeds the cohort size {cohort.n}')

    rng = np.random.default_rng(seed)
    order = np.concatenate([
        rng.permutation(np.flatnonzero(cohort.treatment == arm)) for arm in ARMS
    ])
    assignment = np.empty(cohort.n, dtype=np.int64)
    assignment[order] = np.arange(cohort.n) % k
    return FoldAssignment(k=k, assignment=assignment, seed=seed)


def spawn_seeds(seed, count):
    """``count`` independent integer seeds derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]
