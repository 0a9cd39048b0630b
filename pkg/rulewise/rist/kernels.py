"""Compiled survival-tree kernels: log-rank scoring and extremely randomized growth."""
import numpy as np
from numba import njit

from forest.kernels import _partition

GAIN_TOLERANCE = 1e-12


@njit(cache=True)
def logrank_sorted(times, events, is_left):
    """Two-sample log-rank chi-square on samples sorted by time.

    Returns -1.0 when there is no event at all.
    """
    n_total = times.shape[0]
    at_risk = float(n_total)
    at_risk_left = 0.0
    total_events = 0
    for i in range(n_total):
        if is_left[i]:
            at_risk_left += 1.0
        if events[i]:
            total_events += 1
    if total_events == 0:
        return -1.0
    observed_minus_expected = 0.0
    variance = 0.0
    i = 0
    while i < n_total:
        j = i
        d = 0.0
        d_left = 0.0
        leaving_left = 0.0
        while j < n_total and times[j] == times[i]:
            if events[j]:
                d += 1.0
                if is_left[j]:
                    d_left += 1.0
            if is_left[j]:
                leaving_left += 1.0
            j += 1
        if d > 0.0:
            share = at_risk_left / at_risk
            observed_minus_expected += d_left - d * share
            if at_risk > 1.0:
                variance += d * share * (1.0 - share) * (at_risk - d) / (at_risk - 1.0)
        at_risk -= j - i
        at_risk_left -= leaving_left
        i = j
    if variance <= 0.0:
        return 0.0
    return observed_minus_expected * observed_minus_expected / variance


@njit(cache=True)
def _leaf_survival(times, events, order, start, end, feature):
    """Kaplan-Meier step function of every leaf, packed as (ptr, times, survival)."""
    n_nodes = feature.shape[0]
    ptr = np.zeros(n_nodes + 1, np.int64)
    km_times = np.empty(order.shape[0])
    km_surv = np.empty(order.shape[0])
    k = 0
    for node in range(n_nodes):
        ptr[node] = k
        if feature[node] >= 0:
            continue
        s = start[node]
        e = end[node]
        at_risk = float(e - s)
        surv = 1.0
        i = s
        while i < e:
            t = times[order[i]]
            j = i
            d = 0.0
            while j < e and times[order[j]] == t:
                if events[order[j]]:
                    d += 1.0
                j += 1
            if d > 0.0:
                surv *= 1.0 - d / at_risk
                km_times[k] = t
                km_surv[k] = surv
                k += 1
            at_risk -= j - i
            i = j
    ptr[n_nodes] = k
    return ptr, km_times[:k].copy(), km_surv[:k].copy()


@njit(cache=True)
def grow_survival_tree(X, times, events, sample, min_leaf, min_events, mtry, n_random_splits,
                       feature_keys, split_draws):
    """Grow one extremely randomized survival tree on rows ``sample``.

    ``sample`` must be ordered by time. Each candidate covariate gets
    ``n_random_splits`` uniform thresholds between its node minimum and
    maximum; the largest log-rank statistic wins. Children keep at least
    ``min_leaf`` rows and ``min_events`` events.
    """
    m = sample.shape[0]
    cap = feature_keys.shape[0]

    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    n_samples = np.zeros(cap, np.int64)
    n_events = np.zeros(cap, np.int64)
    start = np.zeros(cap, np.int64)
    end = np.zeros(cap, np.int64)

    order = sample.copy()
    scratch = np.empty(m, np.int64)
    node_times = np.empty(m)
    node_events = np.empty(m, np.bool_)
    is_left = np.empty(m, np.bool_)

    stack = np.empty(cap, np.int64)
    top = 1
    stack[0] = 0
    end[0] = m
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top]
        s = start[node]
        e = end[node]
        cnt = e - s
        d_node = 0
        for i in range(cnt):
            node_times[i] = times[order[s + i]]
            node_events[i] = events[order[s + i]]
            if node_events[i]:
                d_node += 1
        n_samples[node] = cnt
        n_events[node] = d_node

        if cnt < 2 * min_leaf or d_node < 2 * min_events or n_nodes + 2 > cap:
            continue

        candidates = np.sort(np.argsort(feature_keys[node])[:mtry])
        best_stat = 0.0
        best_feature = -1
        best_threshold = 0.0
        for ci in range(candidates.shape[0]):
            f = candidates[ci]
            lo = np.inf
            hi = -np.inf
            for i in range(cnt):
                v = X[order[s + i], f]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            if not lo < hi:
                continue
            for r in range(n_random_splits):
                thr = lo + split_draws[node, ci * n_random_splits + r] * (hi - lo)
                nl = 0
                el = 0
                for i in range(cnt):
                    flag = X[order[s + i], f] <= thr
                    is_left[i] = flag
                    if flag:
                        nl += 1
                        if node_events[i]:
                            el += 1
                if nl < min_leaf or cnt - nl < min_leaf or el < min_events or d_node - el < min_events:
                    continue
                stat = logrank_sorted(node_times[:cnt], node_events[:cnt], is_left[:cnt])
                if stat > best_stat + GAIN_TOLERANCE:
                    best_stat = stat
                    best_feature = f
                    best_threshold = thr
        if best_feature < 0:
            continue

        mid = _partition(X, order, s, e, best_feature, best_threshold, scratch)
        feature[node] = best_feature
        threshold[node] = best_threshold
        start[n_nodes] = s
        end[n_nodes] = mid
        start[n_nodes + 1] = mid
        end[n_nodes + 1] = e
        stack[top] = n_nodes + 1
        stack[top + 1] = n_nodes
        top += 2
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2

    ptr, km_times, km_surv = _leaf_survival(
        times, events, order, start[:n_nodes], end[:n_nodes], feature[:n_nodes]
    )
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            n_samples[:n_nodes], n_events[:n_nodes], ptr, km_times, km_surv)
