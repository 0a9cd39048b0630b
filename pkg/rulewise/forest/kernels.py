"""Compiled tree-growing kernels.

Trees are stored as flat node arrays. Random choices are drawn by the caller
and passed in as ``feature_keys`` (one row of sort keys per node), so a tree
is a pure function of its inputs.
"""
import numpy as np
from numba import njit

GAIN_TOLERANCE = 1e-12


def node_capacity(n_samples, min_leaf):
    return 2 * (n_samples // max(min_leaf, 1)) + 1


@njit(cache=True)
def _node_summary(y, order, s, e, n_classes, out):
    cnt = e - s
    if n_classes > 0:
        for c in range(n_classes):
            out[c] = 0.0
        for i in range(s, e):
            out[int(y[order[i]])] += 1.0
        sq = 0.0
        for c in range(n_classes):
            out[c] /= cnt
            sq += out[c] * out[c]
        return 1.0 - sq
    total = 0.0
    total_sq = 0.0
    for i in range(s, e):
        v = y[order[i]]
        total += v
        total_sq += v * v
    mean = total / cnt
    out[0] = mean
    variance = total_sq / cnt - mean * mean
    return variance if variance > 0.0 else 0.0


@njit(cache=True)
def _scan_feature(X, y, order, s, e, f, n_classes, min_leaf, xs, ys, left_counts, total_counts):
    """Best (cost, threshold) for splitting order[s:e] on feature f; cost is inf if none."""
    cnt = e - s
    for i in range(cnt):
        xs[i] = X[order[s + i], f]
    perm = np.argsort(xs[:cnt], kind='mergesort')
    for i in range(cnt):
        ys[i] = y[order[s + perm[i]]]
    best_cost = np.inf
    best_threshold = 0.0
    if n_classes > 0:
        for c in range(n_classes):
            left_counts[c] = 0.0
            total_counts[c] = 0.0
        for i in range(cnt):
            total_counts[int(ys[i])] += 1.0
        for i in range(cnt - 1):
            left_counts[int(ys[i])] += 1.0
            nl = i + 1
            nr = cnt - nl
            lo = xs[perm[i]]
            hi = xs[perm[i + 1]]
            if nl < min_leaf or nr < min_leaf or not lo < hi:
                continue
            sq_l = 0.0
            sq_r = 0.0
            for c in range(n_classes):
                pl = left_counts[c] / nl
                pr = (total_counts[c] - left_counts[c]) / nr
                sq_l += pl * pl
                sq_r += pr * pr
            cost = (nl * (1.0 - sq_l) + nr * (1.0 - sq_r)) / cnt
            if cost < best_cost:
                best_cost = cost
                best_threshold = lo + (hi - lo) / 2.0
                if not best_threshold < hi:
                    best_threshold = lo
    else:
        total = 0.0
        total_sq = 0.0
        for i in range(cnt):
            total += ys[i]
            total_sq += ys[i] * ys[i]
        run = 0.0
        run_sq = 0.0
        for i in range(cnt - 1):
            run += ys[i]
            run_sq += ys[i] * ys[i]
            nl = i + 1
            nr = cnt - nl
            lo = xs[perm[i]]
            hi = xs[perm[i + 1]]
            if nl < min_leaf or nr < min_leaf or not lo < hi:
                continue
            sse_l = run_sq - run * run / nl
            rest = total - run
            sse_r = (total_sq - run_sq) - rest * rest / nr
            cost = (sse_l + sse_r) / cnt
            if cost < 0.0:
                cost = 0.0
            if cost < best_cost:
                best_cost = cost
                best_threshold = lo + (hi - lo) / 2.0
                if not best_threshold < hi:
                    best_threshold = lo
    return best_cost, best_threshold


@njit(cache=True)
def _partition(X, order, s, e, f, threshold, scratch):
    """Stable partition of order[s:e] into (x <= threshold, x > threshold); returns the split point."""
    k = 0
    for i in range(s, e):
        if X[order[i], f] <= threshold:
            scratch[k] = order[i]
            k += 1
    mid = s + k
    for i in range(s, e):
        if X[order[i], f] > threshold:
            scratch[k] = order[i]
            k += 1
    for i in range(e - s):
        order[s + i] = scratch[i]
    return mid


@njit(cache=True)
def grow_tree(X, y, n_classes, sample, min_leaf, max_depth, mtry, feature_keys):
    """Grow one CART tree on rows ``sample`` of (X, y).

    ``n_classes`` > 0 selects Gini classification (y holds class codes),
    0 selects variance regression. ``max_depth`` < 0 means unlimited.
    """
    m = sample.shape[0]
    p = X.shape[1]
    n_out = n_classes if n_classes > 0 else 1
    cap = feature_keys.shape[0]

    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros((cap, n_out))
    n_samples = np.zeros(cap, np.int64)
    impurity = np.zeros(cap)
    depth = np.zeros(cap, np.int64)
    start = np.zeros(cap, np.int64)
    end = np.zeros(cap, np.int64)

    order = sample.copy()
    scratch = np.empty(m, np.int64)
    xs = np.empty(m)
    ys = np.empty(m)
    left_counts = np.zeros(max(n_classes, 1))
    total_counts = np.zeros(max(n_classes, 1))
    summary = np.zeros(n_out)

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
        imp = _node_summary(y, order, s, e, n_classes, summary)
        for c in range(n_out):
            value[node, c] = summary[c]
        n_samples[node] = cnt
        impurity[node] = imp

        if cnt < 2 * min_leaf or imp <= 1e-14 or (max_depth >= 0 and depth[node] >= max_depth):
            continue
        if n_nodes + 2 > cap:
            continue

        candidates = np.sort(np.argsort(feature_keys[node])[:mtry])
        best_cost = imp
        best_feature = -1
        best_threshold = 0.0
        for f in candidates:
            cost, thr = _scan_feature(X, y, order, s, e, f, n_classes, min_leaf, xs, ys, left_counts, total_counts)
            if cost < best_cost - GAIN_TOLERANCE:
                best_cost = cost
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
        depth[n_nodes] = depth[node] + 1
        depth[n_nodes + 1] = depth[node] + 1
        stack[top] = n_nodes + 1
        stack[top + 1] = n_nodes
        top += 2
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], n_samples[:n_nodes], impurity[:n_nodes])


@njit(cache=True)
def apply_tree(feature, threshold, left, right, X):
    """Leaf index reached by every row of X."""
    n = X.shape[0]
    leaves = np.empty(n, np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        leaves[i] = node
    return leaves
