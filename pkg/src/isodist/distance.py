"""Pairwise separation-depth distances and per-row anomaly scores.

Traversal mirrors fitting: every node a pair shares contributes w_i*w_j to
its depth sum and a shared terminal contributes 3*w_i*w_j instead (3 being
the expected continuation depth under an infinite same-distribution
sample), so on fully observed data the accumulated value per tree equals
the pair's separation depth.  Rows with missing values or categories the
split never saw go down both branches with weights scaled by the stored
left-branch proportion (single-variable trees) or contribute their stored
median imputation to the hyperplane projection (extended trees).

Depth sums are averaged over trees and squashed through
2^(-(avg-1)/2), giving distances in (0, 1] with 0.5 the expected value
for two random points.  Duplicated rows are collapsed before traversal
and expanded back with distance 0, since the depth expectation breaks on
true duplicates.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import depth as depth_math
from .data import Dataset, deduplicate
from .forest import (
    WEIGHT_FLOOR,
    FitError,
    Forest,
    HyperplaneSplit,
    NumericSplit,
    Terminal,
    remap_dataset,
)
from .matrix import CondensedMatrix


def _route_single(node, ds, idx, w):
    """Split (idx, w) into left/right row sets per a single-variable node.

    Missing values and unseen categories appear on BOTH sides with weights
    scaled by b_l / (1 - b_l); copies below the weight floor are dropped.
    """
    col = ds.columns[node.var]
    vals = col.values[idx]
    known = ~col.missing[idx]
    if isinstance(node, NumericSplit):
        left = known & (vals <= node.threshold)
        right = known & ~left
    else:
        in_domain = known & (vals >= 0) & (vals < len(node.present))
        seen = np.zeros(len(idx), dtype=bool)
        seen[in_domain] = node.present[vals[in_domain]]
        in_left = np.zeros(len(idx), dtype=bool)
        in_left[in_domain] = node.left_set[vals[in_domain]]
        left = seen & in_left
        right = seen & ~in_left
        known = seen
    both = ~known
    b = node.left_fraction
    idx_l = np.concatenate([idx[left], idx[both]])
    w_l = np.concatenate([w[left], b * w[both]])
    idx_r = np.concatenate([idx[right], idx[both]])
    w_r = np.concatenate([w[right], (1.0 - b) * w[both]])
    keep_l = w_l >= WEIGHT_FLOOR
    keep_r = w_r >= WEIGHT_FLOOR
    return idx_l[keep_l], w_l[keep_l], idx_r[keep_r], w_r[keep_r]


def _project_extended(node: HyperplaneSplit, ds, idx):
    """Recompute the hyperplane projection for rows `idx`; unknown cells
    (missing, or categories without a stored coefficient) contribute the
    stored imputation value."""
    y = np.zeros(len(idx))
    for var, coef, r in zip(node.num_vars, node.num_coefs, node.num_imputes):
        col = ds.columns[var]
        vals = col.values[idx]
        known = ~col.missing[idx]
        y += np.where(known, coef * vals, r)
    for var, coefs, r in zip(node.cat_vars, node.cat_coefs, node.cat_imputes):
        col = ds.columns[var]
        vals = col.values[idx]
        in_domain = ~col.missing[idx] & (vals >= 0) & (vals < len(coefs))
        contrib = np.full(len(idx), r)
        picked = coefs[vals[in_domain]]
        contrib[in_domain] = np.where(np.isnan(picked), r, picked)
        y += contrib
    return y


def _route_extended(node, ds, idx):
    y = _project_extended(node, ds, idx)
    left = y <= node.threshold
    return idx[left], idx[~left]


def _acc_depths_single(node, ds, idx, w, D):
    if len(idx) < 2:
        return
    if isinstance(node, Terminal):
        D[np.ix_(idx, idx)] += 3.0 * np.outer(w, w)
        return
    D[np.ix_(idx, idx)] += np.outer(w, w)
    idx_l, w_l, idx_r, w_r = _route_single(node, ds, idx, w)
    _acc_depths_single(node.left, ds, idx_l, w_l, D)
    _acc_depths_single(node.right, ds, idx_r, w_r, D)


def _acc_depths_extended(node, ds, idx, D):
    if len(idx) < 2:
        return
    if isinstance(node, Terminal):
        D[np.ix_(idx, idx)] += 3.0
        return
    D[np.ix_(idx, idx)] += 1.0
    idx_l, idx_r = _route_extended(node, ds, idx)
    _acc_depths_extended(node.left, ds, idx_l, D)
    _acc_depths_extended(node.right, ds, idx_r, D)


def tree_depth_sums(forest: Forest, tree, ds: Dataset) -> np.ndarray:
    """Raw pair separation-depth sums for one tree (square array).

    `ds` must already be schema-compatible; rows are traversed as given
    (no deduplication), each with initial weight 1.
    """
    ds = remap_dataset(forest, ds)
    n = ds.n_rows
    D = np.zeros((n, n))
    idx = np.arange(n)
    if forest.params.model_kind == "single":
        _acc_depths_single(tree, ds, idx, np.ones(n), D)
    else:
        _acc_depths_extended(tree, ds, idx, D)
    return D


def _depth_sum_matrix(forest: Forest, ds: Dataset, threads: int = 1) -> np.ndarray:
    n = ds.n_rows
    idx = np.arange(n)
    single = forest.params.model_kind == "single"

    def run(trees):
        D = np.zeros((n, n))
        for tree in trees:
            if single:
                _acc_depths_single(tree, ds, idx, np.ones(n), D)
            else:
                _acc_depths_extended(tree, ds, idx, D)
        return D

    if threads <= 1:
        return run(forest.trees)
    chunks = [forest.trees[i::threads] for i in range(threads)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run, chunks))
    total = parts[0]
    for p in parts[1:]:
        total += p
    return total


def separation_matrix(forest: Forest, ds: Dataset, threads: int = 1) -> CondensedMatrix:
    """Standardized pairwise distance matrix for the rows of `ds`.

    Exact duplicates are collapsed before traversal and expanded back with
    intra-duplicate distance 0.
    """
    if ds.n_rows < 2:
        raise FitError("need at least 2 rows for a distance matrix")
    ds = remap_dataset(forest, ds)
    rep_ds, gmap = deduplicate(ds)
    n = ds.n_rows
    if rep_ds.n_rows < 2:
        return CondensedMatrix(n)  # all rows identical
    D = _depth_sum_matrix(forest, rep_ds, threads=threads)
    avg = D / len(forest.trees)
    iu = np.triu_indices(rep_ds.n_rows, k=1)
    rep = CondensedMatrix(rep_ds.n_rows, depth_math.standardize_separation(avg[iu]))
    if rep_ds.n_rows == n:
        return rep
    full = rep.to_square()[np.ix_(gmap, gmap)]
    return CondensedMatrix.from_square(full)


def pair_distance(forest: Forest, ds: Dataset, i: int, j: int) -> float:
    """Distance between rows i and j of `ds`; bitwise-identical rows are 0
    without any traversal, and the result equals the full-matrix entry."""
    if ds.row_key(i) == ds.row_key(j):
        return 0.0
    sub = ds.take([i, j])
    return separation_matrix(forest, sub)[0, 1]


def _acc_iso_single(node, ds, idx, w, depth, out):
    if len(idx) == 0:
        return
    if isinstance(node, Terminal):
        n_eff = max(1, int(round(node.size)))
        np.add.at(out, idx, w * (depth + depth_math.expected_isolation(n_eff)))
        return
    idx_l, w_l, idx_r, w_r = _route_single(node, ds, idx, w)
    _acc_iso_single(node.left, ds, idx_l, w_l, depth + 1, out)
    _acc_iso_single(node.right, ds, idx_r, w_r, depth + 1, out)


def _acc_iso_extended(node, ds, idx, depth, out):
    if len(idx) == 0:
        return
    if isinstance(node, Terminal):
        n_eff = max(1, int(round(node.size)))
        out[idx] += depth + depth_math.expected_isolation(n_eff)
        return
    idx_l, idx_r = _route_extended(node, ds, idx)
    _acc_iso_extended(node.left, ds, idx_l, depth + 1, out)
    _acc_iso_extended(node.right, ds, idx_r, depth + 1, out)


def anomaly_scores(forest: Forest, ds: Dataset) -> np.ndarray:
    """Standardized outlier score per row, in (0, 1]; higher = more anomalous.

    Average isolation depth over trees, with the expected-isolation
    continuation for the points remaining in each terminal at fit time,
    standardized against the expectation for the fitted subsample size.
    """
    ds = remap_dataset(forest, ds)
    n = ds.n_rows
    depths = np.zeros(n)
    idx = np.arange(n)
    single = forest.params.model_kind == "single"
    for tree in forest.trees:
        if single:
            _acc_iso_single(tree, ds, idx, np.ones(n), 0, depths)
        else:
            _acc_iso_extended(tree, ds, idx, 0, depths)
    avg = depths / len(forest.trees)
    return depth_math.standardize_isolation(avg, max(2, forest.n_sub))
