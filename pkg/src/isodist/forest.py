"""Randomized isolation-tree ensembles over mixed-type data.

Two tree families:

* single-variable trees: one random variable per node; numeric nodes draw
  a uniform threshold inside the node's observed range, categorical nodes
  send a random proper subset of the present categories left.  Rows with
  a missing split value go down BOTH branches carrying weights scaled by
  the left-branch proportion b_l.
* extended (hyperplane) trees: up to `ndim` variables combine linearly;
  numeric coefficients are Normal(0,1) scaled by the node-local standard
  deviation, each present category of a categorical variable gets its own
  Normal(0,1) coefficient, and missing cells contribute the median of the
  observed contributions, so every row routes deterministically.

Trees are grown independently with per-tree RNG streams spawned from
(seed, tree index), so fitting is reproducible regardless of how many
workers run and parallelizable across trees.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import UNSEEN_CODE, Column, Dataset

FORMAT_VERSION = 1

# Rows whose accumulated weight drops below this are dropped from a node;
# both-branch routing of missing values would otherwise blow up node sizes.
WEIGHT_FLOOR = 1e-8

# Retries for degenerate random draws (empty/full category subset, or a
# threshold that rounds onto the range boundary) before giving up on the node.
MAX_REDRAWS = 16


class FitError(ValueError):
    """Dataset cannot be fitted (too small / no splittable column)."""


class ModelFormatError(ValueError):
    """Model file is malformed or has an unsupported version."""


@dataclass
class Terminal:
    # Remaining point count at fit time (weight mass for single-variable
    # trees); feeds the expected-isolation continuation for anomaly scores.
    size: float


@dataclass
class NumericSplit:
    var: int
    threshold: float
    left_fraction: float
    left: object = None
    right: object = None


@dataclass
class CategoricalSplit:
    var: int
    left_set: np.ndarray  # bool, indexed by category code
    present: np.ndarray  # bool, indexed by category code
    left_fraction: float
    left: object = None
    right: object = None


@dataclass
class HyperplaneSplit:
    num_vars: list[int]
    num_coefs: list[float]
    num_imputes: list[float]
    cat_vars: list[int]
    cat_coefs: list[np.ndarray]  # per-code coefficient, NaN where absent
    cat_imputes: list[float]
    threshold: float
    left: object = None
    right: object = None


@dataclass
class ForestParams:
    n_trees: int = 100
    subsample: int | None = None  # None: the full dataset
    ndim: int = 1
    max_depth: int | None = None  # None: unlimited (full-depth trees)
    seed: int = 0
    model_kind: str = "single"  # "single" | "extended"

    def __post_init__(self):
        if self.model_kind not in ("single", "extended"):
            raise FitError(f"unknown model kind {self.model_kind!r}")
        if self.model_kind == "single" and self.ndim != 1:
            raise FitError("single-variable model requires ndim=1")
        if self.model_kind == "extended" and self.ndim < 1:
            raise FitError("ndim must be >= 1")
        if self.n_trees < 1:
            raise FitError("need at least one tree")


@dataclass
class Forest:
    params: ForestParams
    schema: list[dict]  # per column: {name, kind, labels}
    trees: list = field(default_factory=list)
    n_sub: int = 0


def _var_is_eligible(col: Column, idx: np.ndarray):
    """(values, known-mask) if the column has >= 2 distinct non-missing
    values among rows `idx`, else None."""
    known = ~col.missing[idx]
    if np.count_nonzero(known) < 2:
        return None
    vals = col.values[idx]
    kv = vals[known]
    if kv.min() == kv.max():
        return None
    return vals, known


def _eligible_vars(ds: Dataset, idx: np.ndarray) -> list[int]:
    """Columns with >= 2 distinct non-missing values among rows `idx`."""
    return [
        ci
        for ci, col in enumerate(ds.columns)
        if _var_is_eligible(col, idx) is not None
    ]


def _pick_var(ds: Dataset, idx: np.ndarray, rng):
    """Uniform draw among eligible variables, checking lazily: the first
    eligible entry of a uniform permutation is uniform over the eligible
    set, so most nodes test a single column."""
    for var in rng.permutation(len(ds.columns)):
        hit = _var_is_eligible(ds.columns[var], idx)
        if hit is not None:
            return int(var), hit[0], hit[1]
    return None, None, None


def _draw_threshold(rng, lo: float, hi: float) -> float | None:
    """Uniform draw strictly below `hi` (so both branches are non-empty)."""
    for _ in range(MAX_REDRAWS):
        z = lo + rng.random() * (hi - lo)
        if lo <= z < hi:
            return z
    return None


def _grow_single(ds, idx, w, depth, rng, max_depth):
    if len(idx) <= 1 or (max_depth is not None and depth >= max_depth):
        return Terminal(size=float(w.sum()))
    var, vals, known = _pick_var(ds, idx, rng)
    if var is None:
        return Terminal(size=float(w.sum()))
    col = ds.columns[var]

    if col.kind == "numeric":
        kv = vals[known]
        z = _draw_threshold(rng, float(kv.min()), float(kv.max()))
        if z is None:
            return Terminal(size=float(w.sum()))
        go_left = known & (vals <= z)
        go_right = known & (vals > z)
        node = NumericSplit(var=var, threshold=z, left_fraction=0.0)
    else:
        present_codes = np.unique(vals[known])
        subset = None
        for _ in range(MAX_REDRAWS):
            coin = rng.random(len(present_codes)) < 0.5
            if 0 < coin.sum() < len(present_codes):
                subset = present_codes[coin]
                break
        if subset is None:
            return Terminal(size=float(w.sum()))
        present = np.zeros(len(col.labels), dtype=bool)
        present[present_codes] = True
        left_set = np.zeros(len(col.labels), dtype=bool)
        left_set[subset] = True
        go_left = known & left_set[np.maximum(vals, 0)] & (vals >= 0)
        go_right = known & ~go_left
        node = CategoricalSplit(
            var=var, left_set=left_set, present=present, left_fraction=0.0
        )

    wl = float(w[go_left].sum())
    wr = float(w[go_right].sum())
    b_l = wl / (wl + wr)
    node.left_fraction = b_l
    unknown = ~known

    idx_l = np.concatenate([idx[go_left], idx[unknown]])
    w_l = np.concatenate([w[go_left], b_l * w[unknown]])
    idx_r = np.concatenate([idx[go_right], idx[unknown]])
    w_r = np.concatenate([w[go_right], (1.0 - b_l) * w[unknown]])
    keep_l = w_l >= WEIGHT_FLOOR
    keep_r = w_r >= WEIGHT_FLOOR
    node.left = _grow_single(ds, idx_l[keep_l], w_l[keep_l], depth + 1, rng, max_depth)
    node.right = _grow_single(ds, idx_r[keep_r], w_r[keep_r], depth + 1, rng, max_depth)
    return node


def _grow_extended(ds, idx, depth, rng, max_depth, ndim):
    if len(idx) <= 1 or (max_depth is not None and depth >= max_depth):
        return Terminal(size=float(len(idx)))
    eligible = _eligible_vars(ds, idx)
    if not eligible:
        return Terminal(size=float(len(idx)))
    k = min(ndim, len(eligible))
    chosen = sorted(rng.choice(np.array(eligible), size=k, replace=False).tolist())

    y = np.zeros(len(idx))
    node = HyperplaneSplit([], [], [], [], [], [], threshold=0.0)
    for var in chosen:
        col = ds.columns[var]
        vals = col.values[idx]
        known = ~col.missing[idx]
        if col.kind == "numeric":
            kv = vals[known]
            sigma = float(kv.std())
            z = float(rng.standard_normal()) / sigma
            contrib = z * kv
            r = float(np.median(contrib))
            y[known] += z * vals[known]
            y[~known] += r
            node.num_vars.append(var)
            node.num_coefs.append(z)
            node.num_imputes.append(r)
        else:
            present_codes = np.unique(vals[known])
            coefs = np.full(len(col.labels), np.nan)
            coefs[present_codes] = rng.standard_normal(len(present_codes))
            applied = coefs[vals[known]]
            r = float(np.median(applied))
            y[known] += applied
            y[~known] += r
            node.cat_vars.append(var)
            node.cat_coefs.append(coefs)
            node.cat_imputes.append(r)

    lo, hi = float(y.min()), float(y.max())
    if lo == hi:
        return Terminal(size=float(len(idx)))
    q = _draw_threshold(rng, lo, hi)
    if q is None:
        return Terminal(size=float(len(idx)))
    node.threshold = q
    go_left = y <= q
    node.left = _grow_extended(ds, idx[go_left], depth + 1, rng, max_depth, ndim)
    node.right = _grow_extended(ds, idx[~go_left], depth + 1, rng, max_depth, ndim)
    return node


def _tree_rng(seed: int, tree_index: int):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tree_index,)))


def _grow_one(ds: Dataset, params: ForestParams, n_sub: int, tree_index: int):
    rng = _tree_rng(params.seed, tree_index)
    n = ds.n_rows
    if n_sub < n:
        p = ds.weights / ds.weights.sum()
        idx = rng.choice(n, size=n_sub, replace=False, p=p)
    else:
        idx = np.arange(n)
    if params.model_kind == "single":
        w = np.ones(len(idx))
        return _grow_single(ds, idx, w, 0, rng, params.max_depth)
    return _grow_extended(ds, idx, 0, rng, params.max_depth, params.ndim)


def fit_forest(ds: Dataset, params: ForestParams, threads: int = 1) -> Forest:
    """Grow `params.n_trees` trees on (weighted, without-replacement)
    subsamples of `ds`.  Deterministic in (ds, params, seed)."""
    if ds.n_rows < 2:
        raise FitError("need at least 2 rows to fit")
    if not _eligible_vars(ds, np.arange(ds.n_rows)):
        raise FitError("no column has >= 2 distinct non-missing values")
    n_sub = ds.n_rows if params.subsample is None else min(params.subsample, ds.n_rows)
    if n_sub < 2:
        raise FitError("subsample size must be >= 2")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(
                pool.map(
                    lambda k: _grow_one(ds, params, n_sub, k), range(params.n_trees)
                )
            )
    else:
        trees = [_grow_one(ds, params, n_sub, k) for k in range(params.n_trees)]

    schema = [
        {"name": name, "kind": c.kind, "labels": c.labels}
        for name, c in zip(ds.names, ds.columns)
    ]
    return Forest(params=params, schema=schema, trees=trees, n_sub=n_sub)


# ---------------------------------------------------------------------------
# Prediction-side column remapping


def remap_dataset(forest: Forest, ds: Dataset) -> Dataset:
    """Align `ds` to the forest's schema snapshot.

    Column kinds must match positionally.  Categorical codes are rewritten
    into the model's label space; labels the model never saw become
    UNSEEN_CODE and take the unseen-category path at every split.
    """
    if ds.n_cols != len(forest.schema):
        raise FitError(
            f"dataset has {ds.n_cols} columns, model expects {len(forest.schema)}"
        )
    cols = []
    for col, spec in zip(ds.columns, forest.schema):
        if col.kind != spec["kind"]:
            raise FitError(
                f"column {spec['name']!r}: kind {col.kind!r} does not match "
                f"model kind {spec['kind']!r}"
            )
        if col.kind == "numeric":
            cols.append(col)
            continue
        model_index = {lab: i for i, lab in enumerate(spec["labels"])}
        lookup = np.array(
            [model_index.get(lab, UNSEEN_CODE) for lab in col.labels], dtype=np.int64
        )
        codes = np.where(col.missing, 0, col.values)
        remapped = lookup[codes] if len(lookup) else np.full(len(codes), UNSEEN_CODE)
        cols.append(Column(col.kind, remapped, col.missing, list(spec["labels"])))
    return Dataset(cols, list(ds.names), ds.weights)


# ---------------------------------------------------------------------------
# Serialization: versioned JSON, floats at full round-trip precision.


def _node_to_json(node):
    if isinstance(node, Terminal):
        return {"type": "terminal", "size": node.size}
    if isinstance(node, NumericSplit):
        return {
            "type": "num",
            "var": node.var,
            "threshold": node.threshold,
            "bl": node.left_fraction,
            "left": _node_to_json(node.left),
            "right": _node_to_json(node.right),
        }
    if isinstance(node, CategoricalSplit):
        return {
            "type": "cat",
            "var": node.var,
            "n_labels": len(node.left_set),
            "left_set": np.flatnonzero(node.left_set).tolist(),
            "present": np.flatnonzero(node.present).tolist(),
            "bl": node.left_fraction,
            "left": _node_to_json(node.left),
            "right": _node_to_json(node.right),
        }
    if isinstance(node, HyperplaneSplit):
        return {
            "type": "hyp",
            "num_vars": node.num_vars,
            "num_coefs": node.num_coefs,
            "num_imputes": node.num_imputes,
            "cat_vars": node.cat_vars,
            "cat_coefs": [
                {str(code): c[code] for code in np.flatnonzero(~np.isnan(c))}
                for c in node.cat_coefs
            ],
            "cat_sizes": [len(c) for c in node.cat_coefs],
            "cat_imputes": node.cat_imputes,
            "threshold": node.threshold,
            "left": _node_to_json(node.left),
            "right": _node_to_json(node.right),
        }
    raise TypeError(f"unknown node type {type(node)!r}")


def _node_from_json(obj):
    try:
        kind = obj["type"]
        if kind == "terminal":
            return Terminal(size=float(obj["size"]))
        if kind == "num":
            return NumericSplit(
                var=int(obj["var"]),
                threshold=float(obj["threshold"]),
                left_fraction=float(obj["bl"]),
                left=_node_from_json(obj["left"]),
                right=_node_from_json(obj["right"]),
            )
        if kind == "cat":
            size = int(obj["n_labels"])
            left_set = np.zeros(size, dtype=bool)
            left_set[obj["left_set"]] = True
            present = np.zeros(size, dtype=bool)
            present[obj["present"]] = True
            return CategoricalSplit(
                var=int(obj["var"]),
                left_set=left_set,
                present=present,
                left_fraction=float(obj["bl"]),
                left=_node_from_json(obj["left"]),
                right=_node_from_json(obj["right"]),
            )
        if kind == "hyp":
            coefs = []
            for cmap, size in zip(obj["cat_coefs"], obj["cat_sizes"]):
                arr = np.full(int(size), np.nan)
                for code, val in cmap.items():
                    arr[int(code)] = float(val)
                coefs.append(arr)
            return HyperplaneSplit(
                num_vars=[int(v) for v in obj["num_vars"]],
                num_coefs=[float(v) for v in obj["num_coefs"]],
                num_imputes=[float(v) for v in obj["num_imputes"]],
                cat_vars=[int(v) for v in obj["cat_vars"]],
                cat_coefs=coefs,
                cat_imputes=[float(v) for v in obj["cat_imputes"]],
                threshold=float(obj["threshold"]),
                left=_node_from_json(obj["left"]),
                right=_node_from_json(obj["right"]),
            )
        raise ModelFormatError(f"unknown node type {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed tree node: {exc}") from exc


def save_model(forest: Forest, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "params": {
            "n_trees": forest.params.n_trees,
            "subsample": forest.params.subsample,
            "ndim": forest.params.ndim,
            "max_depth": forest.params.max_depth,
            "seed": forest.params.seed,
            "model_kind": forest.params.model_kind,
        },
        "n_sub": forest.n_sub,
        "schema": forest.schema,
        "trees": [_node_to_json(t) for t in forest.trees],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> Forest:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: not a valid model file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model format version "
            f"{doc.get('format_version') if isinstance(doc, dict) else '?'}"
        )
    try:
        p = doc["params"]
        params = ForestParams(
            n_trees=int(p["n_trees"]),
            subsample=None if p["subsample"] is None else int(p["subsample"]),
            ndim=int(p["ndim"]),
            max_depth=None if p["max_depth"] is None else int(p["max_depth"]),
            seed=int(p["seed"]),
            model_kind=p["model_kind"],
        )
        trees = [_node_from_json(t) for t in doc["trees"]]
        forest = Forest(
            params=params, schema=doc["schema"], trees=trees, n_sub=int(doc["n_sub"])
        )
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"{path}: malformed model document: {exc}") from exc
    if len(forest.trees) != params.n_trees:
        raise ModelFormatError(f"{path}: tree count does not match params")
    return forest
