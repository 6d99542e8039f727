"""Classical learners for the benchmark: logistic regression, random forest,
precomputed-kernel SVM, and stratified grid-search cross-validation.

Every stochastic component draws from a generator seeded through
:func:`molbench.hashing.derive_seed`, so training is reproducible bit for bit
across runs and platforms.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .hashing import derive_seed
from .kernels import KernelMatrix
from .metrics import auroc, mcc_from_labels


@dataclass(frozen=True)
class TabularDataset:
    X: np.ndarray
    y: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", tuple(self.ids))
        if X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        if len(self.ids) != X.shape[0] or len(y) != X.shape[0]:
            raise ValueError("ids, X and y must agree in length")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains NaN or inf")
        if not np.all(np.isin(y, (0, 1))):
            raise ValueError("labels must be binary 0/1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def subset(self, indices: Sequence[int]) -> "TabularDataset":
        idx = np.asarray(indices, dtype=int)
        return TabularDataset(self.X[idx], self.y[idx],
                              tuple(self.ids[i] for i in idx))


@dataclass(frozen=True)
class KernelDataset:
    """Labels over a precomputed kernel; rows/columns indexed like ids."""

    kernel: KernelMatrix
    y: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", tuple(self.ids))
        if self.ids != self.kernel.ids:
            raise ValueError("dataset ids must match kernel ids")
        if len(y) != len(self.ids):
            raise ValueError("label count must match ids")
        if not np.all(np.isin(y, (0, 1))):
            raise ValueError("labels must be binary 0/1")

    @property
    def n(self) -> int:
        return len(self.ids)


def _require_both_classes(y: np.ndarray):
    if len(np.unique(y)) < 2:
        raise ValueError("training labels are degenerate (single class)")


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------


def logreg_loss_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray,
                     l2: float) -> tuple[float, np.ndarray]:
    """Mean log-loss plus (l2/2)*||w||^2; bias is the last slot, unpenalized."""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    p = expit(z)
    resid = (p - y) / len(y)
    grad = np.concatenate([X.T @ resid + l2 * w, [resid.sum()]])
    return loss, grad


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    config: dict
    n_iter: int
    converged: bool

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.feature_mean) / self.feature_scale
        return Z @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.decision_scores(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_scores(X) >= 0.0).astype(np.int64)


def train_logreg(data: TabularDataset, l2: float = 1e-4, max_iter: int = 500,
                 tol: float = 1e-8) -> LogisticModel:
    """Full-batch gradient descent with backtracking (Armijo) line search.

    Features are standardized internally; constant columns are left at zero
    and receive zero weight. Converged means gradient 2-norm below tol.
    """
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    _require_both_classes(data.y)
    mean = data.X.mean(axis=0)
    std = data.X.std(axis=0)
    # A column of identical floats can report a tiny nonzero std because the
    # mean rounds; dividing by it would amplify rounding noise into features.
    constant = np.ptp(data.X, axis=0) == 0
    scale = np.where((std > 0) & ~constant, std, 1.0)
    Z = (data.X - mean) / scale
    Z[:, constant] = 0.0
    y = data.y.astype(np.float64)
    params = np.zeros(Z.shape[1] + 1)
    loss, grad = logreg_loss_grad(params, Z, y, l2)
    step = 1.0
    n_iter = 0
    converged = False
    while n_iter < max_iter:
        gnorm2 = float(grad @ grad)
        if np.sqrt(gnorm2) < tol:
            converged = True
            break
        step = min(step * 2.0, 1e8)
        while step >= 1e-18:
            candidate = params - step * grad
            new_loss, new_grad = logreg_loss_grad(candidate, Z, y, l2)
            if new_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
        else:
            break  # no descent step exists at float precision
        params, loss, grad = candidate, new_loss, new_grad
        n_iter += 1
    if not converged:
        converged = float(np.sqrt(grad @ grad)) < tol
    return LogisticModel(
        weights=params[:-1],
        bias=float(params[-1]),
        feature_mean=mean,
        feature_scale=scale,
        config={"l2": l2, "max_iter": max_iter, "tol": tol},
        n_iter=n_iter,
        converged=bool(converged),
    )


# ---------------------------------------------------------------------------
# Random forest
# ---------------------------------------------------------------------------


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p @ p))


def _build_tree(X, y, indices, depth, max_depth, min_leaf, n_candidates, rng):
    node_y = y[indices]
    pos = int(node_y.sum())
    counts = np.array([len(node_y) - pos, pos], dtype=np.float64)
    leaf = {"leaf": True, "n": len(node_y), "p1": pos / len(node_y)}
    if pos == 0 or pos == len(node_y):
        return leaf
    if max_depth is not None and depth >= max_depth:
        return leaf
    if len(node_y) < 2 * min_leaf:
        return leaf
    d = X.shape[1]
    features = rng.choice(d, size=min(n_candidates, d), replace=False)
    best = None  # (gini, feature, threshold, left_mask)
    parent_gini = _gini(counts)
    for f in features:
        col = X[indices, f]
        order = np.argsort(col, kind="mergesort")
        sorted_col = col[order]
        sorted_y = node_y[order]
        pos_prefix = np.cumsum(sorted_y)
        n = len(sorted_col)
        for cut in range(min_leaf, n - min_leaf + 1):
            if cut < 1 or sorted_col[cut - 1] == sorted_col[cut]:
                continue
            left_pos = pos_prefix[cut - 1]
            left = np.array([cut - left_pos, left_pos], dtype=np.float64)
            right = counts - left
            score = (cut * _gini(left) + (n - cut) * _gini(right)) / n
            threshold = (sorted_col[cut - 1] + sorted_col[cut]) / 2.0
            if best is None or score < best[0] - 1e-15:
                best = (score, int(f), float(threshold))
    if best is None or best[0] > parent_gini + 1e-15:
        return leaf
    _, feature, threshold = best
    mask = X[indices, feature] <= threshold
    left_idx = indices[mask]
    right_idx = indices[~mask]
    return {
        "leaf": False,
        "feature": feature,
        "threshold": threshold,
        "left": _build_tree(X, y, left_idx, depth + 1, max_depth, min_leaf,
                            n_candidates, rng),
        "right": _build_tree(X, y, right_idx, depth + 1, max_depth, min_leaf,
                             n_candidates, rng),
    }


def _tree_proba(node, row) -> float:
    while not node["leaf"]:
        node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
    return node["p1"]


def _tree_depth(node) -> int:
    if node["leaf"]:
        return 0
    return 1 + max(_tree_depth(node["left"]), _tree_depth(node["right"]))


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[dict, ...]
    config: dict
    seed: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        probs = np.zeros(X.shape[0])
        for tree in self.trees:
            probs += np.array([_tree_proba(tree, row) for row in X])
        return probs / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def max_tree_depth(self) -> int:
        return max(_tree_depth(t) for t in self.trees)


def train_random_forest(data: TabularDataset, n_trees: int = 100,
                        max_depth: int | None = None, min_leaf: int = 1,
                        seed: int = 0) -> RandomForestModel:
    """Bagged CART trees with Gini splits and sqrt(d) feature sampling.

    Splits are taken whenever an impure node admits one, even at zero Gini
    gain, because parity-style signals only separate below the first cut.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    _require_both_classes(data.y)
    d = data.X.shape[1]
    n_candidates = max(1, int(np.ceil(np.sqrt(d))))
    trees = []
    for t in range(n_trees):
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "tree", t)))
        sample = rng.integers(0, data.n, size=data.n)
        if len(np.unique(data.y[sample])) < 2:
            # Degenerate bootstrap; resample deterministically until mixed.
            while len(np.unique(data.y[sample])) < 2:
                sample = rng.integers(0, data.n, size=data.n)
        trees.append(_build_tree(data.X, data.y, np.asarray(sample), 0,
                                 max_depth, min_leaf, n_candidates, rng))
    return RandomForestModel(
        trees=tuple(trees),
        config={"n_trees": n_trees, "max_depth": max_depth, "min_leaf": min_leaf},
        seed=seed,
    )


# ---------------------------------------------------------------------------
# SVM on a precomputed kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SVMModel:
    alphas: np.ndarray
    bias: float
    train_labels_pm: np.ndarray
    train_ids: tuple[str, ...]
    config: dict
    seed: int

    def decision_from_cross_kernel(self, K_cross: np.ndarray) -> np.ndarray:
        """K_cross rows = training points, columns = query points."""
        return (self.alphas * self.train_labels_pm) @ K_cross + self.bias

    def predict_from_cross_kernel(self, K_cross: np.ndarray) -> np.ndarray:
        return (self.decision_from_cross_kernel(K_cross) >= 0.0).astype(np.int64)

    def dual_objective(self, K_train: np.ndarray) -> float:
        a, t = self.alphas, self.train_labels_pm
        return float(a.sum() - 0.5 * (a * t) @ K_train @ (a * t))


def train_svm_precomputed(K: np.ndarray | KernelMatrix, y, C: float = 1.0,
                          tol: float = 1e-4, max_passes: int = 200,
                          seed: int = 0,
                          ids: Sequence[str] | None = None) -> SVMModel:
    """Soft-margin SVM dual via sequential minimal optimization.

    Accepts the training block of a precomputed kernel. Termination: a full
    sweep finds no pair whose KKT violation exceeds tol, or max_passes
    sweeps. Labels may be {0,1} or {-1,+1}.
    """
    if isinstance(K, KernelMatrix):
        if ids is None:
            ids = K.ids
        K = K.values
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if K.shape != (n, n):
        raise ValueError("kernel block must be square")
    if n and np.max(np.abs(K - K.T)) > 1e-10:
        raise ValueError("kernel block must be symmetric")
    if C <= 0:
        raise ValueError("C must be positive")
    y = np.asarray(y)
    if set(np.unique(y)) <= {0, 1}:
        t = np.where(y == 1, 1.0, -1.0)
    else:
        t = y.astype(np.float64)
        if not set(np.unique(t)) <= {-1.0, 1.0}:
            raise ValueError("labels must be binary")
    if len(np.unique(t)) < 2:
        raise ValueError("training labels are degenerate (single class)")
    if ids is None:
        ids = tuple(str(i) for i in range(n))

    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "smo")))
    alphas = np.zeros(n)
    b = 0.0

    def decision(i):
        return float((alphas * t) @ K[:, i] + b)

    def try_pair(i, j, E_i):
        nonlocal b
        E_j = decision(j) - t[j]
        a_i_old, a_j_old = alphas[i], alphas[j]
        if t[i] != t[j]:
            L = max(0.0, a_j_old - a_i_old)
            H = min(C, C + a_j_old - a_i_old)
        else:
            L = max(0.0, a_i_old + a_j_old - C)
            H = min(C, a_i_old + a_j_old)
        if L >= H:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0:
            return False
        a_j = a_j_old - t[j] * (E_i - E_j) / eta
        a_j = min(H, max(L, a_j))
        if abs(a_j - a_j_old) < 1e-12:
            return False
        a_i = a_i_old + t[i] * t[j] * (a_j_old - a_j)
        alphas[i], alphas[j] = a_i, a_j
        b1 = b - E_i - t[i] * (a_i - a_i_old) * K[i, i] - t[j] * (a_j - a_j_old) * K[i, j]
        b2 = b - E_j - t[i] * (a_i - a_i_old) * K[i, j] - t[j] * (a_j - a_j_old) * K[j, j]
        if 0 < a_i < C:
            b = b1
        elif 0 < a_j < C:
            b = b2
        else:
            b = (b1 + b2) / 2.0
        return True

    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            E_i = decision(i) - t[i]
            r_i = E_i * t[i]
            if not ((r_i < -tol and alphas[i] < C) or (r_i > tol and alphas[i] > 0)):
                continue
            # Try partners in a seeded random order until one admits progress.
            partners = rng.permutation(n)
            for j in partners:
                if j == i:
                    continue
                if try_pair(i, int(j), E_i):
                    changed += 1
                    break
        if changed == 0:
            break
        passes += 1
    return SVMModel(
        alphas=alphas,
        bias=float(b),
        train_labels_pm=t,
        train_ids=tuple(ids),
        config={"C": C, "tol": tol, "max_passes": max_passes},
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Cross-validation and model families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelFamily:
    """Uniform handle over a learner for grid search and the benchmark.

    ``fit`` takes the dataset and training indices; ``score_fn`` takes the
    fitted model, the dataset and query indices and returns real-valued
    decision scores (thresholded at 0.5 for probabilities, 0 for margins).
    """

    name: str
    fit: Callable
    score_fn: Callable
    threshold: float = 0.5
    needs_kernel: bool = False
    stochastic: bool = False

    def predictions(self, model, data, indices) -> np.ndarray:
        return (self.score_fn(model, data, indices) >= self.threshold).astype(np.int64)


def _fit_logreg(data: TabularDataset, indices, params, seed):
    return train_logreg(data.subset(indices), **params)


def _score_tabular(model, data: TabularDataset, indices):
    return model.predict_proba(data.X[np.asarray(indices, dtype=int)])


def _fit_rf(data: TabularDataset, indices, params, seed):
    return train_random_forest(data.subset(indices), seed=seed, **params)


def _fit_svm(data: KernelDataset, indices, params, seed):
    idx = np.asarray(indices, dtype=int)
    block = data.kernel.values[np.ix_(idx, idx)]
    model = train_svm_precomputed(block, data.y[idx], seed=seed,
                                  ids=tuple(data.ids[i] for i in idx), **params)
    return {"model": model, "train_indices": idx}


def _score_svm(fitted, data: KernelDataset, indices):
    idx = np.asarray(indices, dtype=int)
    cross = data.kernel.values[np.ix_(fitted["train_indices"], idx)]
    return fitted["model"].decision_from_cross_kernel(cross)


LOGREG_FAMILY = ModelFamily(name="logreg", fit=_fit_logreg, score_fn=_score_tabular)
RF_FAMILY = ModelFamily(name="rf", fit=_fit_rf, score_fn=_score_tabular,
                        stochastic=True)
SVM_FAMILY = ModelFamily(name="svm", fit=_fit_svm, score_fn=_score_svm,
                         threshold=0.0, needs_kernel=True)

MODEL_FAMILIES = {f.name: f for f in (LOGREG_FAMILY, RF_FAMILY, SVM_FAMILY)}


def stratified_fold_assignment(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold index per row; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    assignment = np.full(len(y), -1, dtype=np.int64)
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if len(members) < folds:
            raise ValueError(
                f"class {cls} has {len(members)} members, fewer than {folds} folds"
            )
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "fold", int(cls))))
        rng.shuffle(members)
        assignment[members] = np.arange(len(members)) % folds
    return assignment


def expand_grid(grid: dict[str, Sequence] | Sequence[dict]) -> list[dict]:
    """Dict-of-lists lattice (or an explicit list of configs) to config list."""
    if isinstance(grid, dict):
        keys = list(grid)
        return [dict(zip(keys, combo))
                for combo in itertools.product(*(grid[k] for k in keys))]
    return [dict(g) for g in grid]


@dataclass(frozen=True)
class GridSearchResult:
    best_params: dict
    best_mean: float
    table: tuple[dict, ...]  # one row per (config, fold)

    def write_csv(self, path):
        rows = [dict(r) for r in self.table]
        fieldnames = ["config", "fold", "metric"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            for row in rows:
                writer.writerow({"config": json.dumps(row["params"], sort_keys=True),
                                 "fold": row["fold"], "metric": repr(row["metric"])})


def grid_search_cv(data, family: ModelFamily, grid, folds: int = 5,
                   metric: str = "mcc", seed: int = 0) -> GridSearchResult:
    """Stratified k-fold CV over a config lattice; best = max mean metric.

    Ties keep the earliest config in lattice order. The returned table has
    one row per (config, fold) for external auditing.
    """
    configs = expand_grid(grid)
    if not configs:
        raise ValueError("empty grid")
    y = data.y
    assignment = stratified_fold_assignment(y, folds, seed)
    table = []
    means = []
    for params in configs:
        fold_scores = []
        for fold in range(folds):
            train_idx = np.flatnonzero(assignment != fold)
            val_idx = np.flatnonzero(assignment == fold)
            fitted = family.fit(data, train_idx, params, derive_seed(seed, "cv", fold))
            scores = family.score_fn(fitted, data, val_idx)
            preds = (np.asarray(scores) >= family.threshold).astype(np.int64)
            if metric == "mcc":
                value = mcc_from_labels(y[val_idx], preds)
            elif metric == "auroc":
                value = auroc(scores, y[val_idx])
            else:
                raise ValueError(f"unknown metric {metric!r}")
            fold_scores.append(value)
            table.append({"params": params, "fold": fold, "metric": value})
        means.append(float(np.mean(fold_scores)))
    best_at = int(np.argmax(means))
    return GridSearchResult(best_params=configs[best_at], best_mean=means[best_at],
                            table=tuple(table))


# ---------------------------------------------------------------------------
# Embedding ingestion and model persistence
# ---------------------------------------------------------------------------


class EmbeddingJoinError(ValueError):
    pass


def load_embeddings(path, ids: Sequence[str], labels: Sequence[int]) -> TabularDataset:
    """Join an `id,e0,e1,...` CSV onto dataset ids, preserving dataset order."""
    by_id: dict[str, list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id":
            raise EmbeddingJoinError("embedding file must start with an 'id' column")
        width = len(header) - 1
        if width < 1:
            raise EmbeddingJoinError("embedding file has no value columns")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) - 1 != width:
                raise EmbeddingJoinError(
                    f"row {line_no} has {len(row) - 1} values, expected {width}"
                )
            if row[0] in by_id:
                raise EmbeddingJoinError(f"duplicate embedding id {row[0]!r}")
            try:
                by_id[row[0]] = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise EmbeddingJoinError(f"row {line_no}: {exc}") from exc
    unknown = sorted(set(by_id) - set(ids))
    if unknown:
        raise EmbeddingJoinError(f"embedding ids not in dataset: {unknown[:5]}")
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise EmbeddingJoinError(f"dataset ids without embeddings: {missing[:5]}")
    X = np.array([by_id[i] for i in ids], dtype=np.float64)
    return TabularDataset(X=X, y=np.asarray(labels), ids=tuple(ids))


MODEL_FORMAT_VERSION = 1


def model_to_json(model) -> str:
    if isinstance(model, LogisticModel):
        payload = {
            "kind": "logreg",
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "feature_mean": model.feature_mean.tolist(),
            "feature_scale": model.feature_scale.tolist(),
            "config": model.config,
            "n_iter": model.n_iter,
            "converged": model.converged,
        }
    elif isinstance(model, RandomForestModel):
        payload = {"kind": "rf", "trees": list(model.trees),
                   "config": model.config, "seed": model.seed}
    elif isinstance(model, SVMModel):
        payload = {
            "kind": "svm",
            "alphas": model.alphas.tolist(),
            "bias": model.bias,
            "train_labels_pm": model.train_labels_pm.tolist(),
            "train_ids": list(model.train_ids),
            "config": model.config,
            "seed": model.seed,
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    payload["format_version"] = MODEL_FORMAT_VERSION
    return json.dumps(payload, sort_keys=True)


def model_from_json(text: str):
    payload = json.loads(text)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    kind = payload["kind"]
    if kind == "logreg":
        return LogisticModel(
            weights=np.array(payload["weights"]),
            bias=payload["bias"],
            feature_mean=np.array(payload["feature_mean"]),
            feature_scale=np.array(payload["feature_scale"]),
            config=payload["config"],
            n_iter=payload["n_iter"],
            converged=payload["converged"],
        )
    if kind == "rf":
        return RandomForestModel(trees=tuple(payload["trees"]),
                                 config=payload["config"], seed=payload["seed"])
    if kind == "svm":
        return SVMModel(
            alphas=np.array(payload["alphas"]),
            bias=payload["bias"],
            train_labels_pm=np.array(payload["train_labels_pm"]),
            train_ids=tuple(payload["train_ids"]),
            config=payload["config"],
            seed=payload["seed"],
        )
    raise ValueError(f"unknown model kind {kind!r}")
