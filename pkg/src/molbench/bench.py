"""Benchmark harness: featurize, split, train with inner CV, evaluate.

The harness wires the feature/kernel modules to the learners under a JSON
config and emits a grouped results table (CSV plus aligned text). Leakage
hygiene is structural: kernels are computed over train+test but any fitted
dictionary (WL label compression) is built from training rows only, and
grid-search cross-validation runs strictly inside the training set.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import datasplit, fingerprints, kernels, topofeatures
from .dataio import load_labeled_dataset
from .hashing import derive_seed
from .learn import (
    KernelDataset, MODEL_FAMILIES, TabularDataset, grid_search_cv,
    load_embeddings, model_to_json,
)
from .metrics import auroc, confusion_counts, mcc

SPLIT_KINDS = ("maxmin", "time", "stratified")
DEFAULT_GRIDS = {
    "rf": {"n_trees": [500]},
    "svm": {"C": [0.1, 1.0, 10.0]},
    "logreg": {"l2": [1e-4, 1e-2, 1.0]},
}
REPORT_COLUMNS = ["group", "method", "split", "mcc_mean", "mcc_std",
                  "auroc_mean", "auroc_std", "n_repeats"]


class BenchConfigError(ValueError):
    """Raised for malformed or inconsistent benchmark configs."""


def _featurize_ecfp(mols, params):
    fps = [fingerprints.ecfp(m, radius=params.get("radius", 2),
                             n_bits=params.get("n_bits", 2048),
                             counted=params.get("counted", False)) for m in mols]
    return np.array([fp.to_dense() for fp in fps], dtype=np.float64)


def _featurize_scheme(maker):
    def build(mols, params):
        fps = [maker(m, **params) for m in mols]
        return np.array([fp.to_dense() for fp in fps], dtype=np.float64)
    return build


def _featurize_topo(maker):
    def build(mols, params):
        return np.array([maker(m, **params).values for m in mols], dtype=np.float64)
    return build


FEATURIZERS = {
    "ecfp": _featurize_ecfp,
    "atom_pairs": _featurize_scheme(fingerprints.atom_pairs),
    "torsion": _featurize_scheme(fingerprints.topological_torsion),
    "paths": _featurize_scheme(fingerprints.path_fingerprint),
    "atom_counts": _featurize_scheme(lambda m: fingerprints.atom_count_vector(m)),
    "ltp": _featurize_topo(topofeatures.ltp_features),
    "moltop": _featurize_topo(topofeatures.moltop_features),
}

KERNELS = {
    "wl": kernels.wl_kernel_matrix,
    "wloa": kernels.wloa_kernel_matrix,
    "shortest_path": kernels.shortest_path_kernel_matrix,
    "propagation": kernels.propagation_kernel_matrix,
}


@dataclass(frozen=True)
class MethodSpec:
    name: str
    group: str
    learner: str
    grid: dict
    featurizer: dict | None = None
    kernel: dict | None = None
    embeddings: str | None = None

    @staticmethod
    def from_dict(raw: dict) -> "MethodSpec":
        known = {"name", "group", "learner", "featurizer", "kernel", "embeddings"}
        unknown = set(raw) - known
        if unknown:
            raise BenchConfigError(f"unknown method keys {sorted(unknown)}")
        if "name" not in raw or "learner" not in raw:
            raise BenchConfigError("method needs 'name' and 'learner'")
        learner = dict(raw["learner"])
        kind = learner.pop("kind", None)
        if kind not in MODEL_FAMILIES:
            raise BenchConfigError(
                f"method {raw['name']!r}: unknown learner kind {kind!r}"
            )
        grid = learner.pop("grid", None) or DEFAULT_GRIDS[kind]
        if learner:
            raise BenchConfigError(
                f"method {raw['name']!r}: unknown learner keys {sorted(learner)}"
            )
        inputs = [k for k in ("featurizer", "kernel", "embeddings") if raw.get(k)]
        if len(inputs) != 1:
            raise BenchConfigError(
                f"method {raw['name']!r}: exactly one of featurizer/kernel/"
                f"embeddings required, got {inputs or 'none'}"
            )
        family = MODEL_FAMILIES[kind]
        if family.needs_kernel and not raw.get("kernel"):
            raise BenchConfigError(
                f"method {raw['name']!r}: learner {kind!r} requires a kernel"
            )
        if not family.needs_kernel and raw.get("kernel"):
            raise BenchConfigError(
                f"method {raw['name']!r}: learner {kind!r} cannot use a kernel"
            )
        featurizer = dict(raw["featurizer"]) if raw.get("featurizer") else None
        if featurizer is not None and featurizer.get("kind") not in FEATURIZERS:
            raise BenchConfigError(
                f"method {raw['name']!r}: unknown featurizer {featurizer.get('kind')!r}"
            )
        kernel = dict(raw["kernel"]) if raw.get("kernel") else None
        if kernel is not None and kernel.get("kind") not in KERNELS:
            raise BenchConfigError(
                f"method {raw['name']!r}: unknown kernel {kernel.get('kind')!r}"
            )
        return MethodSpec(
            name=raw["name"], group=raw.get("group", "Ungrouped"),
            learner=kind, grid=grid, featurizer=featurizer, kernel=kernel,
            embeddings=raw.get("embeddings"),
        )


@dataclass(frozen=True)
class BenchmarkConfig:
    dataset: str
    methods: tuple[MethodSpec, ...]
    splits: tuple[str, ...] = ("maxmin",)
    test_fraction: float = 0.2
    repeats: int = 5
    seeds: tuple[int, ...] | None = None
    cv_folds: int = 5
    metric: str = "mcc"
    output_dir: str | None = None
    snapshot: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.methods:
            raise BenchConfigError("config needs at least one method")
        for split in self.splits:
            if split not in SPLIT_KINDS:
                raise BenchConfigError(f"unknown split kind {split!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise BenchConfigError("test_fraction must be in (0, 1)")
        if self.repeats < 1:
            raise BenchConfigError("repeats must be >= 1")
        if self.metric not in ("mcc", "auroc"):
            raise BenchConfigError(f"unknown metric {self.metric!r}")

    def run_seeds(self) -> tuple[int, ...]:
        if self.seeds is not None:
            if len(self.seeds) != self.repeats:
                raise BenchConfigError("seeds length must equal repeats")
            return self.seeds
        return tuple(range(self.repeats))

    @staticmethod
    def from_dict(raw: dict) -> "BenchmarkConfig":
        known = {"dataset", "methods", "splits", "test_fraction", "repeats",
                 "seeds", "cv_folds", "metric", "output_dir"}
        unknown = set(raw) - known
        if unknown:
            raise BenchConfigError(f"unknown config keys {sorted(unknown)}")
        if "dataset" not in raw or "methods" not in raw:
            raise BenchConfigError("config needs 'dataset' and 'methods'")
        return BenchmarkConfig(
            dataset=raw["dataset"],
            methods=tuple(MethodSpec.from_dict(m) for m in raw["methods"]),
            splits=tuple(raw.get("splits", ["maxmin"])),
            test_fraction=raw.get("test_fraction", 0.2),
            repeats=raw.get("repeats", 5),
            seeds=tuple(raw["seeds"]) if raw.get("seeds") is not None else None,
            cv_folds=raw.get("cv_folds", 5),
            metric=raw.get("metric", "mcc"),
            output_dir=raw.get("output_dir"),
            snapshot=raw,
        )

    @staticmethod
    def from_json_file(path) -> "BenchmarkConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise BenchConfigError(f"{path}: invalid JSON: {exc}") from exc
        return BenchmarkConfig.from_dict(raw)


@dataclass(frozen=True)
class EvalReport:
    group: str
    method: str
    split: str
    seeds: tuple[int, ...]
    confusions: tuple[tuple[int, int, int, int], ...]
    mccs: tuple[float, ...]
    aurocs: tuple[float, ...]
    test_ids: tuple[tuple[str, ...], ...]
    model_digests: tuple[str, ...]
    config_snapshot: dict
    wall_time_s: float

    def __post_init__(self):
        for value in self.mccs:
            if not -1.0 - 1e-12 <= value <= 1.0 + 1e-12:
                raise ValueError(f"MCC out of range: {value}")

    @property
    def n_repeats(self) -> int:
        return len(self.mccs)

    @property
    def mcc_mean(self) -> float:
        return float(np.mean(self.mccs))

    @property
    def mcc_std(self) -> float:
        return float(np.std(self.mccs)) if self.n_repeats > 1 else 0.0

    @property
    def auroc_mean(self) -> float:
        return float(np.mean(self.aurocs))

    @property
    def auroc_std(self) -> float:
        return float(np.std(self.aurocs)) if self.n_repeats > 1 else 0.0


def _make_split(kind, seed, ids, mols, labels, years, fraction, fps):
    if kind == "maxmin":
        return datasplit.maxmin_split(mols, ids, test_fraction=fraction,
                                      seed=seed, fingerprints=fps)
    if kind == "time":
        return datasplit.time_split(ids, years, sort_keys=ids,
                                    test_fraction=fraction)
    return datasplit.stratified_random_split(ids, labels, test_fraction=fraction,
                                             seed=seed)


def _model_digest(model) -> str:
    return hashlib.sha256(model_to_json(model).encode()).hexdigest()


def _evaluate_cell(method: MethodSpec, split_kind: str, config: BenchmarkConfig,
                   ids, mols, labels, years, split_fps, feature_cache):
    family = MODEL_FAMILIES[method.learner]
    deterministic = split_kind == "time" and not family.stochastic
    seeds = (config.run_seeds()[0],) if deterministic else config.run_seeds()
    row_of = {mol_id: k for k, mol_id in enumerate(ids)}

    started = time.perf_counter()
    confusions, mccs, aurocs, test_id_sets, digests = [], [], [], [], []
    for seed in seeds:
        split = _make_split(split_kind, seed, ids, mols, labels, years,
                            config.test_fraction, split_fps)
        train_idx = np.array([row_of[i] for i in split.train_ids], dtype=int)
        test_idx = np.array([row_of[i] for i in split.test_ids], dtype=int)
        y_test = labels[test_idx]

        if method.kernel is not None:
            params = dict(method.kernel)
            kind = params.pop("kind")
            normalize = params.pop("normalize", True)
            K = KERNELS[kind](mols, ids=ids, fit_indices=train_idx, **params)
            if normalize:
                K = kernels.normalize_kernel(K)
            train_data = KernelDataset(
                kernel=K.submatrix(train_idx),
                y=labels[train_idx],
                ids=tuple(ids[i] for i in train_idx),
            )
            search = grid_search_cv(train_data, family, method.grid,
                                    folds=config.cv_folds, metric=config.metric,
                                    seed=derive_seed(seed, "grid"))
            fitted = family.fit(train_data, np.arange(len(train_idx)),
                                search.best_params, derive_seed(seed, "final"))
            model = fitted["model"]
            scores = model.decision_from_cross_kernel(
                K.values[np.ix_(train_idx, test_idx)]
            )
        else:
            X = feature_cache(method)
            full = TabularDataset(X=X, y=labels, ids=ids)
            train_data = full.subset(train_idx)
            search = grid_search_cv(train_data, family, method.grid,
                                    folds=config.cv_folds, metric=config.metric,
                                    seed=derive_seed(seed, "grid"))
            model = family.fit(train_data, np.arange(len(train_idx)),
                               search.best_params, derive_seed(seed, "final"))
            scores = family.score_fn(model, full, test_idx)

        preds = (np.asarray(scores) >= family.threshold).astype(np.int64)
        tp, fp, tn, fn = confusion_counts(y_test, preds)
        confusions.append((tp, fp, tn, fn))
        mccs.append(mcc(tp, fp, tn, fn))
        if len(np.unique(y_test)) == 2:
            aurocs.append(auroc(scores, y_test))
        else:
            aurocs.append(float("nan"))
        test_id_sets.append(tuple(split.test_ids))
        digests.append(_model_digest(model))

    return EvalReport(
        group=method.group, method=method.name, split=split_kind,
        seeds=tuple(seeds), confusions=tuple(confusions), mccs=tuple(mccs),
        aurocs=tuple(aurocs), test_ids=tuple(test_id_sets),
        model_digests=tuple(digests),
        config_snapshot={"method": method.name, "learner": method.learner,
                         "grid": method.grid, "featurizer": method.featurizer,
                         "kernel": method.kernel, "embeddings": method.embeddings},
        wall_time_s=time.perf_counter() - started,
    )


def run_benchmark(config: BenchmarkConfig, write_files: bool = True):
    """Evaluate every method under every split; optionally write report files.

    Returns ``(reports, output_dir)``; the directory holds ``config.json``,
    ``report.csv`` and ``report.txt`` and is named by the config digest so
    identical configs land in the same place.
    """
    records = load_labeled_dataset(config.dataset)
    ids = tuple(r.id for r in records)
    mols = [r.molecule for r in records]
    labels = np.array([r.label for r in records], dtype=np.int64)
    years = [r.year for r in records]

    needs_time = "time" in config.splits
    if needs_time and any(y is None for y in years):
        raise ValueError("time split requested but some rows have no year")

    split_fps = (datasplit.default_split_fingerprints(mols)
                 if "maxmin" in config.splits else None)

    cache: dict[int, np.ndarray] = {}

    def feature_cache(method: MethodSpec) -> np.ndarray:
        key = id(method)
        if key not in cache:
            if method.embeddings is not None:
                cache[key] = load_embeddings(method.embeddings, ids, labels).X
            else:
                params = dict(method.featurizer)
                kind = params.pop("kind")
                cache[key] = FEATURIZERS[kind](mols, params)
        return cache[key]

    reports = []
    for method in config.methods:
        for split_kind in config.splits:
            reports.append(_evaluate_cell(
                method, split_kind, config, ids, mols, labels, years,
                split_fps, feature_cache,
            ))

    out_dir = None
    if write_files:
        out_dir = config.output_dir or os.path.join("runs", f"run-{_config_digest(config)}")
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "config.json"), "w") as fh:
            json.dump(config.snapshot, fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_report_csv(os.path.join(out_dir, "report.csv"), reports)
        with open(os.path.join(out_dir, "report.txt"), "w") as fh:
            fh.write(format_report_table(reports))
    return reports, out_dir


def _config_digest(config: BenchmarkConfig) -> str:
    blob = json.dumps(config.snapshot, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def write_report_csv(path, reports):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow([
                r.group, r.method, r.split,
                repr(r.mcc_mean),
                repr(r.mcc_std) if r.n_repeats > 1 else "",
                repr(r.auroc_mean),
                repr(r.auroc_std) if r.n_repeats > 1 else "",
                str(r.n_repeats),
            ])


def format_report_table(reports) -> str:
    """Aligned text table grouped by method group, best MCC per split marked."""
    best_by_split: dict[str, float] = {}
    for r in reports:
        current = best_by_split.get(r.split)
        if current is None or r.mcc_mean > current:
            best_by_split[r.split] = r.mcc_mean

    header = ["group", "method", "split", "mcc", "auroc", "n", "best"]
    rows = []
    for r in sorted(reports, key=lambda r: (r.group, r.method, r.split)):
        mcc_text = f"{r.mcc_mean:.3f}"
        if r.n_repeats > 1:
            mcc_text += f" ± {r.mcc_std:.3f}"
        auroc_text = f"{r.auroc_mean:.3f}"
        if r.n_repeats > 1:
            auroc_text += f" ± {r.auroc_std:.3f}"
        best = "*" if r.mcc_mean == best_by_split[r.split] else ""
        rows.append([r.group, r.method, r.split, mcc_text, auroc_text,
                     str(r.n_repeats), best])
    widths = [max(len(row[k]) for row in [header] + rows) for k in range(len(header))]
    lines = []
    for row in [header] + rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
