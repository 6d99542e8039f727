"""Dataset splitting (diversity-driven, chronological, stratified random)
and Tanimoto diversity statistics.

The diversity metric everywhere is binary Tanimoto over radius-2 circular
fingerprints folded to 2048 bits, with an override hook for callers that
precompute their own fingerprints.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fingerprints import FingerprintVector, bulk_tanimoto_matrix, ecfp
from .hashing import derive_seed
from .molgraph import Molecule


@dataclass(frozen=True)
class SplitAssignment:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    method_tag: str
    parameters: dict

    def __post_init__(self):
        object.__setattr__(self, "train_ids", tuple(self.train_ids))
        object.__setattr__(self, "test_ids", tuple(self.test_ids))
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValueError(f"train/test overlap: {sorted(overlap)[:5]}")
        if len(set(self.train_ids)) != len(self.train_ids):
            raise ValueError("duplicate train ids")
        if len(set(self.test_ids)) != len(self.test_ids):
            raise ValueError("duplicate test ids")

    def validate_partition(self, all_ids: Sequence[str]):
        if set(self.train_ids) | set(self.test_ids) != set(all_ids):
            raise ValueError("split does not cover the dataset")

    def write_csv(self, path, sidecar_path=None):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "subset"])
            for mol_id in self.train_ids:
                writer.writerow([mol_id, "train"])
            for mol_id in self.test_ids:
                writer.writerow([mol_id, "test"])
        sidecar = sidecar_path or str(path) + ".json"
        with open(sidecar, "w") as fh:
            json.dump({"method": self.method_tag, "parameters": self.parameters,
                       "n_train": len(self.train_ids), "n_test": len(self.test_ids)},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_split_csv(path) -> SplitAssignment:
    train, test = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            if row["subset"] == "train":
                train.append(row["id"])
            elif row["subset"] == "test":
                test.append(row["id"])
            else:
                raise ValueError(f"unknown subset {row['subset']!r}")
    return SplitAssignment(train_ids=tuple(train), test_ids=tuple(test),
                           method_tag="loaded", parameters={})


def _test_size(n: int, test_fraction: float) -> int:
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    size = int(round(n * test_fraction))
    return min(max(size, 1), n - 1)


def default_split_fingerprints(mols: Sequence[Molecule]) -> list[FingerprintVector]:
    return [ecfp(mol, radius=2, n_bits=2048) for mol in mols]


def maxmin_split(mols: Sequence[Molecule], ids: Sequence[str],
                 test_fraction: float = 0.2, seed: int = 0,
                 fingerprints: Sequence[FingerprintVector] | None = None) -> SplitAssignment:
    """Greedy maximin test-set selection in Tanimoto-distance space.

    The first test pick is seeded-random; each later pick maximizes the
    minimum distance (1 - similarity) to the already-picked set, ties going
    to the lowest dataset index. The picked molecules become the test set.
    """
    n = len(mols)
    if n < 2:
        raise ValueError("need at least 2 molecules to split")
    if len(ids) != n:
        raise ValueError("ids and molecules differ in length")
    n_test = _test_size(n, test_fraction)
    fps = default_split_fingerprints(mols) if fingerprints is None else list(fingerprints)
    dist = 1.0 - bulk_tanimoto_matrix(fps)
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "maxmin")))
    first = int(rng.integers(0, n))
    picked = [first]
    min_dist = dist[first].copy()
    min_dist[first] = -np.inf
    while len(picked) < n_test:
        nxt = int(np.argmax(min_dist))  # argmax keeps the lowest index on ties
        picked.append(nxt)
        min_dist = np.minimum(min_dist, dist[nxt])
        min_dist[nxt] = -np.inf
    test_set = set(picked)
    return SplitAssignment(
        train_ids=tuple(ids[i] for i in range(n) if i not in test_set),
        test_ids=tuple(ids[i] for i in picked),
        method_tag="maxmin",
        parameters={"test_fraction": test_fraction, "seed": seed},
    )


def time_split(ids: Sequence[str], years: Sequence[int],
               sort_keys: Sequence[str], test_fraction: float = 0.2) -> SplitAssignment:
    """Newest records become the test set.

    Ordering is (year descending, sort key descending); the sort key is the
    canonical SMILES, so equal-year ties resolve to the lexicographically
    last strings and the split never depends on input row order.
    """
    n = len(ids)
    if n < 2:
        raise ValueError("need at least 2 records to split")
    if len(years) != n or len(sort_keys) != n:
        raise ValueError("ids, years and sort keys differ in length")
    for i, year in enumerate(years):
        if year is None:
            raise ValueError(f"record {ids[i]!r} is missing a year")
    n_test = _test_size(n, test_fraction)
    # Stable two-pass sort: secondary key (descending) first, then year.
    order = sorted(range(n), key=lambda i: sort_keys[i], reverse=True)
    order = sorted(order, key=lambda i: -int(years[i]))
    test_idx = order[:n_test]
    test_set = set(test_idx)
    return SplitAssignment(
        train_ids=tuple(ids[i] for i in range(n) if i not in test_set),
        test_ids=tuple(ids[i] for i in test_idx),
        method_tag="time",
        parameters={"test_fraction": test_fraction},
    )


def stratified_random_split(ids: Sequence[str], labels: Sequence[int],
                            test_fraction: float = 0.2, seed: int = 0) -> SplitAssignment:
    """Seeded per-class sampling keeping the class ratio within one item."""
    n = len(ids)
    if len(labels) != n:
        raise ValueError("ids and labels differ in length")
    labels = np.asarray(labels, dtype=int)
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ValueError("both classes must be present")
    for cls in classes:
        if int((labels == cls).sum()) < 2:
            raise ValueError(f"class {cls} has fewer than 2 members")
    n_test = _test_size(n, test_fraction)
    exact = {int(c): (labels == c).sum() * test_fraction for c in classes}
    take = {c: int(np.floor(v)) for c, v in exact.items()}
    shortfall = n_test - sum(take.values())
    remainders = sorted(exact, key=lambda c: (-(exact[c] - take[c]), c))
    for c in remainders[:shortfall]:
        take[c] += 1
    test_idx: list[int] = []
    for cls in classes:
        members = np.flatnonzero(labels == cls)
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "strat", int(cls))))
        rng.shuffle(members)
        test_idx.extend(int(i) for i in members[: take[int(cls)]])
    test_set = set(test_idx)
    return SplitAssignment(
        train_ids=tuple(ids[i] for i in range(n) if i not in test_set),
        test_ids=tuple(ids[i] for i in sorted(test_idx)),
        method_tag="stratified",
        parameters={"test_fraction": test_fraction, "seed": seed},
    )


def intra_dataset_diversity(fingerprints: Sequence[FingerprintVector]) -> tuple[float, float]:
    """Mean and std of Tanimoto over all unordered distinct pairs."""
    n = len(fingerprints)
    if n < 2:
        raise ValueError("diversity needs at least 2 molecules")
    sim = bulk_tanimoto_matrix(fingerprints)
    upper = sim[np.triu_indices(n, k=1)]
    return float(upper.mean()), float(upper.std())


def inter_dataset_similarity_matrix(
    named_sets: Sequence[tuple[str, Sequence[FingerprintVector]]],
    singleton_diagonal: float | None = 1.0,
) -> tuple[tuple[str, ...], np.ndarray]:
    """Mean cross-dataset Tanimoto; the diagonal uses the intra definition.

    Single-molecule datasets have no intra pairs; their diagonal takes the
    configured convention value, or raises when it is None.
    """
    names = tuple(name for name, _ in named_sets)
    if len(set(names)) != len(names):
        raise ValueError("dataset names must be unique")
    sets = [list(fps) for _, fps in named_sets]
    for name, fps in zip(names, sets):
        if not fps:
            raise ValueError(f"dataset {name!r} is empty")
    k = len(sets)
    M = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            if i == j:
                if len(sets[i]) == 1:
                    if singleton_diagonal is None:
                        raise ValueError(f"dataset {names[i]!r} is a singleton")
                    M[i, i] = singleton_diagonal
                else:
                    M[i, i] = intra_dataset_diversity(sets[i])[0]
            else:
                M[i, j] = M[j, i] = float(bulk_tanimoto_matrix(sets[i], sets[j]).mean())
    return names, M


def write_similarity_csv(path, names: Sequence[str], matrix: np.ndarray):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset"] + list(names))
        for name, row in zip(names, matrix):
            writer.writerow([name] + [repr(float(v)) for v in row])
