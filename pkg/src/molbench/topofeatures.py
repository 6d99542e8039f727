"""Topological baseline featurizers with fixed-length output vectors.

Two families: local degree/topology profiles (per-atom statistics binned
into histograms) and betweenness/overlap descriptors (per-edge scores binned
into histograms, plus element and bond-order counts). Vector length depends
only on the bin configuration, never on molecule size.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fingerprints import ATOM_COUNT_ELEMENTS
from .molgraph import BondOrder, Molecule

DEGREE_RANGE = (0.0, 8.0)
UNIT_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "schema", tuple(self.schema))
        if values.shape != (len(self.schema),):
            raise ValueError("values length does not match schema")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature vector contains NaN or inf")


def write_features_csv(path, ids: Sequence[str], vectors: Sequence[FeatureVector]):
    if not vectors:
        raise ValueError("nothing to write")
    schema = vectors[0].schema
    for v in vectors:
        if v.schema != schema:
            raise ValueError("mixed feature schemas")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + list(schema))
        for mol_id, v in zip(ids, vectors, strict=True):
            writer.writerow([mol_id] + [repr(float(x)) for x in v.values])


def _histogram(values, bins: int, lo: float, hi: float, name: str):
    """Fixed-range histogram; out-of-range values land in the edge bins."""
    counts = np.zeros(bins, dtype=np.float64)
    width = (hi - lo) / bins
    for x in values:
        k = int((x - lo) / width) if width > 0 else 0
        counts[min(max(k, 0), bins - 1)] += 1.0
    labels = tuple(f"{name}_bin{k}" for k in range(bins))
    return counts, labels


def _neighbor_sets(mol: Molecule) -> list[set[int]]:
    return [{j for j, _ in mol.neighbors(i)} for i in range(mol.n_atoms)]


def ltp_features(mol: Molecule, bins: int = 8) -> FeatureVector:
    """Histograms of per-atom degree statistics and neighborhood overlap.

    Per atom: degree; min/max/mean/std of neighbor degrees; mean Jaccard
    overlap of incident-edge neighborhoods; local degree score (neighbor
    degree sum over own degree). Atoms without neighbors contribute 0 to
    every neighbor-derived statistic.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    nbrs = _neighbor_sets(mol)
    degree = [float(len(s)) for s in nbrs]
    mins, maxs, means, stds, overlaps, local_scores = [], [], [], [], [], []
    for i in range(mol.n_atoms):
        ds = [degree[j] for j in nbrs[i]]
        if ds:
            mins.append(min(ds))
            maxs.append(max(ds))
            means.append(sum(ds) / len(ds))
            stds.append(float(np.std(ds)))
            local_scores.append(sum(ds) / degree[i])
            ovs = []
            for j in nbrs[i]:
                union = nbrs[i] | nbrs[j]
                ovs.append(len(nbrs[i] & nbrs[j]) / len(union) if union else 0.0)
            overlaps.append(sum(ovs) / len(ovs))
        else:
            mins.append(0.0)
            maxs.append(0.0)
            means.append(0.0)
            stds.append(0.0)
            local_scores.append(0.0)
            overlaps.append(0.0)
    parts = [
        ("degree", degree, DEGREE_RANGE),
        ("nbr_deg_min", mins, DEGREE_RANGE),
        ("nbr_deg_max", maxs, DEGREE_RANGE),
        ("nbr_deg_mean", means, DEGREE_RANGE),
        ("nbr_deg_std", stds, DEGREE_RANGE),
        ("edge_jaccard", overlaps, UNIT_RANGE),
        ("local_degree_score", local_scores, DEGREE_RANGE),
    ]
    values, schema = [], []
    for name, data, (lo, hi) in parts:
        counts, labels = _histogram(data, bins, lo, hi, name)
        values.append(counts)
        schema.extend(labels)
    return FeatureVector(values=np.concatenate(values), schema=tuple(schema))


def edge_betweenness(mol: Molecule) -> np.ndarray:
    """Per-bond betweenness: shortest-path load summed over unordered pairs.

    Brandes accumulation run from every source; each {s,t} pair distributes
    one unit over its shortest paths, so the directed totals are halved.
    """
    n = mol.n_atoms
    bond_idx = {(b.a, b.b): k for k, b in enumerate(mol.bonds)}
    scores = np.zeros(mol.n_bonds, dtype=np.float64)
    for s in range(n):
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1)
        dist[s] = 0
        order = []
        queue = [s]
        head = 0
        preds: list[list[int]] = [[] for _ in range(n)]
        while head < len(queue):
            u = queue[head]
            head += 1
            order.append(u)
            for v, _ in mol.neighbors(u):
                if dist[v] == -1:
                    dist[v] = dist[u] + 1
                    queue.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = np.zeros(n)
        for u in reversed(order):
            for p in preds[u]:
                share = sigma[p] / sigma[u] * (1.0 + delta[u])
                key = (p, u) if p < u else (u, p)
                scores[bond_idx[key]] += share
                delta[p] += share
    return scores / 2.0


def _pair_count(k: int) -> int:
    return k * (k - 1) // 2


def _adjusted_rand_index(part_a: np.ndarray, part_b: np.ndarray) -> float:
    """ARI of two binary indicator partitions; degenerate cases give 0."""
    n = len(part_a)
    n11 = int(np.sum(part_a & part_b))
    n10 = int(np.sum(part_a & ~part_b))
    n01 = int(np.sum(~part_a & part_b))
    n00 = n - n11 - n10 - n01
    sum_cells = sum(_pair_count(x) for x in (n11, n10, n01, n00))
    sum_rows = _pair_count(n11 + n10) + _pair_count(n01 + n00)
    sum_cols = _pair_count(n11 + n01) + _pair_count(n10 + n00)
    total = _pair_count(n)
    if total == 0:
        return 0.0
    expected = sum_rows * sum_cols / total
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 0.0
    return (sum_cells - expected) / (max_index - expected)


def scan_scores(mol: Molecule) -> np.ndarray:
    """Per-bond structural-similarity score (common neighbors + 2, normalized)."""
    nbrs = _neighbor_sets(mol)
    out = np.zeros(mol.n_bonds)
    for k, bond in enumerate(mol.bonds):
        common = len(nbrs[bond.a] & nbrs[bond.b])
        du, dv = len(nbrs[bond.a]), len(nbrs[bond.b])
        out[k] = (common + 2) / np.sqrt((du + 1) * (dv + 1))
    return out


def moltop_features(mol: Molecule, bins: int = 8) -> FeatureVector:
    """Edge betweenness/overlap histograms plus element and bond-order counts."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    nbrs = _neighbor_sets(mol)
    norm = _pair_count(mol.n_atoms) or 1
    betweenness = edge_betweenness(mol) / norm
    scan = scan_scores(mol)
    aris = []
    for bond in mol.bonds:
        ind_a = np.zeros(mol.n_atoms, dtype=bool)
        ind_b = np.zeros(mol.n_atoms, dtype=bool)
        ind_a[list(nbrs[bond.a])] = True
        ind_b[list(nbrs[bond.b])] = True
        aris.append(_adjusted_rand_index(ind_a, ind_b))
    values, schema = [], []
    for name, data, (lo, hi) in [
        ("edge_betweenness", betweenness, UNIT_RANGE),
        ("scan_score", scan, UNIT_RANGE),
        ("edge_ari", aris, UNIT_RANGE),
    ]:
        counts, labels = _histogram(data, bins, lo, hi, name)
        values.append(counts)
        schema.extend(labels)
    element_slots = {el: k for k, el in enumerate(ATOM_COUNT_ELEMENTS)}
    element_counts = np.zeros(len(ATOM_COUNT_ELEMENTS) + 1)
    for atom in mol.atoms:
        element_counts[element_slots.get(atom.element, len(ATOM_COUNT_ELEMENTS))] += 1
    values.append(element_counts)
    schema.extend([f"element_{el}" for el in ATOM_COUNT_ELEMENTS] + ["element_other"])
    bond_counts = np.zeros(4)
    for bond in mol.bonds:
        bond_counts[int(bond.order) - 1] += 1
    values.append(bond_counts)
    schema.extend([f"bond_{o.name.lower()}" for o in BondOrder])
    return FeatureVector(values=np.concatenate(values), schema=tuple(schema))
