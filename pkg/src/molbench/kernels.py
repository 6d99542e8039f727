"""Graph kernels over molecule datasets.

All kernels share the same shape of output, a :class:`KernelMatrix` over the
whole input list. Label compression dictionaries are dataset-global and
deterministic (first-encounter order over a fixed molecule iteration order).
Passing ``fit_indices`` restricts dictionary construction to those molecules;
atoms of the remaining molecules whose labels were never seen during fitting
map to a reserved bucket 0, which keeps train/test kernel computation free of
test-label influence.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .hashing import derive_seed
from .molgraph import Molecule, topological_distance_matrix


@dataclass(frozen=True)
class KernelMatrix:
    values: np.ndarray
    ids: tuple[str, ...]
    kernel_tag: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ids", tuple(self.ids))
        n = len(self.ids)
        if values.shape != (n, n):
            raise ValueError(f"matrix shape {values.shape} does not match {n} ids")
        if n and np.max(np.abs(values - values.T)) > 1e-12:
            raise ValueError("kernel matrix is not symmetric within 1e-12")

    @property
    def n(self) -> int:
        return len(self.ids)

    def submatrix(self, indices: Sequence[int]) -> "KernelMatrix":
        idx = np.asarray(indices, dtype=int)
        return KernelMatrix(
            values=self.values[np.ix_(idx, idx)],
            ids=tuple(self.ids[i] for i in idx),
            kernel_tag=self.kernel_tag,
        )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id"] + list(self.ids))
            for mol_id, row in zip(self.ids, self.values):
                writer.writerow([mol_id] + [repr(float(v)) for v in row])


def _default_ids(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


def _symmetrize(K: np.ndarray) -> np.ndarray:
    return (K + K.T) / 2.0


# ---------------------------------------------------------------------------
# Weisfeiler-Lehman refinement
# ---------------------------------------------------------------------------


def _atom_seed_key(mol: Molecule, i: int) -> tuple:
    atom = mol.atoms[i]
    return (atom.element, atom.formal_charge, atom.aromatic)


@dataclass
class WLLabeling:
    """Compressed atom labels for every refinement iteration 0..h.

    ``labels[i][m]`` is the integer label array of molecule ``m`` after
    iteration ``i``. Code 0 is reserved for labels unseen during fitting;
    fitted codes start at 1. ``alphabet_sizes[i]`` is one past the largest
    code of iteration ``i``.
    """

    h: int
    labels: list[list[np.ndarray]]
    alphabet_sizes: list[int]


def wl_relabel(dataset: Sequence[Molecule], h: int,
               fit_indices: Sequence[int] | None = None) -> WLLabeling:
    """Iterative neighborhood relabeling shared across the dataset.

    Iteration-0 labels come from (element, charge, aromatic); iteration i
    compresses (previous label, sorted multiset of (bond order, neighbor
    previous label)). Compression is injective per iteration over the fitted
    molecules.
    """
    if h < 0:
        raise ValueError("h must be non-negative")
    fit = set(range(len(dataset))) if fit_indices is None else set(fit_indices)
    alphabet: dict[tuple, int] = {}

    def encode(key: tuple, fitted: bool) -> int:
        code = alphabet.get(key)
        if code is None:
            if not fitted:
                return 0
            code = len(alphabet) + 1
            alphabet[key] = code
        return code

    current: list[np.ndarray] = []
    for m, mol in enumerate(dataset):
        fitted = m in fit
        codes = [encode(_atom_seed_key(mol, i), fitted) for i in range(mol.n_atoms)]
        current.append(np.array(codes, dtype=np.int64))
    labels = [current]
    sizes = [len(alphabet) + 1]

    for _ in range(h):
        alphabet = {}
        prev = labels[-1]
        current = []
        for m, mol in enumerate(dataset):
            fitted = m in fit
            old = prev[m]
            codes = []
            for i in range(mol.n_atoms):
                nbrs = tuple(sorted((int(order), int(old[j])) for j, order in mol.neighbors(i)))
                codes.append(encode((int(old[i]), nbrs), fitted))
            current.append(np.array(codes, dtype=np.int64))
        labels.append(current)
        sizes.append(len(alphabet) + 1)
    return WLLabeling(h=h, labels=labels, alphabet_sizes=sizes)


def _histogram_matrix(per_mol_labels: list[np.ndarray], size: int) -> sp.csr_matrix:
    rows, cols, data = [], [], []
    for m, codes in enumerate(per_mol_labels):
        values, counts = np.unique(codes, return_counts=True)
        rows.extend([m] * len(values))
        cols.extend(values.tolist())
        data.extend(counts.tolist())
    return sp.csr_matrix((data, (rows, cols)), shape=(len(per_mol_labels), size))


def wl_kernel_matrix(dataset: Sequence[Molecule], h: int = 3,
                     ids: Sequence[str] | None = None,
                     fit_indices: Sequence[int] | None = None) -> KernelMatrix:
    """WL subtree kernel: sum over iterations of histogram dot products."""
    labeling = wl_relabel(dataset, h, fit_indices)
    n = len(dataset)
    K = np.zeros((n, n))
    for i in range(h + 1):
        X = _histogram_matrix(labeling.labels[i], labeling.alphabet_sizes[i])
        K += (X @ X.T).toarray()
    return KernelMatrix(
        values=_symmetrize(K),
        ids=_default_ids(n) if ids is None else tuple(ids),
        kernel_tag=f"wl/h{h}",
    )


def _unary_expansion(per_mol_labels: list[np.ndarray], size: int) -> sp.csr_matrix:
    """Threshold features whose dot product equals histogram intersection.

    A count of c on label L becomes ones in columns (L,1)..(L,c), so
    row_G · row_G' = sum_L min(count_G(L), count_G'(L)).
    """
    n = len(per_mol_labels)
    max_count = np.zeros(size, dtype=np.int64)
    hists = []
    for codes in per_mol_labels:
        values, counts = np.unique(codes, return_counts=True)
        hists.append((values, counts))
        np.maximum.at(max_count, values, counts)
    offsets = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(max_count, out=offsets[1:])
    rows, cols = [], []
    for m, (values, counts) in enumerate(hists):
        for label, count in zip(values, counts):
            start = offsets[label]
            cols.extend(range(start, start + count))
            rows.extend([m] * count)
    data = np.ones(len(rows), dtype=np.float64)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, int(offsets[-1]) or 1))


def wloa_kernel_matrix(dataset: Sequence[Molecule], h: int = 3,
                       ids: Sequence[str] | None = None,
                       fit_indices: Sequence[int] | None = None) -> KernelMatrix:
    """WL optimal-assignment kernel via the histogram-intersection identity.

    Because WL labels refine hierarchically, the optimal assignment score
    equals the summed per-iteration histogram intersections; in particular
    k(G,G) = n_atoms * (h+1).
    """
    labeling = wl_relabel(dataset, h, fit_indices)
    n = len(dataset)
    K = np.zeros((n, n))
    for i in range(h + 1):
        X = _unary_expansion(labeling.labels[i], labeling.alphabet_sizes[i])
        K += (X @ X.T).toarray()
    return KernelMatrix(
        values=_symmetrize(K),
        ids=_default_ids(n) if ids is None else tuple(ids),
        kernel_tag=f"wloa/h{h}",
    )


def shortest_path_kernel_matrix(dataset: Sequence[Molecule],
                                ids: Sequence[str] | None = None,
                                fit_indices: Sequence[int] | None = None) -> KernelMatrix:
    """Dot product of histograms over (label_u, hop distance, label_v) triples.

    Labels are the iteration-0 WL labels; each unordered reachable pair
    contributes one triple with its endpoint labels sorted.
    """
    labeling = wl_relabel(dataset, 0, fit_indices)
    n = len(dataset)
    columns: dict[tuple, int] = {}
    rows, cols, data = [], [], []
    for m, mol in enumerate(dataset):
        codes = labeling.labels[0][m]
        dist = topological_distance_matrix(mol)
        hist: dict[tuple, int] = {}
        for i in range(mol.n_atoms):
            for j in range(i + 1, mol.n_atoms):
                d = int(dist[i, j])
                if d < 0:
                    continue
                lo, hi = sorted((int(codes[i]), int(codes[j])))
                key = (lo, d, hi)
                hist[key] = hist.get(key, 0) + 1
        for key, count in hist.items():
            col = columns.setdefault(key, len(columns))
            rows.append(m)
            cols.append(col)
            data.append(count)
    X = sp.csr_matrix((data, (rows, cols)), shape=(n, len(columns) or 1))
    K = (X @ X.T).toarray()
    return KernelMatrix(
        values=_symmetrize(K),
        ids=_default_ids(n) if ids is None else tuple(ids),
        kernel_tag="shortestpath",
    )


def _diffusion_matrix(mol: Molecule) -> np.ndarray:
    """Row-normalized adjacency; isolated atoms keep their own distribution."""
    n = mol.n_atoms
    A = np.zeros((n, n))
    for bond in mol.bonds:
        A[bond.a, bond.b] = 1.0
        A[bond.b, bond.a] = 1.0
    deg = A.sum(axis=1)
    T = np.zeros_like(A)
    nonzero = deg > 0
    T[nonzero] = A[nonzero] / deg[nonzero, None]
    T[~nonzero, ~nonzero] = 1.0
    return T


def propagation_kernel_matrix(dataset: Sequence[Molecule], t_max: int = 3,
                              bin_width: float = 1e-4, seed: int = 0,
                              ids: Sequence[str] | None = None,
                              fit_indices: Sequence[int] | None = None) -> KernelMatrix:
    """Diffused-label-distribution kernel with LSH binning.

    Atom label distributions start one-hot, are diffused by row-normalized
    adjacency averaging, and after every round (t = 0 .. t_max) each atom's
    distribution is quantized by a shared seeded Cauchy projection with the
    given bin width; the kernel accumulates bin-histogram dot products.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    labeling = wl_relabel(dataset, 0, fit_indices)
    size = labeling.alphabet_sizes[0]
    n = len(dataset)
    dists = []
    transitions = []
    for m, mol in enumerate(dataset):
        P = np.zeros((mol.n_atoms, size))
        P[np.arange(mol.n_atoms), labeling.labels[0][m]] = 1.0
        dists.append(P)
        transitions.append(_diffusion_matrix(mol))
    K = np.zeros((n, n))
    for t in range(t_max + 1):
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "propagation", t)))
        w = rng.standard_cauchy(size)
        b = rng.uniform(0.0, bin_width)
        columns: dict[int, int] = {}
        rows, cols, data = [], [], []
        for m in range(n):
            bins = np.floor((dists[m] @ w + b) / bin_width).astype(np.int64)
            values, counts = np.unique(bins, return_counts=True)
            for bin_id, count in zip(values, counts):
                col = columns.setdefault(int(bin_id), len(columns))
                rows.append(m)
                cols.append(col)
                data.append(count)
        X = sp.csr_matrix((data, (rows, cols)), shape=(n, len(columns) or 1))
        K += (X @ X.T).toarray()
        if t < t_max:
            dists = [transitions[m] @ dists[m] for m in range(n)]
    return KernelMatrix(
        values=_symmetrize(K),
        ids=_default_ids(n) if ids is None else tuple(ids),
        kernel_tag=f"propagation/t{t_max}/w{bin_width}/s{seed}",
    )


def normalize_kernel(K: KernelMatrix) -> KernelMatrix:
    """Cosine normalization: entry (i,j) divided by sqrt(K_ii * K_jj)."""
    diag = np.diag(K.values).copy()
    if np.any(diag <= 0):
        raise ValueError("normalization requires strictly positive diagonal")
    scale = 1.0 / np.sqrt(diag)
    values = K.values * scale[:, None] * scale[None, :]
    np.fill_diagonal(values, 1.0)
    return KernelMatrix(values=_symmetrize(values), ids=K.ids,
                        kernel_tag=K.kernel_tag + "/normalized")


def load_kernel_csv(path) -> KernelMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ids = tuple(header[1:])
        rows = [[float(v) for v in row[1:]] for row in reader]
    return KernelMatrix(values=np.array(rows), ids=ids, kernel_tag="loaded")
