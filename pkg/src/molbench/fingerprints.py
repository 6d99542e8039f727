"""Hashed molecular fingerprints and Tanimoto similarity.

All schemes hash code tuples with FNV-1a over a canonical byte serialization
(:mod:`molbench.hashing`), so feature ids are stable across platforms and
runs. Vectors are sparse maps from feature id to count; when ``n_bits`` is
set, ids are folded modulo ``n_bits`` at construction time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hashing import hash_code
from .molgraph import Molecule, ring_flags, topological_distance_matrix

# Element slots of the fixed count-vector schema; everything else lands in
# the trailing "other" bucket.
ATOM_COUNT_ELEMENTS = (
    "C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B",
    "Si", "Na", "K", "Ca", "Mg", "Zn", "Cu", "Mn", "Fe", "Sn", "Hg", "As",
)
ATOM_COUNT_SCHEMA = ATOM_COUNT_ELEMENTS + ("other", "heavy_atoms", "bonds")


class SchemeMismatchError(ValueError):
    """Fingerprints from different schemes were compared."""


@dataclass(frozen=True)
class FingerprintVector:
    """Sparse feature counts under a named scheme.

    ``n_bits`` of ``None`` means raw 64-bit feature ids; otherwise every key
    has already been folded into ``range(n_bits)``.
    """

    counts: dict[int, int]
    scheme_tag: str
    n_bits: int | None = None

    def __post_init__(self):
        for fid, count in self.counts.items():
            if count <= 0:
                raise ValueError("sparse counts must be strictly positive")
            if self.n_bits is not None and not (0 <= fid < self.n_bits):
                raise ValueError("folded feature id out of range")

    @property
    def presence(self) -> frozenset[int]:
        return frozenset(self.counts)

    @property
    def n_features(self) -> int:
        return len(self.counts)

    def to_dense(self) -> np.ndarray:
        if self.n_bits is None:
            raise ValueError("raw 64-bit fingerprints have no dense form")
        out = np.zeros(self.n_bits, dtype=np.float64)
        for fid, count in self.counts.items():
            out[fid] = count
        return out

    def to_record(self) -> dict:
        """JSON-serializable form; inverse of :func:`fingerprint_from_record`."""
        return {
            "scheme_tag": self.scheme_tag,
            "n_bits": self.n_bits,
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
        }


def fingerprint_from_record(record: dict) -> FingerprintVector:
    return FingerprintVector(
        counts={int(k): int(v) for k, v in record["counts"].items()},
        scheme_tag=record["scheme_tag"],
        n_bits=record["n_bits"],
    )


def write_fingerprints_jsonl(path, ids: Sequence[str], fps: Sequence[FingerprintVector]):
    with open(path, "w") as fh:
        for mol_id, fp in zip(ids, fps, strict=True):
            rec = fp.to_record()
            rec["id"] = mol_id
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _check_n_bits(n_bits: int):
    if not (64 <= n_bits <= 2**20) or n_bits & (n_bits - 1):
        raise ValueError(f"n_bits must be a power of two in [64, 2^20], got {n_bits}")


def _fold(raw: dict[int, int], n_bits: int | None) -> dict[int, int]:
    if n_bits is None:
        return dict(raw)
    folded: dict[int, int] = {}
    for fid, count in raw.items():
        key = fid % n_bits
        folded[key] = folded.get(key, 0) + count
    return folded


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------


def ecfp(mol: Molecule, radius: int = 2, n_bits: int | None = 2048,
         counted: bool = False) -> FingerprintVector:
    """Circular (Morgan) fingerprint of the given radius.

    Radius 2 with 2048 bits is the usual ECFP4 configuration. The binary
    variant keeps each distinct environment id once per iteration; the
    counted variant accumulates one hit per atom per iteration.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if n_bits is not None:
        _check_n_bits(n_bits)
    atom_ring, _ = ring_flags(mol)
    ids = [
        hash_code((
            atom.element,
            mol.degree(i),
            atom.formal_charge,
            atom.explicit_h_count,
            bool(atom_ring[i]),
            atom.aromatic,
        ))
        for i, atom in enumerate(mol.atoms)
    ]
    raw: dict[int, int] = {}

    def absorb(iteration_ids):
        pool = set(iteration_ids) if not counted else iteration_ids
        for fid in pool:
            raw[fid] = raw.get(fid, 0) + 1

    absorb(ids)
    for r in range(1, radius + 1):
        new_ids = []
        for i in range(mol.n_atoms):
            env = sorted((int(order), ids[j]) for j, order in mol.neighbors(i))
            new_ids.append(hash_code((r, ids[i], tuple(env))))
        absorb(new_ids)
        ids = new_ids
    tag = f"ecfp/r{radius}/{'counted' if counted else 'binary'}"
    return FingerprintVector(counts=_fold(raw, n_bits), scheme_tag=tag, n_bits=n_bits)


def _pair_code(mol: Molecule, i: int) -> tuple:
    atom = mol.atoms[i]
    return (atom.element, mol.degree(i), atom.aromatic)


def atom_pairs(mol: Molecule, n_bits: int | None = 2048) -> FingerprintVector:
    """One feature per connected atom pair: (sorted codes, topological distance)."""
    if n_bits is not None:
        _check_n_bits(n_bits)
    dist = topological_distance_matrix(mol)
    codes = [_pair_code(mol, i) for i in range(mol.n_atoms)]
    raw: dict[int, int] = {}
    for i in range(mol.n_atoms):
        for j in range(i + 1, mol.n_atoms):
            d = int(dist[i, j])
            if d < 0:
                continue
            lo, hi = sorted((codes[i], codes[j]))
            fid = hash_code((lo, d, hi))
            raw[fid] = raw.get(fid, 0) + 1
    return FingerprintVector(counts=_fold(raw, n_bits), scheme_tag="atompairs", n_bits=n_bits)


def topological_torsion(mol: Molecule, n_bits: int | None = 2048) -> FingerprintVector:
    """One feature per simple 4-atom path, direction-normalized."""
    if n_bits is not None:
        _check_n_bits(n_bits)
    codes = [_pair_code(mol, i) for i in range(mol.n_atoms)]
    raw: dict[int, int] = {}
    for bond in mol.bonds:
        b, c = bond.a, bond.b
        for a, order_ab in mol.neighbors(b):
            if a == c:
                continue
            for d, order_cd in mol.neighbors(c):
                if d == b or d == a:
                    continue
                seq = (codes[a], int(order_ab), codes[b], int(bond.order),
                       codes[c], int(order_cd), codes[d])
                rev = tuple(reversed(seq))
                fid = hash_code(min(seq, rev))
                raw[fid] = raw.get(fid, 0) + 1
    return FingerprintVector(counts=_fold(raw, n_bits), scheme_tag="torsion", n_bits=n_bits)


def _path_code(mol: Molecule, atoms: Sequence[int]) -> tuple:
    parts: list = []
    for pos, i in enumerate(atoms):
        atom = mol.atoms[i]
        parts.append((atom.element, atom.aromatic))
        if pos + 1 < len(atoms):
            parts.append(int(mol.bond_order(i, atoms[pos + 1])))
    return tuple(parts)


def path_fingerprint(mol: Molecule, min_len: int = 1, max_len: int = 7,
                     n_bits: int | None = 2048) -> FingerprintVector:
    """Hashes simple paths whose bond count lies in [min_len, max_len]."""
    if not (1 <= min_len <= max_len <= 7):
        raise ValueError("need 1 <= min_len <= max_len <= 7")
    if n_bits is not None:
        _check_n_bits(n_bits)
    raw: dict[int, int] = {}

    def extend(path: list[int], on_path: set[int]):
        length = len(path) - 1
        if length >= min_len:
            fwd = _path_code(mol, path)
            rev = tuple(reversed(fwd))
            # Each undirected path is walked twice; keep one direction.
            if (fwd, tuple(path)) <= (rev, tuple(reversed(path))):
                fid = hash_code(min(fwd, rev))
                raw[fid] = raw.get(fid, 0) + 1
        if length == max_len:
            return
        for j, _ in mol.neighbors(path[-1]):
            if j not in on_path:
                path.append(j)
                on_path.add(j)
                extend(path, on_path)
                on_path.remove(j)
                path.pop()

    for start in range(mol.n_atoms):
        extend([start], {start})
    tag = f"paths/{min_len}-{max_len}"
    return FingerprintVector(counts=_fold(raw, n_bits), scheme_tag=tag, n_bits=n_bits)


def atom_count_vector(mol: Molecule) -> FingerprintVector:
    """Fixed-schema counts: per-element slots, other bucket, heavy atoms, bonds.

    Slot order is :data:`ATOM_COUNT_SCHEMA`; zero slots are simply absent
    from the sparse map, and the dense form has the schema's length.
    """
    slot = {el: k for k, el in enumerate(ATOM_COUNT_ELEMENTS)}
    other = len(ATOM_COUNT_ELEMENTS)
    counts: dict[int, int] = {}
    for atom in mol.atoms:
        k = slot.get(atom.element, other)
        counts[k] = counts.get(k, 0) + 1
    counts[other + 1] = mol.n_atoms
    if mol.n_bonds:
        counts[other + 2] = mol.n_bonds
    return FingerprintVector(
        counts=counts, scheme_tag="atomcounts", n_bits=len(ATOM_COUNT_SCHEMA)
    )


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------


def _require_same_scheme(a: FingerprintVector, b: FingerprintVector):
    if a.scheme_tag != b.scheme_tag or a.n_bits != b.n_bits:
        raise SchemeMismatchError(
            f"cannot compare {a.scheme_tag}/{a.n_bits} with {b.scheme_tag}/{b.n_bits}"
        )


def tanimoto(a: FingerprintVector, b: FingerprintVector, counted: bool = False) -> float:
    """Tanimoto similarity; binary presence form by default.

    The counted generalization uses sum-min over sum-max of counts. Two empty
    fingerprints compare as identical (1.0).
    """
    _require_same_scheme(a, b)
    if not a.counts and not b.counts:
        return 1.0
    if counted:
        keys = set(a.counts) | set(b.counts)
        num = sum(min(a.counts.get(k, 0), b.counts.get(k, 0)) for k in keys)
        den = sum(max(a.counts.get(k, 0), b.counts.get(k, 0)) for k in keys)
        return num / den
    sa, sb = a.presence, b.presence
    union = len(sa | sb)
    return len(sa & sb) / union


def _presence_matrix(fps: Sequence[FingerprintVector], columns: dict[int, int]) -> np.ndarray:
    out = np.zeros((len(fps), len(columns)), dtype=np.float64)
    for row, fp in enumerate(fps):
        for fid in fp.counts:
            out[row, columns[fid]] = 1.0
    return out


def bulk_tanimoto_matrix(A: Sequence[FingerprintVector],
                         B: Sequence[FingerprintVector] | None = None) -> np.ndarray:
    """Dense pairwise binary Tanimoto; entry (i, j) = tanimoto(A[i], B[j]).

    When B is omitted A is compared against itself (symmetric, unit
    diagonal). Computed via bit-matrix products, identical to the scalar
    definition.
    """
    symmetric = B is None
    fps_b = A if symmetric else B
    if not A or not fps_b:
        return np.zeros((len(A), len(fps_b)))
    ref = A[0]
    for fp in list(A) + list(fps_b):
        _require_same_scheme(ref, fp)
    columns: dict[int, int] = {}
    for fp in list(A) + list(fps_b):
        for fid in fp.counts:
            columns.setdefault(fid, len(columns))
    if not columns:
        return np.ones((len(A), len(fps_b)))
    mat_a = _presence_matrix(A, columns)
    mat_b = mat_a if symmetric else _presence_matrix(fps_b, columns)
    inter = mat_a @ mat_b.T
    size_a = mat_a.sum(axis=1)[:, None]
    size_b = mat_b.sum(axis=1)[None, :]
    union = size_a + size_b - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 1.0)
    return sim
