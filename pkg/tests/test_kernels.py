import numpy as np
import pytest
from oracles import wl_oracle, wloa_oracle

from molbench.kernels import (
    KernelMatrix, load_kernel_csv, normalize_kernel, propagation_kernel_matrix,
    shortest_path_kernel_matrix, wl_kernel_matrix, wl_relabel,
    wloa_kernel_matrix,
)
from molbench.molgraph import parse_smiles, permute_atoms


SMALL = ["C", "CC", "CCO", "CC(C)O", "C1CC1", "c1ccccc1", "CC#N", "OCC=O",
         "[Na+].[Cl-]", "C=CC=C", "NCCO", "S1CCC1"]


class TestWL:
    def test_matches_uncompressed_oracle(self, sample_molecules):
        mols = sample_molecules[:12]
        K = wl_kernel_matrix(mols, h=3)
        for i in range(len(mols)):
            for j in range(len(mols)):
                assert K.values[i, j] == wl_oracle(mols[i], mols[j], 3), (i, j)

    def test_symmetric_and_psd(self, sample_molecules):
        K = wl_kernel_matrix(sample_molecules, h=3)
        assert np.max(np.abs(K.values - K.values.T)) <= 1e-12
        assert np.linalg.eigvalsh(K.values).min() >= -1e-8

    def test_unseen_labels_map_to_reserved_bucket(self):
        mols = [parse_smiles(s) for s in ("CCO", "CCC", "CCBr")]
        labeling = wl_relabel(mols, h=1, fit_indices=[0, 1])
        # bromine was never seen during fitting, so its code is 0
        assert 0 in labeling.labels[0][2]
        assert all(0 not in labeling.labels[0][m] for m in (0, 1))

    def test_fit_restricted_matrix_still_valid(self, sample_molecules):
        K = wl_kernel_matrix(sample_molecules, h=2,
                             fit_indices=range(10))
        assert np.max(np.abs(K.values - K.values.T)) <= 1e-12
        assert np.linalg.eigvalsh(K.values).min() >= -1e-8


class TestWLOA:
    def test_matches_hungarian_oracle_on_small_molecules(self):
        mols = [parse_smiles(s) for s in SMALL if parse_smiles(s).n_atoms <= 6]
        assert len(mols) >= 8
        K = wloa_kernel_matrix(mols, h=3)
        for i in range(len(mols)):
            for j in range(len(mols)):
                assert K.values[i, j] == pytest.approx(
                    wloa_oracle(mols[i], mols[j], 3), abs=1e-9), (i, j)

    def test_self_similarity_counts_every_level(self):
        for smi in ("CCO", "c1ccccc1", "CC(C)CC"):
            mol = parse_smiles(smi)
            K = wloa_kernel_matrix([mol], h=3)
            assert K.values[0, 0] == mol.n_atoms * 4

    def test_symmetric_and_psd(self, sample_molecules):
        K = wloa_kernel_matrix(sample_molecules, h=3)
        assert np.max(np.abs(K.values - K.values.T)) <= 1e-12
        assert np.linalg.eigvalsh(K.values).min() >= -1e-8


class TestShortestPath:
    def test_triple_counting_by_hand(self):
        cco, ccc = parse_smiles("CCO"), parse_smiles("CCC")
        K = shortest_path_kernel_matrix([cco, ccc])
        # CCO: (C,1,C), (C,1,O), (C,2,O); CCC: (C,1,C) x2, (C,2,C)
        assert K.values[0, 0] == 3
        assert K.values[1, 1] == 5
        assert K.values[0, 1] == 2

    def test_disconnected_pairs_contribute_nothing(self):
        salt = parse_smiles("[Na+].[Cl-]")
        K = shortest_path_kernel_matrix([salt])
        assert K.values[0, 0] == 0.0

    def test_symmetric_and_psd(self, sample_molecules):
        K = shortest_path_kernel_matrix(sample_molecules)
        assert np.max(np.abs(K.values - K.values.T)) <= 1e-12
        assert np.linalg.eigvalsh(K.values).min() >= -1e-8


class TestPropagation:
    def test_deterministic_under_seed(self, sample_molecules):
        a = propagation_kernel_matrix(sample_molecules, seed=7)
        b = propagation_kernel_matrix(sample_molecules, seed=7)
        assert np.array_equal(a.values, b.values)

    def test_wide_bins_collapse_all_distributions(self):
        # with an enormous bin width every atom lands in the same bin, so
        # each round contributes n_a * n_b and the kernel is (t_max+1) * n_a * n_b
        mols = [parse_smiles("CCO"), parse_smiles("CCCC")]
        K = propagation_kernel_matrix(mols, t_max=3, bin_width=1e9, seed=0)
        assert K.values[0, 1] == pytest.approx(4 * 3 * 4)
        assert K.values[0, 0] == pytest.approx(4 * 9)

    def test_isomorphic_copies_indistinguishable(self, rng):
        mol = parse_smiles("CC(=O)Oc1ccccc1")
        twin = permute_atoms(mol, list(rng.permutation(mol.n_atoms)))
        K = propagation_kernel_matrix([mol, twin], seed=3)
        assert K.values[0, 0] == pytest.approx(K.values[1, 1])
        assert K.values[0, 1] == pytest.approx(K.values[0, 0])

    def test_symmetric_and_psd(self, sample_molecules):
        K = propagation_kernel_matrix(sample_molecules, seed=0)
        assert np.max(np.abs(K.values - K.values.T)) <= 1e-12
        assert np.linalg.eigvalsh(K.values).min() >= -1e-8


class TestNormalize:
    def test_known_two_by_two(self):
        K = KernelMatrix(values=np.array([[4.0, 2.0], [2.0, 9.0]]),
                         ids=("a", "b"), kernel_tag="test")
        N = normalize_kernel(K)
        expected = np.array([[1.0, 1 / 3], [1 / 3, 1.0]])
        assert np.allclose(N.values, expected, atol=1e-15)

    def test_diagonal_exactly_one(self, sample_molecules):
        K = normalize_kernel(wl_kernel_matrix(sample_molecules, h=3))
        assert np.all(np.diag(K.values) == 1.0)

    def test_zero_diagonal_rejected(self):
        salt = parse_smiles("[Na+].[Cl-]")
        K = shortest_path_kernel_matrix([salt])
        with pytest.raises(ValueError):
            normalize_kernel(K)


class TestKernelMatrix:
    def test_asymmetry_rejected(self):
        with pytest.raises(ValueError):
            KernelMatrix(values=np.array([[1.0, 0.5], [0.2, 1.0]]),
                         ids=("a", "b"), kernel_tag="bad")

    def test_shape_id_mismatch_rejected(self):
        with pytest.raises(ValueError):
            KernelMatrix(values=np.eye(3), ids=("a", "b"), kernel_tag="bad")

    def test_submatrix_preserves_ids(self, sample_molecules):
        K = wl_kernel_matrix(sample_molecules, h=1)
        sub = K.submatrix([3, 1, 7])
        assert sub.ids == (K.ids[3], K.ids[1], K.ids[7])
        assert sub.values[0, 2] == K.values[3, 7]

    def test_csv_round_trip(self, tmp_path, sample_molecules):
        K = normalize_kernel(wl_kernel_matrix(sample_molecules[:6], h=2,
                                              ids=[f"m{k}" for k in range(6)]))
        path = tmp_path / "kernel.csv"
        K.to_csv(path)
        restored = load_kernel_csv(path)
        assert restored.ids == K.ids
        assert np.array_equal(restored.values, K.values)
