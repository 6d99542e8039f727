import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molbench.molgraph import (
    BondOrder, Molecule, SmilesParseError, StereoDiscardedWarning, UNREACHABLE,
    canonical_ranks, canonical_smiles, connected_components, parse_smiles,
    permute_atoms, ring_flags, topological_distance_matrix,
    write_canonical_smiles,
)
from strategies import molecules


def hydrogens(smi):
    mol = parse_smiles(smi)
    return [a.explicit_h_count for a in mol.atoms]


class TestImplicitHydrogens:
    def test_alkane_chain(self):
        assert hydrogens("CCC") == [3, 2, 3]

    def test_double_and_triple_bonds(self):
        assert hydrogens("C=C") == [2, 2]
        assert hydrogens("C#C") == [1, 1]
        assert hydrogens("C#N") == [1, 0]

    def test_heteroatoms(self):
        assert hydrogens("O") == [2]
        assert hydrogens("N") == [3]
        assert hydrogens("S") == [2]

    def test_higher_valence_states(self):
        # sulfate-style S uses valence 6, phosphate P valence 5
        assert hydrogens("OS(=O)(=O)O")[1] == 0
        assert hydrogens("OP(=O)(O)O")[1] == 0
        # charged/bracket atoms take only their written hydrogen count
        assert hydrogens("[NH4+]") == [4]
        assert hydrogens("[CH3-]") == [3]
        assert hydrogens("[N]") == [0]

    def test_aromatic_ring_hydrogens(self):
        assert hydrogens("c1ccccc1") == [1] * 6
        # pyridine nitrogen carries no hydrogen, pyrrole needs [nH]
        assert hydrogens("c1ccncc1")[3] == 0
        assert hydrogens("c1cc[nH]c1")[3] == 1
        assert hydrogens("c1ccoc1")[3] == 0
        assert hydrogens("c1ccsc1")[3] == 0

    def test_substituted_aromatic_carbon(self):
        mol = parse_smiles("Cc1ccccc1")
        assert mol.atoms[1].explicit_h_count == 0


class TestBracketAtoms:
    def test_isotope_charge_hcount(self):
        mol = parse_smiles("[13CH3-]")
        atom = mol.atoms[0]
        assert atom.isotope == 13
        assert atom.explicit_h_count == 3
        assert atom.formal_charge == -1

    def test_multidigit_charge_forms(self):
        assert parse_smiles("[Ca+2]").atoms[0].formal_charge == 2
        assert parse_smiles("[Ca++]").atoms[0].formal_charge == 2
        assert parse_smiles("[O--]").atoms[0].formal_charge == -2

    def test_atom_class_discarded(self):
        assert canonical_smiles("[CH4:7]") == canonical_smiles("[CH4]")

    def test_chirality_discarded_with_warning(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            a = canonical_smiles("C[C@H](N)C(=O)O")
            b = canonical_smiles("C[C@@H](N)C(=O)O")
        assert a == b
        assert any(issubclass(w.category, StereoDiscardedWarning) for w in caught)

    def test_directional_bonds_discarded(self):
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            assert canonical_smiles("F/C=C/F") == canonical_smiles("FC=CF")


class TestRingClosures:
    def test_simple_ring(self):
        mol = parse_smiles("C1CCCCC1")
        assert len(mol.bonds) == 6

    def test_percent_markers(self):
        assert canonical_smiles("C%10CCCC%10") == canonical_smiles("C1CCCC1")

    def test_marker_reuse_after_closing(self):
        mol = parse_smiles("C1CC1C1CC1")
        assert len(mol.bonds) == 7

    def test_closure_across_dot_is_a_bond(self):
        assert canonical_smiles("C1.C1") == canonical_smiles("CC")

    def test_bond_order_on_either_side(self):
        assert canonical_smiles("C=1CCCCC1") == canonical_smiles("C1CCCCC=1")

    def test_conflicting_ring_bond_orders(self):
        with pytest.raises(SmilesParseError):
            parse_smiles("C=1CCCCC#1")

    def test_unclosed_marker(self):
        with pytest.raises(SmilesParseError):
            parse_smiles("C1CCC")

    def test_self_closure_rejected(self):
        with pytest.raises(SmilesParseError):
            parse_smiles("C11")


class TestParseErrors:
    @pytest.mark.parametrize("bad", [
        "", "C(", "C)", "C()C", "(<", "C(C", "CC)", "[C", "[]", "[Xx]",
        "C=", "=C", "C..C", ".", "C%1", "C%", "[C+H]", "[13]", "Cz", "zC",
        "C1CC2", "C==C",
    ])
    def test_rejected(self, bad):
        with pytest.raises(SmilesParseError):
            parse_smiles(bad)

    def test_error_carries_position(self):
        with pytest.raises(SmilesParseError) as err:
            parse_smiles("CC(C")
        assert "position" in str(err.value)

    def test_maximal_munch_two_letter_symbols(self):
        assert parse_smiles("ClCCl").atoms[0].element == "Cl"
        assert parse_smiles("BrBr").n_atoms == 2
        with pytest.raises(SmilesParseError):
            parse_smiles("CA")


class TestCanonical:
    def test_atom_order_does_not_matter(self):
        assert canonical_smiles("CCO") == canonical_smiles("OCC")
        assert canonical_smiles("C(O)C") == canonical_smiles("CCO")

    def test_component_order_does_not_matter(self):
        assert canonical_smiles("[Na+].[Cl-]") == canonical_smiles("[Cl-].[Na+]")

    def test_round_trip_fixed_point_on_corpus(self, corpus):
        for smi, name in corpus:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                once = canonical_smiles(smi)
                twice = canonical_smiles(once)
            assert once == twice, f"{name}: {smi!r} -> {once!r} -> {twice!r}"

    def test_permutation_invariance_on_corpus(self, corpus, rng):
        for smi, name in corpus:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                mol = parse_smiles(smi)
            perm = list(rng.permutation(mol.n_atoms))
            shuffled = permute_atoms(mol, perm)
            assert write_canonical_smiles(shuffled) == write_canonical_smiles(mol), name

    def test_ranks_form_total_order(self):
        mol = parse_smiles("c1ccccc1")
        ranks = canonical_ranks(mol)
        assert sorted(ranks.values()) == list(range(6))

    def test_ranks_respect_symmetry_classes(self):
        # the three methyls of isobutane are interchangeable: relabeling any
        # two of them must not change the canonical string
        mol = parse_smiles("CC(C)C")
        swapped = permute_atoms(mol, [2, 1, 0, 3])
        assert write_canonical_smiles(swapped) == write_canonical_smiles(mol)

    @given(mol=molecules())
    @settings(max_examples=150, deadline=None)
    def test_write_parse_fixed_point(self, mol):
        smi = write_canonical_smiles(mol)
        assert write_canonical_smiles(parse_smiles(smi)) == smi

    @given(mol=molecules(), data=st.data())
    @settings(max_examples=150, deadline=None)
    def test_canonical_is_permutation_invariant(self, mol, data):
        perm = data.draw(st.permutations(list(range(mol.n_atoms))))
        shuffled = permute_atoms(mol, perm)
        assert write_canonical_smiles(shuffled) == write_canonical_smiles(mol)

    @given(text=st.text(max_size=40))
    @settings(max_examples=300, deadline=None)
    def test_fuzz_never_crashes(self, text):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                mol = parse_smiles(text)
            write_canonical_smiles(mol)
        except SmilesParseError:
            pass


class TestGraphPrimitives:
    def test_distance_matrix(self):
        mol = parse_smiles("CCO")
        dist = topological_distance_matrix(mol)
        assert dist[0, 2] == 2
        assert dist[0, 0] == 0

    def test_unreachable_across_components(self):
        mol = parse_smiles("[Na+].[Cl-]")
        dist = topological_distance_matrix(mol)
        assert dist[0, 1] == UNREACHABLE

    def test_ring_flags(self):
        mol = parse_smiles("Cc1ccccc1")
        atom_in_ring, bond_in_ring = ring_flags(mol)
        assert not atom_in_ring[0]
        assert atom_in_ring[1:].all()
        assert bond_in_ring.sum() == 6

    def test_connected_components_sorted_large_first(self):
        mol = parse_smiles("[Na+].c1ccccc1")
        parts = connected_components(mol)
        assert [p.n_atoms for p in parts] == [6, 1]

    def test_neighbors_and_orders(self):
        mol = parse_smiles("C=CC")
        assert mol.bond_order(0, 1) == BondOrder.DOUBLE
        assert mol.bond_order(1, 2) == BondOrder.SINGLE
        assert {j for j, _ in mol.neighbors(1)} == {0, 2}

    def test_molecule_validates_indices(self):
        with pytest.raises(ValueError):
            Molecule(atoms=(), bonds=())
        mol = parse_smiles("CC")
        with pytest.raises(ValueError):
            Molecule(atoms=mol.atoms, bonds=mol.bonds * 2)
