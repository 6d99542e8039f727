"""Regenerate tests/data/corpus.smi deterministically.

The corpus mixes handwritten structures (aromatics, salts, organometallics,
ring-marker stress cases) with seeded random tree-plus-ring molecules built
through the graph API and serialized by the canonical writer.
"""

from __future__ import annotations

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from molbench.molgraph import (  # noqa: E402
    Atom, Bond, BondOrder, Molecule, parse_smiles, write_canonical_smiles,
)

HANDWRITTEN = [
    # small organics and functional groups
    "C", "CC", "CCO", "CC(C)O", "CC(=O)O", "CC(=O)OC", "CCN", "CCNC(C)C",
    "CC#N", "C#C", "C=C", "CC=CC", "OCC(O)CO", "NCC(=O)O", "CSC", "CS(=O)(=O)C",
    "OS(=O)(=O)O", "OP(=O)(O)O", "CCOP(=S)(OCC)Oc1ccccc1", "FC(F)(F)C",
    "ClCCl", "BrCBr", "ICI", "CCCCCCCCCC", "CC(C)(C)C", "C1CC1", "C1CCC1",
    "C1CCCCC1", "C1CCNCC1", "C1CCOCC1", "O1CCOCC1", "C1CCCCC1C1CCCCC1",
    "C1CC2CCC1CC2", "OC1CCCCC1O", "N1CCNCC1",
    # aromatics
    "c1ccccc1", "Cc1ccccc1", "Oc1ccccc1", "Nc1ccccc1", "c1ccncc1",
    "c1ccoc1", "c1ccsc1", "c1cc[nH]c1", "Clc1ccccc1Cl", "Cc1ccc(C)cc1",
    "c1ccc2ccccc2c1", "c1ccc2[nH]ccc2c1", "Cn1cccc1", "O=[N+]([O-])c1ccccc1",
    "Cc1ncccc1C", "c1cnc2ccccc2c1", "COc1ccc(N)cc1", "Fc1ccc(Br)cc1",
    "c1ccc(-c2ccccc2)cc1", "Cc1cccc(C)c1C", "[nH]1cccc1C(=O)O",
    # brackets: isotopes, charges, explicit hydrogens
    "[13CH4]", "[2H]O[2H]", "[CH3-]", "[NH4+]", "[OH-]", "[O-]C(=O)C",
    "C[N+](C)(C)C", "[15NH3]", "[13C]#[13C]", "[C-]#[O+]", "[N-]=[N+]=N",
    "[O-][n+]1ccccc1", "[Se]1CCCC1", "c1cc[se]c1", "[AsH3]", "c1cc[as]c1",
    # dotted salts (kept well above the twenty minimum)
    "[Na+].[Cl-]", "[K+].[Br-]", "[Li+].[I-]", "[NH4+].[Cl-]",
    "[Na+].[OH-]", "[Ca+2].[Cl-].[Cl-]", "[Mg+2].[O-]S([O-])(=O)=O",
    "CC(=O)[O-].[Na+]", "CCN.Cl", "c1ccncc1.Cl", "[Na+].[O-]c1ccccc1",
    "C[N+](C)(C)C.[Cl-]", "[K+].[K+].[O-]C(=O)C(=O)[O-]",
    "OC(=O)c1ccccc1.NCC", "[Na+].[O-][N+](=O)[O-]", "[Ba+2].[Br-].[Br-]",
    "CS(=O)(=O)[O-].[Na+]", "[Zn+2].[Cl-].[Cl-]", "[Fe+2].[O-]S([O-])(=O)=O",
    "CC(C)N.OC(=O)C", "[Cu+2].[O-]C(=O)C.[O-]C(=O)C", "[Na+].[N-]=[N+]=[N-]",
    "OCC(O)CO.OCC(O)CO.[Na+].[Cl-]", "Cl.Cl.NCCN",
    # organometallics and metal-bearing structures
    "C[Hg]C", "CC[Sn](CC)(CC)CC", "C[Zn]C", "[Pt+2].[Cl-].[Cl-]",
    "O=[Mn](=O)(=O)[O-].[K+]", "C[Si](C)(C)C", "[Fe].[Fe]", "Cl[Sn]Cl",
    "[Cu]I", "C[Pb](C)(C)C",
    # ring-marker stress: re-used digits, %nn markers, kekulized rings
    "C1CC1C1CC1", "C1CCC1C1CC1", "C%10CCCC%10", "C%12CC%12",
    "C12CC1C2", "C1CC2CC1C2", "C1=CC=CC=C1", "N1=CC=CC=C1",
]

ELEMENTS = ["C", "C", "C", "C", "N", "O", "S", "P", "F", "Cl", "Br"]
MAX_ORDER = {"C": 4, "N": 3, "O": 2, "S": 6, "P": 5, "F": 1, "Cl": 1, "Br": 1}


def random_molecule(rng: np.random.Generator) -> Molecule:
    n = int(rng.integers(2, 13))
    elements = [str(rng.choice(ELEMENTS)) for _ in range(n)]
    capacity = [MAX_ORDER[e] for e in elements]
    atoms = []
    bonds = []
    used = [0] * n
    for i in range(1, n):
        j = int(rng.integers(0, i))
        order = BondOrder.SINGLE
        if (capacity[i] - used[i] >= 2 and capacity[j] - used[j] >= 2
                and rng.random() < 0.2):
            order = BondOrder.DOUBLE
        bonds.append(Bond(a=j, b=i, order=order))
        used[i] += int(order)
        used[j] += int(order)
    # occasionally close one extra ring between spare-valence atoms
    if n >= 4 and rng.random() < 0.4:
        candidates = [k for k in range(n) if capacity[k] - used[k] >= 1]
        rng.shuffle(candidates)
        existing = {(b.a, b.b) for b in bonds}
        for a in candidates:
            for b in candidates:
                if a < b and (a, b) not in existing:
                    bonds.append(Bond(a=a, b=b, order=BondOrder.SINGLE))
                    existing.add((a, b))
                    a = None
                    break
            if a is None:
                break
    for i in range(n):
        charge = 0
        isotope = None
        if rng.random() < 0.05:
            charge = int(rng.choice([-1, 1]))
        if rng.random() < 0.05:
            isotope = {"C": 13, "N": 15, "O": 18, "S": 34, "P": 31,
                       "F": 19, "Cl": 37, "Br": 81}[elements[i]]
        h = max(0, MAX_ORDER[elements[i]] - used[i]) if charge == 0 else 0
        atoms.append(Atom(element=elements[i], formal_charge=charge,
                          isotope=isotope, explicit_h_count=h,
                          aromatic=False, index=i))
    return Molecule(atoms=tuple(atoms), bonds=tuple(bonds))


def main():
    rng = np.random.Generator(np.random.PCG64(20240917))
    seen = set()
    lines = []
    for smi in HANDWRITTEN:
        parse_smiles(smi)
        if smi not in seen:
            seen.add(smi)
            lines.append(smi)
    while len(lines) < 210:
        smi = write_canonical_smiles(random_molecule(rng))
        parse_smiles(smi)
        if smi not in seen:
            seen.add(smi)
            lines.append(smi)
    out = os.path.join(os.path.dirname(__file__), "..", "tests", "data",
                       "corpus.smi")
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w") as fh:
        fh.write("# synthetic SMILES corpus used by the parser test suite\n")
        for k, smi in enumerate(lines):
            fh.write(f"{smi}\tmol{k:03d}\n")
    n_salts = sum(1 for s in lines if "." in s)
    metals = ("Hg", "Sn", "Zn", "Pt", "Mn", "Fe", "Cu", "Pb", "Si")
    n_metal = sum(1 for s in lines if any(m in s for m in metals))
    print(f"{len(lines)} molecules, {n_salts} dotted, {n_metal} metal-bearing -> {out}")


if __name__ == "__main__":
    main()
