from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def corpus():
    """(smiles, name) entries of the bundled synthetic corpus."""
    entries = []
    with open(DATA_DIR / "corpus.smi") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            smi, name = line.split("\t")
            entries.append((smi, name))
    return entries


@pytest.fixture(scope="session")
def sample_molecules(corpus):
    """First 20 corpus molecules as parsed graphs, for kernel-scale tests."""
    from molbench.molgraph import parse_smiles

    return [parse_smiles(smi) for smi, _ in corpus[:20]]


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(987654321))
