import pytest

from molbench.dataio import (
    DatasetFormatError, load_labeled_dataset, read_smiles_file,
    write_smiles_file,
)
from molbench.molgraph import canonical_smiles


def write(path, text):
    path.write_text(text)
    return path


class TestLabeledCsv:
    def test_basic_load(self, tmp_path):
        path = write(tmp_path / "d.csv",
                     "id,smiles,label,year\na,CCO,1,1999\nb,CCC,0,2001\n")
        records = load_labeled_dataset(path)
        assert [r.id for r in records] == ["a", "b"]
        assert [r.label for r in records] == [1, 0]
        assert [r.year for r in records] == [1999, 2001]
        assert records[0].molecule.n_atoms == 3
        assert records[0].canonical == canonical_smiles("CCO")

    def test_column_sniffing_is_case_insensitive(self, tmp_path):
        path = write(tmp_path / "d.csv",
                     "CAS,Canonical_SMILES,Toxic\n64-17-5,CCO,yes\n")
        records = load_labeled_dataset(path)
        assert records[0].id == "64-17-5"
        assert records[0].label == 1

    def test_label_spellings(self, tmp_path):
        path = write(tmp_path / "d.csv",
                     "smiles,label\nCC,true\nCC(C)C,non-toxic\nCCO,0\n")
        records = load_labeled_dataset(path)
        assert [r.label for r in records] == [1, 0, 0]

    def test_bad_label_names_row(self, tmp_path):
        path = write(tmp_path / "d.csv", "smiles,label\nCC,1\nCCO,maybe\n")
        with pytest.raises(DatasetFormatError, match="maybe"):
            load_labeled_dataset(path)

    def test_missing_ids_are_generated(self, tmp_path):
        path = write(tmp_path / "d.csv", "smiles,label\nCC,1\nCCO,0\n")
        records = load_labeled_dataset(path)
        assert len({r.id for r in records}) == 2

    def test_duplicate_ids_rejected(self, tmp_path):
        path = write(tmp_path / "d.csv",
                     "id,smiles,label\nx,CC,1\nx,CCO,0\n")
        with pytest.raises(DatasetFormatError, match="duplicate"):
            load_labeled_dataset(path)

    def test_unparseable_smiles_names_row(self, tmp_path):
        path = write(tmp_path / "d.csv", "smiles,label\nCC,1\nC((,0\n")
        with pytest.raises(DatasetFormatError, match="row 3"):
            load_labeled_dataset(path)

    def test_missing_label_column(self, tmp_path):
        path = write(tmp_path / "d.csv", "smiles\nCC\n")
        with pytest.raises(DatasetFormatError, match="label"):
            load_labeled_dataset(path)
        records = load_labeled_dataset(path, require_labels=False)
        assert records[0].label is None

    def test_missing_smiles_column(self, tmp_path):
        path = write(tmp_path / "d.csv", "structure,label\nCC,1\n")
        with pytest.raises(DatasetFormatError, match="SMILES"):
            load_labeled_dataset(path)

    def test_empty_file(self, tmp_path):
        path = write(tmp_path / "d.csv", "")
        with pytest.raises(DatasetFormatError, match="empty"):
            load_labeled_dataset(path)


class TestSmilesFiles:
    def test_read_names_and_comments(self, tmp_path):
        path = write(tmp_path / "x.smi",
                     "# comment line\nCCO ethanol\nCC\n\nc1ccccc1 benzene\n")
        entries = read_smiles_file(path)
        # unnamed lines get positional names
        assert entries == [("CCO", "ethanol"), ("CC", "1"),
                           ("c1ccccc1", "benzene")]

    def test_write_read_round_trip(self, tmp_path):
        path = tmp_path / "x.smi"
        entries = [("CCO", "ethanol"), ("CC", "ethane")]
        write_smiles_file(path, entries)
        assert read_smiles_file(path) == entries
