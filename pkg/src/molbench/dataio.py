"""Loading labeled molecule datasets from CSV and plain SMILES files."""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .molgraph import Molecule, SmilesParseError, canonical_smiles, parse_smiles

_SMILES_COLUMNS = ("smiles", "canonical_smiles")
_LABEL_COLUMNS = ("label", "toxic", "y", "class")
_ID_COLUMNS = ("id", "name", "cas", "cid")
_YEAR_COLUMNS = ("year", "publication_year")


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MoleculeRecord:
    id: str
    smiles: str
    molecule: Molecule
    label: int | None = None
    year: int | None = None

    @property
    def canonical(self) -> str:
        return canonical_smiles(self.smiles)


def _pick_column(fieldnames, candidates) -> str | None:
    lowered = {name.strip().lower(): name for name in fieldnames}
    for cand in candidates:
        if cand in lowered:
            return lowered[cand]
    return None


def _parse_label(text: str):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "toxic"):
        return 1
    if value in ("0", "false", "no", "nontoxic", "non-toxic"):
        return 0
    raise DatasetFormatError(f"unrecognized label value {text!r}")


def load_labeled_dataset(path, require_labels: bool = True) -> list[MoleculeRecord]:
    """Read a CSV of molecules, sniffing column names case-insensitively.

    A SMILES column is required; label, id and year columns are optional
    unless ``require_labels`` is set. Unparseable rows raise with the row
    number and offending value so data problems surface immediately.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetFormatError(f"{path}: empty file")
        smiles_col = _pick_column(reader.fieldnames, _SMILES_COLUMNS)
        if smiles_col is None:
            raise DatasetFormatError(
                f"{path}: no SMILES column among {reader.fieldnames}"
            )
        label_col = _pick_column(reader.fieldnames, _LABEL_COLUMNS)
        if require_labels and label_col is None:
            raise DatasetFormatError(
                f"{path}: no label column among {reader.fieldnames}"
            )
        id_col = _pick_column(reader.fieldnames, _ID_COLUMNS)
        year_col = _pick_column(reader.fieldnames, _YEAR_COLUMNS)

        records = []
        for k, row in enumerate(reader):
            smiles = row[smiles_col].strip()
            try:
                mol = parse_smiles(smiles)
            except SmilesParseError as exc:
                raise DatasetFormatError(
                    f"{path} row {k + 2}: cannot parse SMILES {smiles!r}: {exc}"
                ) from exc
            label = None
            if label_col is not None and row[label_col].strip() != "":
                try:
                    label = _parse_label(row[label_col])
                except DatasetFormatError as exc:
                    raise DatasetFormatError(f"{path} row {k + 2}: {exc}") from exc
            if require_labels and label is None:
                raise DatasetFormatError(f"{path} row {k + 2}: missing label")
            year = None
            if year_col is not None and row[year_col].strip() != "":
                try:
                    year = int(float(row[year_col]))
                except ValueError as exc:
                    raise DatasetFormatError(
                        f"{path} row {k + 2}: bad year {row[year_col]!r}"
                    ) from exc
            rec_id = row[id_col].strip() if id_col is not None else str(k)
            records.append(MoleculeRecord(
                id=rec_id or str(k), smiles=smiles, molecule=mol,
                label=label, year=year,
            ))
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise DatasetFormatError(f"{path}: duplicate ids {dupes[:5]}")
    return records


def read_smiles_file(path) -> list[tuple[str, str]]:
    """Read whitespace-separated ``smiles [name]`` lines; '#' starts a comment."""
    entries = []
    with open(path) as fh:
        for k, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            name = parts[1].strip() if len(parts) > 1 else str(len(entries))
            entries.append((parts[0], name))
    return entries


def write_smiles_file(path, entries):
    with open(path, "w") as fh:
        for smiles, name in entries:
            fh.write(f"{smiles}\t{name}\n")
