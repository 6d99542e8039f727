"""Ecotoxicology dataset curation: unit standardization, LD50 aggregation,
structure resolution, source merging, deduplication and labeling.

The pipeline is strictly audit-preserving: every ingested row either
contributes to exactly one emitted compound or lands in the quarantine file
with a machine-readable reason. Re-running the pipeline on its own output
(as a curated input) is a fixed point.
"""

from __future__ import annotations

import csv
import json
import os
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from statistics import median
from typing import Callable, Sequence

from .molgraph import SmilesParseError, canonical_smiles

DEFAULT_THRESHOLD_UG = 11.0
DEFAULT_RESOLVER_BASE_URL = "https://pubchem.ncbi.nlm.nih.gov/rest/pug"

# Exact decimal factors into micrograms per organism; "per bee" is the same
# organism basis. ng entries divide to keep the conversion exact in binary.
_UNIT_FACTORS = {
    "ug/organism": ("mul", 1),
    "ug/bee": ("mul", 1),
    "mg/organism": ("mul", 1000),
    "mg/bee": ("mul", 1000),
    "ng/organism": ("div", 1000),
    "ng/bee": ("div", 1000),
}

_CAS_PATTERN = re.compile(r"^(\d{2,7})-(\d{2})-(\d)$")

EXPOSURE_ORAL = "oral"
EXPOSURE_CONTACT = "contact"
EXPOSURE_OTHER = "other"

MEASUREMENT_COLUMNS = ["cas", "dose_value", "dose_unit", "exposure_type",
                       "species", "source", "year"]
MANUAL_COLUMNS = ["cas", "smiles", "ld50_ug", "pesticide_type", "year", "source"]
OUTPUT_COLUMNS = ["id", "canonical_smiles", "cas", "ld50_ug", "label",
                  "pesticide_type", "year", "provenance"]


class CurationError(ValueError):
    pass


class UnsupportedUnitError(CurationError):
    pass


class ResolverNotFound(CurationError):
    pass


class ResolverUnavailable(CurationError):
    pass


def normalize_unit(unit: str) -> str:
    return unit.strip().lower().replace("µ", "u").replace("μ", "u")


def standardize_unit(value: float, unit: str) -> float:
    """Convert a dose to micrograms per organism; exact for supported units."""
    if value <= 0:
        raise CurationError(f"dose must be positive, got {value}")
    key = normalize_unit(unit)
    action = _UNIT_FACTORS.get(key)
    if action is None:
        raise UnsupportedUnitError(f"unsupported dose unit {unit!r}")
    op, factor = action
    return value * factor if op == "mul" else value / factor


def validate_cas(cas: str) -> str:
    """Syntactic CAS check including the checksum digit; returns the string."""
    text = cas.strip()
    m = _CAS_PATTERN.match(text)
    if not m:
        raise CurationError(f"malformed CAS number {cas!r}")
    digits = (m.group(1) + m.group(2))[::-1]
    checksum = sum((k + 1) * int(d) for k, d in enumerate(digits)) % 10
    if checksum != int(m.group(3)):
        raise CurationError(f"CAS checksum mismatch for {cas!r}")
    return text


def normalize_exposure(raw: str) -> str:
    text = raw.strip().lower()
    if text == EXPOSURE_ORAL:
        return EXPOSURE_ORAL
    if text == EXPOSURE_CONTACT:
        return EXPOSURE_CONTACT
    return EXPOSURE_OTHER


@dataclass(frozen=True)
class ToxicityRecord:
    cas: str
    dose_ug: float
    exposure_type: str
    species: str
    source: str
    year: int | None = None

    def __post_init__(self):
        if self.dose_ug <= 0:
            raise CurationError("dose must be positive")
        if self.exposure_type not in (EXPOSURE_ORAL, EXPOSURE_CONTACT, EXPOSURE_OTHER):
            raise CurationError(f"unknown exposure type {self.exposure_type!r}")


@dataclass
class CuratedRecord:
    canonical_smiles: str
    cas: str
    ld50_ug: float
    label: int
    pesticide_type: str | None = None
    year: int | None = None
    provenance: tuple[str, ...] = ()
    n_contributing: int = 1

    def __post_init__(self):
        if self.ld50_ug <= 0:
            raise CurationError("LD50 must be positive")
        self.provenance = tuple(self.provenance)


def aggregate_ld50(records: Sequence[ToxicityRecord]) -> tuple[dict[str, float], float]:
    """Median dose per exposure group; the overall LD50 is the lowest median."""
    if not records:
        raise CurationError("no records to aggregate")
    groups: dict[str, list[float]] = {}
    for rec in records:
        groups.setdefault(rec.exposure_type, []).append(rec.dose_ug)
    medians = {etype: float(median(doses)) for etype, doses in sorted(groups.items())}
    return medians, min(medians.values())


def label_toxicity(ld50_ug: float, threshold_ug: float = DEFAULT_THRESHOLD_UG) -> int:
    """Toxic (1) strictly below the threshold; the boundary itself is 0."""
    if ld50_ug <= 0:
        raise CurationError("LD50 must be positive")
    return int(ld50_ug < threshold_ug)


# ---------------------------------------------------------------------------
# Structure resolution
# ---------------------------------------------------------------------------


def _default_http_get(url: str, timeout: float = 10.0) -> tuple[int, str]:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.status, resp.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read().decode("utf-8", errors="replace")


class CompoundResolver:
    """CAS-to-SMILES resolution with a persistent JSONL write-through cache.

    Live lookups run identifier -> compound id -> SMILES against a PUG-style
    REST endpoint; every result (including not-found) is appended to the
    cache file. Offline mode never touches the network and serves only the
    cache plus optional mapping files of the same JSONL shape.
    """

    def __init__(self, cache_path=None, offline: bool = False,
                 mapping_files: Sequence = (), base_url: str = DEFAULT_RESOLVER_BASE_URL,
                 rate_limit_s: float = 0.2, max_retries: int = 3,
                 http_get: Callable = _default_http_get,
                 sleep: Callable = time.sleep, clock: Callable = time.time):
        self.cache_path = cache_path
        self.offline = offline
        self.base_url = base_url.rstrip("/")
        self.rate_limit_s = rate_limit_s
        self.max_retries = max_retries
        self.http_get = http_get
        self.sleep = sleep
        self.clock = clock
        self.network_calls = 0
        self.cache: dict[str, str | None] = {}
        for path in mapping_files:
            self.cache.update(self._read_jsonl(path, rebuild=False))
        if cache_path and os.path.exists(cache_path):
            self.cache.update(self._read_jsonl(cache_path, rebuild=True))

    def _read_jsonl(self, path, rebuild: bool) -> dict[str, str | None]:
        entries: dict[str, str | None] = {}
        corrupt = False
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    entries[rec["cas"]] = rec["smiles"]
                except (json.JSONDecodeError, KeyError, TypeError):
                    corrupt = True
        if corrupt and rebuild:
            with open(path, "w") as fh:
                for cas, smiles in entries.items():
                    fh.write(json.dumps({"cas": cas, "smiles": smiles,
                                         "timestamp": self.clock()}) + "\n")
        return entries

    def _append_cache(self, cas: str, smiles: str | None):
        self.cache[cas] = smiles
        if self.cache_path:
            with open(self.cache_path, "a") as fh:
                fh.write(json.dumps({"cas": cas, "smiles": smiles,
                                     "timestamp": self.clock()}) + "\n")

    def _get_with_retry(self, url: str) -> tuple[int, str]:
        delay = self.rate_limit_s
        last_exc = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleep(delay)
                delay *= 2
            elif self.rate_limit_s > 0:
                self.sleep(self.rate_limit_s)
            try:
                self.network_calls += 1
                status, body = self.http_get(url)
            except Exception as exc:  # transport failure
                last_exc = exc
                continue
            if status >= 500:
                last_exc = ResolverUnavailable(f"server error {status} for {url}")
                continue
            return status, body
        raise ResolverUnavailable(f"gave up on {url}: {last_exc}")

    def resolve(self, cas: str) -> str:
        if cas in self.cache:
            smiles = self.cache[cas]
            if smiles is None:
                raise ResolverNotFound(f"{cas} marked not-found in cache")
            return smiles
        if self.offline:
            raise ResolverNotFound(f"{cas} not in offline cache")
        status, body = self._get_with_retry(
            f"{self.base_url}/compound/name/{cas}/cids/JSON"
        )
        cid = None
        if status == 200:
            try:
                cids = json.loads(body)["IdentifierList"]["CID"]
                cid = cids[0] if cids else None
            except (json.JSONDecodeError, KeyError, IndexError, TypeError):
                cid = None
        if cid is None:
            self._append_cache(cas, None)
            raise ResolverNotFound(f"no compound id for CAS {cas}")
        status, body = self._get_with_retry(
            f"{self.base_url}/compound/cid/{cid}/property/CanonicalSMILES/JSON"
        )
        smiles = None
        if status == 200:
            try:
                props = json.loads(body)["PropertyTable"]["Properties"]
                smiles = props[0]["CanonicalSMILES"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError):
                smiles = None
        if not smiles:
            self._append_cache(cas, None)
            raise ResolverNotFound(f"no SMILES for CAS {cas} (cid {cid})")
        self._append_cache(cas, smiles)
        return smiles


# ---------------------------------------------------------------------------
# Merging and deduplication
# ---------------------------------------------------------------------------


def _merge_group(records: Sequence[CuratedRecord], policy: str,
                 threshold_ug: float, conflicts: list[str]) -> CuratedRecord:
    """Collapse same-structure drafts; manual rows sort first for metadata."""
    if policy == "min":
        ld50 = min(r.ld50_ug for r in records)
    elif policy == "max":
        ld50 = max(r.ld50_ug for r in records)
    else:
        raise CurationError(f"unknown merge policy {policy!r}")
    ld50_values = {r.ld50_ug for r in records}
    if len(ld50_values) > 1:
        conflicts.append(
            f"{records[0].canonical_smiles}: LD50 conflict {sorted(ld50_values)} "
            f"resolved to {ld50} by policy {policy}"
        )
    cas = next((r.cas for r in records if r.cas), "")
    pesticide_type = next((r.pesticide_type for r in records if r.pesticide_type), None)
    year = next((r.year for r in records if r.year is not None), None)
    provenance = sorted({src for r in records for src in r.provenance})
    return CuratedRecord(
        canonical_smiles=records[0].canonical_smiles,
        cas=cas,
        ld50_ug=ld50,
        label=label_toxicity(ld50, threshold_ug),
        pesticide_type=pesticide_type,
        year=year,
        provenance=tuple(provenance),
        n_contributing=sum(r.n_contributing for r in records),
    )


def dedup_by_structure(records: Sequence[CuratedRecord], policy: str = "min",
                       threshold_ug: float = DEFAULT_THRESHOLD_UG,
                       conflicts: list[str] | None = None) -> list[CuratedRecord]:
    """Group by canonical SMILES and collapse each group by the merge policy."""
    conflicts = conflicts if conflicts is not None else []
    groups: dict[str, list[CuratedRecord]] = {}
    for rec in records:
        groups.setdefault(rec.canonical_smiles, []).append(rec)
    return [
        _merge_group(group, policy, threshold_ug, conflicts)
        for _, group in sorted(groups.items())
    ]


def merge_sources(aggregated: Sequence[CuratedRecord],
                  manual: Sequence[CuratedRecord], policy: str = "min",
                  threshold_ug: float = DEFAULT_THRESHOLD_UG,
                  conflicts: list[str] | None = None) -> list[CuratedRecord]:
    """Union by structure; manual rows take metadata precedence."""
    return dedup_by_structure(list(manual) + list(aggregated), policy,
                              threshold_ug, conflicts)


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    measurement_files: tuple = ()
    manual_files: tuple = ()
    curated_files: tuple = ()
    output_path: str = "dataset.csv"
    quarantine_path: str = "quarantine.csv"
    stats_path: str = "stats.json"
    threshold_ug: float = DEFAULT_THRESHOLD_UG
    merge_policy: str = "min"
    species: str | None = None
    offline: bool = False
    cache_path: str | None = None
    mapping_files: tuple = ()
    base_url: str = DEFAULT_RESOLVER_BASE_URL
    rate_limit_s: float = 0.2

    @staticmethod
    def from_json_file(path) -> "PipelineConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f for f in PipelineConfig.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise CurationError(f"unknown config keys: {sorted(unknown)}")
        for key in ("measurement_files", "manual_files", "curated_files",
                    "mapping_files"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return PipelineConfig(**raw)


@dataclass
class Quarantined:
    stage: str
    reason: str
    record: dict


@dataclass
class PipelineResult:
    records: list[CuratedRecord]
    quarantined: list[Quarantined]
    stats: dict


def _parse_year(text: str) -> int | None:
    text = (text or "").strip()
    if not text:
        return None
    return int(text)


def _read_csv_rows(path, expected: list[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != expected:
            raise CurationError(
                f"{path}: expected columns {','.join(expected)}, "
                f"got {','.join(reader.fieldnames or [])}"
            )
        return [dict(row) for row in reader]


def run_pipeline(config: PipelineConfig,
                 resolver: CompoundResolver | None = None) -> PipelineResult:
    """standardize -> aggregate -> resolve -> merge -> dedup -> label.

    Writes the dataset CSV, the quarantine CSV and a JSON stats block, and
    returns everything in memory as well.
    """
    if resolver is None:
        resolver = CompoundResolver(
            cache_path=config.cache_path, offline=config.offline,
            mapping_files=config.mapping_files, base_url=config.base_url,
            rate_limit_s=config.rate_limit_s,
        )
    quarantined: list[Quarantined] = []
    conflicts: list[str] = []
    n_input = 0
    per_source: dict[str, int] = {}

    # Measurements: validate rows, standardize doses, group per CAS.
    by_cas: dict[str, list[ToxicityRecord]] = {}
    meta_by_cas: dict[str, dict] = {}
    for path in config.measurement_files:
        for row in _read_csv_rows(path, MEASUREMENT_COLUMNS):
            n_input += 1
            try:
                cas = validate_cas(row["cas"])
                if config.species and row["species"].strip() != config.species:
                    raise CurationError(
                        f"species {row['species']!r} filtered (want {config.species!r})"
                    )
                dose = standardize_unit(float(row["dose_value"]), row["dose_unit"])
                rec = ToxicityRecord(
                    cas=cas,
                    dose_ug=dose,
                    exposure_type=normalize_exposure(row["exposure_type"]),
                    species=row["species"].strip(),
                    source=row["source"].strip(),
                    year=_parse_year(row["year"]),
                )
            except (CurationError, ValueError) as exc:
                quarantined.append(Quarantined("ingest", str(exc), row))
                continue
            by_cas.setdefault(cas, []).append(rec)
            meta = meta_by_cas.setdefault(cas, {"sources": set(), "years": []})
            meta["sources"].add(rec.source)
            if rec.year is not None:
                meta["years"].append(rec.year)

    # Aggregate per compound, then resolve structures.
    aggregated: list[CuratedRecord] = []
    for cas in sorted(by_cas):
        records = by_cas[cas]
        _, ld50 = aggregate_ld50(records)
        row_payload = {"cas": cas, "n_records": len(records)}
        try:
            smiles = resolver.resolve(cas)
            canon = canonical_smiles(smiles)
        except (ResolverNotFound, ResolverUnavailable) as exc:
            stage = "resolve"
            for rec in records:
                quarantined.append(Quarantined(stage, str(exc), {
                    "cas": cas, "source": rec.source,
                    "exposure_type": rec.exposure_type, "dose_ug": rec.dose_ug,
                }))
            continue
        except (SmilesParseError, ValueError) as exc:
            for rec in records:
                quarantined.append(Quarantined("canonicalize", str(exc), {
                    "cas": cas, "source": rec.source,
                }))
            continue
        meta = meta_by_cas[cas]
        aggregated.append(CuratedRecord(
            canonical_smiles=canon,
            cas=cas,
            ld50_ug=ld50,
            label=label_toxicity(ld50, config.threshold_ug),
            pesticide_type=None,
            year=min(meta["years"]) if meta["years"] else None,
            provenance=tuple(sorted(meta["sources"])),
            n_contributing=len(records),
        ))
        for rec in records:
            per_source[rec.source] = per_source.get(rec.source, 0) + 1

    # Manual per-pesticide sources carry their own structures and LD50s.
    manual: list[CuratedRecord] = []
    for path in config.manual_files:
        seen_in_file: set[str] = set()
        for row in _read_csv_rows(path, MANUAL_COLUMNS):
            n_input += 1
            try:
                cas = validate_cas(row["cas"]) if row["cas"].strip() else ""
                ld50 = float(row["ld50_ug"])
                if ld50 <= 0:
                    raise CurationError(f"LD50 must be positive, got {ld50}")
                canon = canonical_smiles(row["smiles"])
                if canon in seen_in_file:
                    raise CurationError(
                        f"manual source {path} has duplicate structure {canon}"
                    )
                seen_in_file.add(canon)
                source = row["source"].strip() or os.path.basename(str(path))
                manual.append(CuratedRecord(
                    canonical_smiles=canon,
                    cas=cas,
                    ld50_ug=ld50,
                    label=label_toxicity(ld50, config.threshold_ug),
                    pesticide_type=row["pesticide_type"].strip() or None,
                    year=_parse_year(row["year"]),
                    provenance=(source,),
                ))
                per_source[source] = per_source.get(source, 0) + 1
            except (CurationError, SmilesParseError, ValueError) as exc:
                quarantined.append(Quarantined("manual", str(exc), row))

    # Curated files re-enter unchanged (modulo re-merging); this is what makes
    # the pipeline idempotent on its own output.
    curated_in: list[CuratedRecord] = []
    for path in config.curated_files:
        for row in _read_csv_rows(path, OUTPUT_COLUMNS):
            n_input += 1
            try:
                canon = canonical_smiles(row["canonical_smiles"])
                ld50 = float(row["ld50_ug"])
                provenance = tuple(p for p in row["provenance"].split("|") if p)
                cas = validate_cas(row["cas"]) if row["cas"].strip() else ""
                curated_in.append(CuratedRecord(
                    canonical_smiles=canon,
                    cas=cas,
                    ld50_ug=ld50,
                    label=label_toxicity(ld50, config.threshold_ug),
                    pesticide_type=row["pesticide_type"].strip() or None,
                    year=_parse_year(row["year"]),
                    provenance=provenance,
                ))
                for source in provenance:
                    per_source[source] = per_source.get(source, 0) + 1
            except (CurationError, SmilesParseError, ValueError) as exc:
                quarantined.append(Quarantined("curated", str(exc), row))

    merged = merge_sources(aggregated + curated_in, manual,
                           policy=config.merge_policy,
                           threshold_ug=config.threshold_ug,
                           conflicts=conflicts)
    merged.sort(key=lambda r: r.canonical_smiles)

    n_contributing = sum(r.n_contributing for r in merged)
    n_positive = sum(r.label for r in merged)
    stats = {
        "n_input": n_input,
        "n_quarantined": len(quarantined),
        "n_contributing": n_contributing,
        "n_output": len(merged),
        "n_positive": n_positive,
        "positive_fraction": n_positive / len(merged) if merged else 0.0,
        "per_source": dict(sorted(per_source.items())),
        "conflicts": conflicts,
        "threshold_ug": config.threshold_ug,
        "merge_policy": config.merge_policy,
        "count_conserved": n_input == n_contributing + len(quarantined),
    }

    _write_dataset_csv(config.output_path, merged)
    _write_quarantine_csv(config.quarantine_path, quarantined)
    with open(config.stats_path, "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return PipelineResult(records=merged, quarantined=quarantined, stats=stats)


def _format_year(year: int | None) -> str:
    return "" if year is None else str(year)


def _write_dataset_csv(path, records: Sequence[CuratedRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(OUTPUT_COLUMNS)
        for k, rec in enumerate(records):
            writer.writerow([
                str(k),
                rec.canonical_smiles,
                rec.cas,
                repr(float(rec.ld50_ug)),
                str(rec.label),
                rec.pesticide_type or "",
                _format_year(rec.year),
                "|".join(rec.provenance),
            ])


def _write_quarantine_csv(path, quarantined: Sequence[Quarantined]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["stage", "reason", "record"])
        for q in quarantined:
            writer.writerow([q.stage, q.reason, json.dumps(q.record, sort_keys=True)])
