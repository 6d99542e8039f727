"""Command-line entry points.

Exit codes: 0 on success, 1 for usage/config errors, 2 for data errors
(unparseable molecules, malformed datasets, failed resolutions).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import datasplit, fingerprints, kernels, topofeatures
from .curation import (
    CompoundResolver, CurationError, PipelineConfig, ResolverNotFound,
    ResolverUnavailable, run_pipeline,
)
from .dataio import DatasetFormatError, load_labeled_dataset, read_smiles_file
from .learn import MODEL_FAMILIES
from .molgraph import SmilesParseError, canonical_smiles, parse_smiles, ring_flags

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _input_smiles(args) -> list[tuple[str, str]]:
    """Collect (smiles, name) pairs from positionals and/or --in file."""
    entries = []
    for k, smi in enumerate(args.smiles):
        entries.append((smi, str(k)))
    if args.infile:
        offset = len(entries)
        for k, (smi, name) in enumerate(read_smiles_file(args.infile)):
            entries.append((smi, name if name else str(offset + k)))
    if not entries:
        raise _UsageError("no input SMILES given (positional or --in)")
    return entries


class _UsageError(Exception):
    pass


class _DataError(Exception):
    pass


def _cmd_parse(args) -> int:
    failures = 0
    for smi, _ in _input_smiles(args):
        try:
            mol = parse_smiles(smi)
        except SmilesParseError as exc:
            print(f"{smi}\tERROR: {exc}")
            failures += 1
            continue
        atom_in_ring, _ = ring_flags(mol)
        print(f"{smi}\tatoms={mol.n_atoms}\tbonds={len(mol.bonds)}"
              f"\tring_atoms={int(np.sum(atom_in_ring))}")
    return EXIT_DATA if failures else EXIT_OK


def _cmd_canon(args) -> int:
    failures = 0
    for smi, _ in _input_smiles(args):
        try:
            print(canonical_smiles(smi))
        except SmilesParseError as exc:
            print(f"ERROR: {exc}")
            failures += 1
    return EXIT_DATA if failures else EXIT_OK


def _parse_molecules(entries):
    mols, names = [], []
    for smi, name in entries:
        try:
            mols.append(parse_smiles(smi))
        except SmilesParseError as exc:
            raise _DataError(f"cannot parse {smi!r}: {exc}") from exc
        names.append(name)
    return mols, names


def _cmd_fingerprint(args) -> int:
    mols, names = _parse_molecules(_input_smiles(args))
    makers = {
        "ecfp": lambda m: fingerprints.ecfp(m, radius=args.radius,
                                            n_bits=args.n_bits,
                                            counted=args.counted),
        "atom_pairs": lambda m: fingerprints.atom_pairs(m, n_bits=args.n_bits),
        "torsion": lambda m: fingerprints.topological_torsion(m, n_bits=args.n_bits),
        "paths": lambda m: fingerprints.path_fingerprint(m, n_bits=args.n_bits),
        "atom_counts": fingerprints.atom_count_vector,
    }
    fps = [makers[args.scheme](m) for m in mols]
    fingerprints.write_fingerprints_jsonl(args.out, names, fps)
    print(f"wrote {len(fps)} fingerprints to {args.out}")
    return EXIT_OK


def _cmd_kernel(args) -> int:
    mols, names = _parse_molecules(_input_smiles(args))
    if args.kind == "propagation":
        K = kernels.propagation_kernel_matrix(mols, t_max=args.t_max,
                                              bin_width=args.bin_width,
                                              seed=args.seed, ids=names)
    elif args.kind == "shortest_path":
        K = kernels.shortest_path_kernel_matrix(mols, ids=names)
    elif args.kind == "wl":
        K = kernels.wl_kernel_matrix(mols, h=args.h, ids=names)
    else:
        K = kernels.wloa_kernel_matrix(mols, h=args.h, ids=names)
    if args.normalize:
        try:
            K = kernels.normalize_kernel(K)
        except ValueError as exc:
            raise _DataError(str(exc)) from exc
    K.to_csv(args.out)
    print(f"wrote {K.n}x{K.n} {K.kernel_tag} kernel to {args.out}")
    return EXIT_OK


def _cmd_features(args) -> int:
    mols, names = _parse_molecules(_input_smiles(args))
    maker = topofeatures.ltp_features if args.kind == "ltp" else topofeatures.moltop_features
    vectors = [maker(m, bins=args.bins) for m in mols]
    topofeatures.write_features_csv(args.out, names, vectors)
    print(f"wrote {len(vectors)} {args.kind} vectors to {args.out}")
    return EXIT_OK


def _load_dataset(path, require_labels):
    try:
        return load_labeled_dataset(path, require_labels=require_labels)
    except FileNotFoundError as exc:
        raise _DataError(f"dataset file not found: {path}") from exc
    except DatasetFormatError as exc:
        raise _DataError(str(exc)) from exc


def _cmd_split(args) -> int:
    records = _load_dataset(args.dataset, require_labels=args.method == "stratified")
    ids = [r.id for r in records]
    try:
        if args.method == "maxmin":
            split = datasplit.maxmin_split([r.molecule for r in records], ids,
                                           test_fraction=args.test_fraction,
                                           seed=args.seed)
        elif args.method == "time":
            years = [r.year for r in records]
            if any(y is None for y in years):
                raise _DataError("time split needs a year for every row")
            split = datasplit.time_split(ids, years, sort_keys=ids,
                                         test_fraction=args.test_fraction)
        else:
            split = datasplit.stratified_random_split(
                ids, [r.label for r in records],
                test_fraction=args.test_fraction, seed=args.seed)
    except ValueError as exc:
        raise _DataError(str(exc)) from exc
    split.write_csv(args.out)
    print(f"train={len(split.train_ids)} test={len(split.test_ids)} -> {args.out}")
    return EXIT_OK


def _dataset_fingerprints(path):
    if str(path).endswith(".smi"):
        entries = read_smiles_file(path)
        mols, _ = _parse_molecules(entries)
    else:
        records = _load_dataset(path, require_labels=False)
        mols = [r.molecule for r in records]
    if not mols:
        raise _DataError(f"{path}: no molecules")
    return datasplit.default_split_fingerprints(mols)


def _cmd_diversity(args) -> int:
    names = []
    sets = []
    for path in args.datasets:
        name = os.path.splitext(os.path.basename(path))[0]
        names.append(name)
        sets.append(_dataset_fingerprints(path))
    _, matrix = datasplit.inter_dataset_similarity_matrix(list(zip(names, sets)))
    datasplit.write_similarity_csv(args.out, names, matrix)
    for name, fps in zip(names, sets):
        if len(fps) > 1:
            mean, std = datasplit.intra_dataset_diversity(fps)
            print(f"{name}: intra-set mean Tanimoto {mean:.4f} (std {std:.4f})")
    print(f"wrote {len(names)}x{len(names)} similarity matrix to {args.out}")
    return EXIT_OK


def _cmd_curate(args) -> int:
    if not os.path.exists(args.config):
        print(f"config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = PipelineConfig.from_json_file(args.config)
    except (CurationError, json.JSONDecodeError) as exc:
        print(f"bad config {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.offline and not config.offline:
        config = dataclasses.replace(config, offline=True)
    try:
        result = run_pipeline(config)
    except (CurationError, FileNotFoundError, OSError) as exc:
        raise _DataError(str(exc)) from exc
    stats = result.stats
    print(f"curated {stats['n_output']} compounds "
          f"({stats['n_positive']} positive) from {stats['n_input']} records; "
          f"{stats['n_quarantined']} quarantined")
    return EXIT_OK


def _cmd_resolve(args) -> int:
    resolver = CompoundResolver(
        cache_path=args.cache, offline=args.offline,
        mapping_files=args.mapping or (),
    )
    failures = 0
    for cas in args.cas:
        try:
            print(f"{cas}\t{resolver.resolve(cas)}")
        except (ResolverNotFound, ResolverUnavailable) as exc:
            print(f"{cas}\tERROR: {exc}")
            failures += 1
    return EXIT_DATA if failures else EXIT_OK


def _cmd_bench(args) -> int:
    if not os.path.exists(args.config):
        print(f"config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = bench_mod.BenchmarkConfig.from_json_file(args.config)
    except bench_mod.BenchConfigError as exc:
        print(f"bad config {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output_dir:
        config = dataclasses.replace(config, output_dir=args.output_dir)
    try:
        reports, out_dir = bench_mod.run_benchmark(config)
    except FileNotFoundError as exc:
        raise _DataError(str(exc)) from exc
    except (DatasetFormatError, ValueError) as exc:
        raise _DataError(str(exc)) from exc
    print(bench_mod.format_report_table(reports), end="")
    print(f"reports written to {out_dir}")
    return EXIT_OK


def _add_smiles_inputs(sub):
    sub.add_argument("smiles", nargs="*", help="SMILES strings")
    sub.add_argument("--in", dest="infile", metavar="FILE",
                     help="file of 'SMILES [name]' lines")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="molbench",
                             description="Molecular-graph benchmarking toolkit")
    parser.add_argument("--seed", type=int, default=0,
                        help="global random seed (default 0)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap; results are thread-count independent")
    parser.add_argument("--offline", action="store_true",
                        help="never touch the network")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("parse", parents=[], help="parse SMILES and report sizes")
    _add_smiles_inputs(p)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("canon", help="print canonical SMILES, line-aligned")
    _add_smiles_inputs(p)
    p.set_defaults(func=_cmd_canon)

    p = sub.add_parser("fingerprint", help="write fingerprints as JSONL")
    _add_smiles_inputs(p)
    p.add_argument("--scheme", default="ecfp",
                   choices=["ecfp", "atom_pairs", "torsion", "paths", "atom_counts"])
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--n-bits", type=int, default=2048)
    p.add_argument("--counted", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fingerprint)

    p = sub.add_parser("kernel", help="write a kernel matrix as CSV")
    _add_smiles_inputs(p)
    p.add_argument("--kind", default="wl",
                   choices=["wl", "wloa", "shortest_path", "propagation"])
    p.add_argument("--h", type=int, default=3, help="WL iterations")
    p.add_argument("--t-max", type=int, default=3)
    p.add_argument("--bin-width", type=float, default=1e-4)
    p.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("features", help="write topological descriptor vectors")
    _add_smiles_inputs(p)
    p.add_argument("--kind", default="ltp", choices=["ltp", "moltop"])
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("split", help="write a train/test split")
    p.add_argument("--method", default="maxmin",
                   choices=["maxmin", "time", "stratified"])
    p.add_argument("--dataset", required=True, help="labeled dataset CSV")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("diversity", help="inter-dataset Tanimoto similarity")
    p.add_argument("datasets", nargs="+", help="dataset CSV or .smi files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_diversity)

    p = sub.add_parser("curate", help="run the LD50 curation pipeline")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.set_defaults(func=_cmd_curate)

    p = sub.add_parser("resolve", help="resolve CAS numbers to SMILES")
    p.add_argument("cas", nargs="+")
    p.add_argument("--cache", help="JSONL cache file")
    p.add_argument("--mapping", action="append", help="extra JSONL mapping file")
    p.set_defaults(func=_cmd_resolve)

    p = sub.add_parser("bench", help="run the benchmark harness")
    p.add_argument("--config", required=True, help="benchmark config JSON")
    p.add_argument("--output-dir", help="override the run output directory")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"molbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DataError as exc:
        print(f"molbench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"molbench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
