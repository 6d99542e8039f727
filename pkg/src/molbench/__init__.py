"""Molecular-graph benchmarking toolkit for agrochemical property prediction."""

from .molgraph import (
    Atom, Bond, BondOrder, Molecule, SmilesParseError, StereoDiscardedWarning,
    canonical_ranks, canonical_smiles, connected_components, parse_smiles,
    ring_flags, topological_distance_matrix, write_canonical_smiles,
)
from .fingerprints import (
    ATOM_COUNT_SCHEMA, FingerprintVector, SchemeMismatchError, atom_count_vector,
    atom_pairs, bulk_tanimoto_matrix, ecfp, path_fingerprint, tanimoto,
    topological_torsion,
)
from .kernels import (
    KernelMatrix, normalize_kernel, propagation_kernel_matrix,
    shortest_path_kernel_matrix, wl_kernel_matrix, wl_relabel,
    wloa_kernel_matrix,
)
from .topofeatures import (
    FeatureVector, edge_betweenness, ltp_features, moltop_features, scan_scores,
)
from .learn import (
    KernelDataset, LogisticModel, MODEL_FAMILIES, RandomForestModel, SVMModel,
    TabularDataset, grid_search_cv, load_embeddings, model_from_json,
    model_to_json, train_logreg, train_random_forest, train_svm_precomputed,
)
from .datasplit import (
    SplitAssignment, intra_dataset_diversity, inter_dataset_similarity_matrix,
    maxmin_split, stratified_random_split, time_split,
)
from .curation import (
    CompoundResolver, CuratedRecord, PipelineConfig, ToxicityRecord,
    aggregate_ld50, label_toxicity, run_pipeline, standardize_unit,
    validate_cas,
)
from .metrics import auroc, confusion_counts, mcc, mcc_from_labels
from .dataio import MoleculeRecord, load_labeled_dataset, read_smiles_file
from .bench import BenchmarkConfig, EvalReport, run_benchmark

__version__ = "0.1.0"
