"""Sketching weighted sets for Jaccard similarity above a threshold.

A weighted set is randomly rounded into an unweighted item set whose
Jaccard similarity is an almost-unbiased proxy for the weighted one,
then compressed with one-permutation bin sketches at a short ladder of
geometric scales.  Two sketches can be compared whenever their norm
scales overlap; pairs too dissimilar to matter are reported as below
the configured threshold instead of estimated.
"""

from .baseline import BaselineSketch, baseline_estimate, baseline_sketch
from .binsketch import BinSketch, estimate_binsketch, sketch_items, xor_fold
from .estimator import WeightedMinHashSketcher
from .harness import ExperimentConfig, GenerationError, ResultRow, gen_pair, run_experiment
from .hashing import PRF_ID, ChunkLayout, HashBudget, Seed, chunk_stream, unit_hash
from .rounding import (
    reduce_to_unwtd,
    reduce_to_unwtd_dep,
    reduce_weighted,
    rounding_count_matrix,
)
from .sets import (
    EstimateResult,
    UnweightedSet,
    WeightedSet,
    l1_norm,
    read_weighted_set,
    unweighted_jaccard,
    weighted_jaccard,
    write_weighted_set,
)
from .sketch import (
    SketchParams,
    WeightedSketch,
    compute_sketch,
    estimate_jaccard,
    first_scale,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineSketch",
    "BinSketch",
    "ChunkLayout",
    "EstimateResult",
    "ExperimentConfig",
    "GenerationError",
    "HashBudget",
    "PRF_ID",
    "ResultRow",
    "Seed",
    "SketchParams",
    "UnweightedSet",
    "WeightedMinHashSketcher",
    "WeightedSet",
    "WeightedSketch",
    "baseline_estimate",
    "baseline_sketch",
    "chunk_stream",
    "compute_sketch",
    "estimate_binsketch",
    "estimate_jaccard",
    "first_scale",
    "gen_pair",
    "l1_norm",
    "read_weighted_set",
    "reduce_to_unwtd",
    "reduce_to_unwtd_dep",
    "reduce_weighted",
    "rounding_count_matrix",
    "run_experiment",
    "sketch_items",
    "unit_hash",
    "unweighted_jaccard",
    "weighted_jaccard",
    "write_weighted_set",
    "xor_fold",
]
