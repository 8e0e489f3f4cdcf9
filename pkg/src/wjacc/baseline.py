"""Quantize-and-replicate minhash baseline for weighted Jaccard.

Each element of weight ``w`` is replicated into ``ceil(w / Q)`` unit
items, and for each of ``k`` sample indices the sketch keeps the
minimum hash word over all replicated items, drawn under a per-sample
derived seed.  Matching minima across two sketches estimate Jaccard of
the quantized sets, whose similarity differs from the weighted truth
by O(n * Q / W).

This costs O(k * W / Q) hash evaluations per sketch and exists purely
as an accuracy yardstick for the scaled sketches, so no effort is made
to be cheap; Q just has to be small enough for the quantization bias
to vanish next to sampling noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hashing import PRF_ID, Seed, words_at
from .sets import WeightedSet

# Replication counts above this make a single sketch call absurd; fail
# loudly instead of grinding.
_MAX_ITEMS = 50_000_000


@dataclass
class BaselineSketch:
    """Minimum hash word per sample index, plus the identifying knobs."""

    samples: np.ndarray
    quantum: float
    seed_lane: int
    prf_id: str = PRF_ID

    def __post_init__(self) -> None:
        self.samples = np.ascontiguousarray(self.samples, dtype=np.uint64)

    @property
    def k(self) -> int:
        return int(self.samples.size)


def baseline_sketch(w: WeightedSet, k: int, quantum: float, seed: Seed) -> BaselineSketch:
    """Sketch ``w`` with ``k`` independent replicated-minhash samples."""
    if len(w) == 0:
        raise ValueError("cannot sketch an empty weighted set")
    if k < 1:
        raise ValueError("sample count must be positive")
    if not (quantum > 0.0 and math.isfinite(quantum)):
        raise ValueError("quantum must be positive and finite")
    counts = np.ceil(w.weights / quantum).astype(np.int64)
    total = int(counts.sum())
    if total > _MAX_ITEMS:
        raise ValueError(
            f"quantum {quantum:g} replicates into {total} items; refusing above {_MAX_ITEMS}"
        )
    item_lane = np.repeat(w.lanes, counts)
    starts = np.cumsum(counts) - counts
    item_pos = (np.arange(total, dtype=np.int64) - np.repeat(starts, counts)).astype(np.uint64)

    sample_lanes = np.array(
        [seed.derive(f"sample/{j}").lane for j in range(k)], dtype=np.uint64
    )
    out = np.empty(k, dtype=np.uint64)
    # Block over samples to bound the (samples x items) intermediate.
    # XORing the sample lane into the element lane before the zero-lane
    # call evaluates the exact same word stream as a scalar unit hash
    # under the derived sample seed.
    block = max(1, (1 << 23) // max(1, total))
    for lo in range(0, k, block):
        lanes = sample_lanes[lo : lo + block, None]
        words = words_at(0, lanes ^ item_lane[None, :], item_pos[None, :])
        out[lo : lo + block] = words.min(axis=1)
    return BaselineSketch(samples=out, quantum=quantum, seed_lane=seed.lane)


def baseline_estimate(a: BaselineSketch, b: BaselineSketch) -> float:
    """Fraction of sample indices whose minima agree."""
    if a.k != b.k or a.quantum != b.quantum or a.prf_id != b.prf_id:
        raise ValueError("baseline sketches have incompatible parameters")
    if a.seed_lane != b.seed_lane:
        raise ValueError("baseline sketches were drawn under different seeds")
    return float(np.mean(a.samples == b.samples))
