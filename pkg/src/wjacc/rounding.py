"""Randomized rounding of weighted sets into unweighted item sets.

Each element ``a`` with weight ``w(a) = j + f`` (integer part ``j``,
fraction ``f``) contributes the items ``(a, 1) .. (a, j)`` always, plus
``(a, j + 1)`` with probability exactly ``f``.  The expected item count
therefore equals the l1 norm, and because item counts are monotone in
the weights, rounding the pointwise min (max) of two sets under one
seed yields exactly the intersection (union) of their roundings.

Two variants differ only in which hash decides the extra item:

* independent: the threshold for ``a`` is ``unit_hash(seed, a, j)``, so
  the coin depends on the integer part and is fresh at every scale;
* dependent: the threshold is ``unit_hash(seed, a, 0)``, one hash per
  element shared by every scale, which makes rounding events across
  scaled copies of the same element perfectly correlated and cuts hash
  cost to a single evaluation per element.
"""

from __future__ import annotations

import numpy as np

from .hashing import HashBudget, Seed, units_at
from .sets import UnweightedSet, WeightedSet

# floor() of anything at or above 2**53 cannot be trusted: the double
# grid is coarser than 1 there.
_MAX_ROUNDABLE = float(2**53)

VARIANTS = ("independent", "dependent")


def _check_weights(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if weights.size and float(weights.max()) >= _MAX_ROUNDABLE:
        raise ValueError("weights at or above 2**53 cannot be rounded exactly")
    floors = np.floor(weights)
    fracs = weights - floors
    return floors, fracs


def _counts_for(
    weights: np.ndarray,
    lanes: np.ndarray,
    seed: Seed,
    variant: str,
    budget: HashBudget | None = None,
) -> np.ndarray:
    """Item counts per element for one seed; the shared inner step."""
    floors, fracs = _check_weights(weights)
    if variant == "independent":
        idx = floors.astype(np.uint64)
    elif variant == "dependent":
        idx = np.zeros(weights.shape, dtype=np.uint64)
    else:
        raise ValueError(f"unknown rounding variant {variant!r}")
    u = units_at(seed.lane, lanes, idx)
    if budget is not None:
        budget.rounding += int(weights.size)
    return floors.astype(np.int64) + (u < fracs)


def counts_from_thresholds(weights: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Item counts given precomputed unit thresholds (dependent variant).

    Lets a caller evaluate the per-element hash once and reuse it across
    any number of scaled copies of the weight vector.
    """
    floors, fracs = _check_weights(weights)
    return floors.astype(np.int64) + (thresholds < fracs)


def _build(w: WeightedSet, counts: np.ndarray) -> UnweightedSet:
    return UnweightedSet({e: int(c) for e, c in zip(w.ids, counts) if c > 0})


def reduce_to_unwtd(w: WeightedSet, seed: Seed, budget: HashBudget | None = None) -> UnweightedSet:
    """Round ``w`` with the independent variant (one hash per element)."""
    return _build(w, _counts_for(w.weights, w.lanes, seed, "independent", budget))


def reduce_to_unwtd_dep(
    w: WeightedSet, seed: Seed, budget: HashBudget | None = None
) -> UnweightedSet:
    """Round ``w`` with the dependent variant (scale-shared thresholds)."""
    return _build(w, _counts_for(w.weights, w.lanes, seed, "dependent", budget))


def reduce_weighted(
    w: WeightedSet, seed: Seed, variant: str = "independent", budget: HashBudget | None = None
) -> UnweightedSet:
    """Round ``w`` under the named variant."""
    return _build(w, _counts_for(w.weights, w.lanes, seed, variant, budget))


def rounding_count_matrix(
    w: WeightedSet, seeds: list[Seed], variant: str = "independent"
) -> np.ndarray:
    """Item counts for many seeds at once, shape (len(seeds), len(w)).

    Bulk helper for Monte-Carlo evaluation; row ``i`` equals the counts
    :func:`reduce_weighted` would produce under ``seeds[i]``.
    """
    floors, fracs = _check_weights(w.weights)
    if variant == "independent":
        idx = floors.astype(np.uint64)[None, :]
    elif variant == "dependent":
        idx = np.zeros((1, len(w)), dtype=np.uint64)
    else:
        raise ValueError(f"unknown rounding variant {variant!r}")
    lanes = w.lanes[None, :]
    out = np.empty((len(seeds), len(w)), dtype=np.int64)
    base = floors.astype(np.int64)[None, :]
    block = max(1, (1 << 22) // max(1, len(w)))
    for lo in range(0, len(seeds), block):
        hi = min(lo + block, len(seeds))
        seed_lanes = np.array([s.lane for s in seeds[lo:hi]], dtype=np.uint64)[:, None]
        u = units_at_matrix(seed_lanes, lanes, idx)
        out[lo:hi] = base + (u < fracs[None, :])
    return out


def units_at_matrix(seed_lanes: np.ndarray, elem_lanes: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Broadcasted unit hashes for a (seeds x elements) grid."""
    return units_at(0, np.bitwise_xor(seed_lanes, elem_lanes), idx)
