"""One-permutation bin sketches of unweighted item sets.

Every item hashes to a single 64-bit stream word which is split into a
bin selector, a within-bin rank, and a stored fingerprint.  Each of the
``k'`` bins keeps the fingerprint of its minimum-rank item, so a sketch
costs one hash per item and the per-bin winners of two consistently
reduced sets match with probability equal to their Jaccard similarity.

Narrow fingerprints (b bits) collide between different winners with
probability ``2**-b``; the estimator inverts that bias.  A further
halving of the footprint XORs adjacent one-bit bins together ("folded"
sketches), whose match probability is ``(1 + J**2) / 2``.

Rank ties are broken by drawing extension words from a dedicated
"tiebreak" stream, which keeps the winner a function of the item alone
(never of the competing set), preserving min-wise consistency.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .hashing import PRF_ID, ChunkLayout, HashBudget, Seed, words_at
from .sets import UnweightedSet

MAGIC = b"UWSK"
FORMAT_VERSION = 1

_MODE_COMPACT = 0x01
_MODE_FOLDED = 0x02

STORE_WIDTHS = (1, 2, 4, 8, 16)

# Rounds of 64-bit tiebreak words before falling back to a fixed item
# order; reaching the fallback needs 8 consecutive 64-bit collisions.
_TIEBREAK_ROUNDS = 8


def _store_bits_of(bits: int | str) -> int:
    if bits == "full":
        return 64
    if isinstance(bits, bool) or not isinstance(bits, int):
        raise ValueError(f"bit width must be an int or 'full', got {bits!r}")
    if bits not in STORE_WIDTHS:
        raise ValueError(f"bit width must be one of {STORE_WIDTHS} or 'full', got {bits}")
    return bits


def _check_bin_count(bins: int) -> int:
    if bins < 1 or bins & (bins - 1):
        raise ValueError(f"bin count must be a power of two, got {bins}")
    return int(math.log2(bins))


@dataclass
class BinSketch:
    """Fixed array of per-bin fingerprints plus an empty-bin mask.

    ``store_bits == 64`` means full stream words are stored.  ``folded``
    marks the XOR-halved form.  Sketches compare only against sketches
    with identical geometry and PRF id.
    """

    values: np.ndarray
    empty: np.ndarray
    bins: int
    store_bits: int
    folded: bool = False
    rank_bits: int = 13
    prf_id: str = PRF_ID

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.uint64)
        self.empty = np.ascontiguousarray(self.empty, dtype=bool)
        if self.values.shape != (self.bins,) or self.empty.shape != (self.bins,):
            raise ValueError("values and empty mask must both have length equal to bins")
        if self.store_bits != 64 and self.store_bits not in STORE_WIDTHS:
            raise ValueError(f"bad store width {self.store_bits}")
        if self.folded and self.store_bits != 1:
            raise ValueError("folded sketches store one bit per bin")
        if self.store_bits != 64 and np.any(self.values >> np.uint64(self.store_bits)):
            raise ValueError(f"sketch values exceed {self.store_bits} bits")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinSketch):
            return NotImplemented
        return (
            self.bins == other.bins
            and self.store_bits == other.store_bits
            and self.folded == other.folded
            and self.rank_bits == other.rank_bits
            and self.prf_id == other.prf_id
            and bool(np.array_equal(self.values, other.values))
            and bool(np.array_equal(self.empty, other.empty))
        )

    def to_bytes(self, compact: bool = False) -> bytes:
        """Serialize; ``compact`` drops the empty mask (empties read as 0)."""
        if self.rank_bits != 13:
            raise ValueError("only the default rank width serializes in format v1")
        prf = self.prf_id.encode("utf-8")
        mode = (_MODE_COMPACT if compact else 0) | (_MODE_FOLDED if self.folded else 0)
        head = MAGIC + struct.pack(
            "<HH", FORMAT_VERSION, len(prf)
        ) + prf + struct.pack("<IBB", self.bins, self.store_bits, mode)
        body = _pack_values(self.values, self.store_bits)
        if not compact:
            body += np.packbits(self.empty, bitorder="little").tobytes()
        return head + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "BinSketch":
        if blob[:4] != MAGIC:
            raise ValueError("not a bin sketch (bad magic)")
        version, prf_len = struct.unpack_from("<HH", blob, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported bin sketch format version {version}")
        off = 8
        prf_id = blob[off : off + prf_len].decode("utf-8")
        off += prf_len
        bins, store_bits, mode = struct.unpack_from("<IBB", blob, off)
        off += 6
        if store_bits != 64 and store_bits not in STORE_WIDTHS:
            raise ValueError(f"bad store width {store_bits} in sketch")
        nbytes = _packed_size(bins, store_bits)
        values = _unpack_values(blob[off : off + nbytes], store_bits, bins)
        off += nbytes
        if mode & _MODE_COMPACT:
            empty = np.zeros(bins, dtype=bool)
        else:
            mask_bytes = (bins + 7) // 8
            raw = np.frombuffer(blob[off : off + mask_bytes], dtype=np.uint8)
            if raw.size != mask_bytes:
                raise ValueError("truncated empty mask")
            empty = np.unpackbits(raw, count=bins, bitorder="little").astype(bool)
            off += mask_bytes
        if off != len(blob):
            raise ValueError(f"{len(blob) - off} trailing bytes after sketch")
        return cls(
            values=values,
            empty=empty,
            bins=bins,
            store_bits=store_bits,
            folded=bool(mode & _MODE_FOLDED),
            prf_id=prf_id,
        )


def _packed_size(bins: int, store_bits: int) -> int:
    if store_bits == 64:
        return 8 * bins
    if store_bits == 16:
        return 2 * bins
    if store_bits == 8:
        return bins
    per = 8 // store_bits
    return (bins + per - 1) // per


def _pack_values(values: np.ndarray, store_bits: int) -> bytes:
    if store_bits == 64:
        return values.astype("<u8").tobytes()
    if store_bits == 16:
        return values.astype("<u2").tobytes()
    if store_bits == 8:
        return values.astype(np.uint8).tobytes()
    per = 8 // store_bits
    v = values.astype(np.uint8)
    if v.size % per:
        v = np.concatenate([v, np.zeros(per - v.size % per, dtype=np.uint8)])
    out = np.zeros(v.size // per, dtype=np.uint8)
    for slot in range(per):
        out |= v[slot::per] << (slot * store_bits)
    return out.tobytes()


def _unpack_values(raw: bytes, store_bits: int, bins: int) -> np.ndarray:
    if store_bits == 64:
        if len(raw) != 8 * bins:
            raise ValueError("truncated sketch values")
        return np.frombuffer(raw, dtype="<u8").astype(np.uint64)
    if store_bits == 16:
        if len(raw) != 2 * bins:
            raise ValueError("truncated sketch values")
        return np.frombuffer(raw, dtype="<u2").astype(np.uint64)
    if store_bits == 8:
        if len(raw) != bins:
            raise ValueError("truncated sketch values")
        return np.frombuffer(raw, dtype=np.uint8).astype(np.uint64)
    per = 8 // store_bits
    if len(raw) != (bins + per - 1) // per:
        raise ValueError("truncated sketch values")
    packed = np.frombuffer(raw, dtype=np.uint8)
    mask = (1 << store_bits) - 1
    slots = [(packed >> (slot * store_bits)) & mask for slot in range(per)]
    expanded = np.stack(slots, axis=1).reshape(-1)[:bins]
    return expanded.astype(np.uint64)


def _select_winners(
    bin_idx: np.ndarray,
    ranks: np.ndarray,
    item_lane: np.ndarray,
    item_pos: np.ndarray,
    seed: Seed,
    budget: HashBudget | None,
) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-rank item per occupied bin; returns (occupied bins, item idx).

    Equivalent to ordering the items of each bin by the lexicographic
    key (rank, tiebreak word 0, tiebreak word 1, ...), which depends on
    the item and seed alone, so the choice is stable under taking
    subsets of the item population.
    """
    order = np.lexsort((ranks, bin_idx))
    sb = bin_idx[order]
    sr = ranks[order]
    seg_starts = np.flatnonzero(np.r_[True, sb[1:] != sb[:-1]])
    seg_lens = np.diff(np.r_[seg_starts, sb.size])
    head_rank = np.repeat(sr[seg_starts], seg_lens)
    cand = (sr == head_rank).astype(np.int64)
    cand_counts = np.add.reduceat(cand, seg_starts)
    winners = order[seg_starts].copy()
    tb_lane: int | None = None
    for g in np.flatnonzero(cand_counts > 1):
        items = order[seg_starts[g] : seg_starts[g] + cand_counts[g]]
        if tb_lane is None:
            tb_lane = seed.derive("tiebreak").lane
        for m in range(_TIEBREAK_ROUNDS):
            tb = words_at(
                tb_lane,
                item_lane[items],
                (item_pos[items] * _TIEBREAK_ROUNDS + m).astype(np.uint64),
            )
            if budget is not None:
                budget.tiebreak += items.size
            items = items[tb == tb.min()]
            if items.size == 1:
                break
        if items.size > 1:
            items = items[np.lexsort((item_pos[items], item_lane[items]))][:1]
        winners[g] = items[0]
    return sb[seg_starts], winners


def sketch_items(
    s: UnweightedSet,
    bins: int,
    bits: int | str,
    seed: Seed,
    budget: HashBudget | None = None,
    rank_bits: int = 13,
) -> BinSketch:
    """Sketch an unweighted item set into ``bins`` one-winner bins."""
    sk, _, _ = _sketch_with_winners(s, bins, bits, seed, budget, rank_bits)
    return sk


def _sketch_with_winners(
    s: UnweightedSet,
    bins: int,
    bits: int | str,
    seed: Seed,
    budget: HashBudget | None = None,
    rank_bits: int = 13,
) -> tuple[BinSketch, np.ndarray, np.ndarray]:
    """As :func:`sketch_items`, also reporting each bin's winning item.

    The extra arrays give, per occupied bin, the ordinal of the winning
    element within ``s.ids`` and the item's zero-based replication
    position.
    """
    bin_bits = _check_bin_count(bins)
    store_bits = _store_bits_of(bits)
    layout = ChunkLayout(bin_bits=bin_bits, store_bits=store_bits, rank_bits=rank_bits)
    values = np.zeros(bins, dtype=np.uint64)
    empty = np.ones(bins, dtype=bool)
    counts = s.count_arr
    total = int(counts.sum())
    win_elem = np.empty(0, dtype=np.int64)
    win_pos = np.empty(0, dtype=np.int64)
    if total:
        item_lane = np.repeat(s.lanes, counts)
        starts = np.cumsum(counts) - counts
        item_pos = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
        item_elem = np.repeat(np.arange(counts.size, dtype=np.int64), counts)
        words = words_at(seed.lane, item_lane, item_pos.astype(np.uint64))
        if budget is not None:
            budget.chunks += total
        b_arr, r_arr, s_arr = layout.split(words)
        occ, winners = _select_winners(
            b_arr.astype(np.int64),
            r_arr.astype(np.int64),
            item_lane,
            item_pos,
            seed,
            budget,
        )
        values[occ] = s_arr[winners]
        empty[occ] = False
        win_elem = item_elem[winners]
        win_pos = item_pos[winners]
    sk = BinSketch(
        values=values,
        empty=empty,
        bins=bins,
        store_bits=store_bits,
        folded=False,
        rank_bits=rank_bits,
    )
    return sk, win_elem, win_pos


def xor_fold(sk: BinSketch) -> BinSketch:
    """Halve a one-bit sketch by XORing adjacent bin pairs.

    The folded bit matches across two sketches with probability
    ``(1 + J**2) / 2``.  A folded bin is flagged empty if either of its
    halves was empty; empty halves contribute a zero bit to the XOR.
    """
    if sk.folded:
        raise ValueError("sketch is already folded")
    if sk.store_bits != 1:
        raise ValueError("folding requires a one-bit sketch")
    if sk.bins < 2:
        raise ValueError("folding needs at least two bins")
    v = sk.values.reshape(-1, 2)
    e = sk.empty.reshape(-1, 2)
    return BinSketch(
        values=v[:, 0] ^ v[:, 1],
        empty=e[:, 0] | e[:, 1],
        bins=sk.bins // 2,
        store_bits=1,
        folded=True,
        rank_bits=sk.rank_bits,
        prf_id=sk.prf_id,
    )


def estimate_binsketch(a: BinSketch, b: BinSketch) -> float:
    """Estimate the Jaccard similarity of the sketched item sets.

    Bins empty on both sides are skipped; bins empty on exactly one
    side count as mismatches.  Narrow fingerprints are corrected for
    the ``2**-b`` collision rate and clamped to [0, 1]; full-width
    sketches report the raw match fraction.  Two sketches with no
    compared bins (both entirely empty) estimate 1.
    """
    if (
        a.bins != b.bins
        or a.store_bits != b.store_bits
        or a.folded != b.folded
        or a.rank_bits != b.rank_bits
        or a.prf_id != b.prf_id
    ):
        raise ValueError("sketches have incompatible geometry")
    skip = a.empty & b.empty
    denom = a.bins - int(skip.sum())
    if denom == 0:
        return 1.0
    matched = (a.values == b.values) & ~a.empty & ~b.empty
    m = int(matched.sum()) / denom
    if a.folded:
        return math.sqrt(min(max(2.0 * m - 1.0, 0.0), 1.0))
    if a.store_bits == 64:
        return m
    p = 2.0 ** -a.store_bits
    return min(max((m - p) / (1.0 - p), 0.0), 1.0)
