"""Seeded hashing primitives shared by every sketch in this package.

All randomness is derived from a 32-byte master key.  Independent hash
families are obtained by deriving child seeds under byte-string labels,
so two parties holding the same master key and the same parameters
reproduce every sketch bit for bit.

The pseudorandom function is a two-stage construction chosen so that
bulk evaluation vectorizes over numpy arrays:

* a keyed stage: ``K = u64le(blake2b(label, key=master_key)[0:8])`` per
  derived seed, and ``E = u64le(blake2b(element, digest_size=8))`` per
  element;
* an arithmetic stage: the stream word for ``(element, index)`` is

      word(seed, element, index) = mix64(mix64(K ^ E) + (index + 1) * PHI)

  where ``PHI = 0x9E3779B97F4A7C15`` (the golden-ratio Weyl increment)
  and ``mix64`` is the splitmix64 finalizer.  Each (seed, element) pair
  therefore owns a lazily indexable stream of 64-bit words; sketching
  consumes word ``i - 1`` for the item with replication index ``i``.

A word is turned into a unit-interval value by taking its top 53 bits:
``unit = (word >> 11) / 2**53``.  That is ``word / 2**64`` truncated to
the double-precision grid, and never rounds up to 1.0.

The construction is identified by :data:`PRF_ID`, which is embedded in
every serialized sketch; estimators refuse to compare sketches built
under different PRF identifiers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

PRF_ID = "wjmh-blake2b-sm64/1"

MASK64 = (1 << 64) - 1
_PHI = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_PHI_U = np.uint64(_PHI)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_INV_2_53 = float(2.0 ** -53)

_DEFAULT_RANK_BITS = 13


def mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer over a uint64 array (wrapping arithmetic)."""
    z = x.astype(np.uint64, copy=True)
    z ^= z >> _U30
    z *= _M1_U
    z ^= z >> _U27
    z *= _M2_U
    z ^= z >> _U31
    return z


def mix64_int(x: int) -> int:
    """Pure-integer splitmix64 finalizer; reference for the array path."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Seed:
    """A 32-byte hash key plus the label path it was derived under.

    ``derive`` produces statistically independent child seeds; the label
    path is informational (it never feeds back into the key).
    """

    key: bytes
    path: tuple[bytes, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.key, bytes) or len(self.key) != 32:
            raise ValueError("seed key must be exactly 32 bytes")

    @classmethod
    def from_int(cls, n: int) -> "Seed":
        return cls(hashlib.blake2b(n.to_bytes(16, "little", signed=True), digest_size=32).digest())

    @classmethod
    def from_hex(cls, text: str) -> "Seed":
        """Build a seed from a hex string.

        Exactly 64 hex digits are used as the key verbatim; anything else
        is canonicalized through blake2b so arbitrary-length tokens work.
        """
        raw = bytes.fromhex(text)
        if len(raw) == 32:
            return cls(raw)
        return cls(hashlib.blake2b(raw, digest_size=32).digest())

    def derive(self, label: str | bytes) -> "Seed":
        tag = label.encode() if isinstance(label, str) else label
        child = hashlib.blake2b(tag, key=self.key, digest_size=32).digest()
        return Seed(child, self.path + (tag,))

    @property
    def lane(self) -> int:
        """The 64-bit lane feeding the arithmetic PRF stage."""
        return int.from_bytes(self.key[:8], "little")


def element_lane(element: bytes) -> int:
    """64-bit lane of one element id (unkeyed blake2b, little-endian)."""
    return int.from_bytes(hashlib.blake2b(element, digest_size=8).digest(), "little")


def element_lanes(elements: list[bytes]) -> np.ndarray:
    """Lanes for a list of element ids, as a uint64 array."""
    out = np.empty(len(elements), dtype=np.uint64)
    for i, e in enumerate(elements):
        out[i] = element_lane(e)
    return out


def words_at(seed_lane: int, elem_lanes: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Stream words for (element, index) pairs; broadcasts its arguments.

    ``indices`` are the zero-based stream positions (item ``(a, i)``
    reads position ``i - 1``).
    """
    base = mix64(np.uint64(seed_lane) ^ np.asarray(elem_lanes, dtype=np.uint64))
    step = (np.asarray(indices, dtype=np.uint64) + np.uint64(1)) * _PHI_U
    return mix64(base + step)


def units_at(seed_lane: int, elem_lanes: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Unit-interval values in [0, 1) for (element, index) pairs."""
    w = words_at(seed_lane, elem_lanes, indices)
    return (w >> _U11).astype(np.float64) * _INV_2_53


def unit_hash(seed: Seed, element: bytes, index: int) -> float:
    """Scalar unit-interval hash of (element, index) under ``seed``."""
    if index < 0:
        raise ValueError("index must be non-negative")
    base = mix64_int(seed.lane ^ element_lane(element))
    word = mix64_int(base + (index + 1) * _PHI)
    return (word >> 11) * _INV_2_53


@dataclass(frozen=True)
class ChunkLayout:
    """How one 64-bit stream word is split into (bin, rank, stored) fields.

    Low bits first: ``bin_bits`` select the bin, the next ``rank_bits``
    order candidates within a bin, and the next ``store_bits`` are the
    retained fingerprint.  ``store_bits == 64`` means the whole word is
    stored and no field arithmetic applies to it.
    """

    bin_bits: int
    store_bits: int
    rank_bits: int = _DEFAULT_RANK_BITS

    def __post_init__(self) -> None:
        if self.bin_bits < 0 or self.rank_bits <= 0:
            raise ValueError("bin_bits must be >= 0 and rank_bits positive")
        if self.store_bits == 64:
            if self.bin_bits + self.rank_bits > 64:
                raise ValueError("bin and rank fields exceed 64 bits")
            return
        if self.store_bits <= 0:
            raise ValueError("store_bits must be positive or the full width 64")
        if self.bin_bits + self.rank_bits + self.store_bits > 64:
            raise ValueError(
                "chunk layout needs %d bits, only 64 available"
                % (self.bin_bits + self.rank_bits + self.store_bits)
            )

    def split(self, words: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized (bin, rank, stored) extraction from stream words."""
        w = np.asarray(words, dtype=np.uint64)
        bins = w & np.uint64((1 << self.bin_bits) - 1)
        ranks = (w >> np.uint64(self.bin_bits)) & np.uint64((1 << self.rank_bits) - 1)
        if self.store_bits == 64:
            stored = w
        else:
            shift = np.uint64(self.bin_bits + self.rank_bits)
            stored = (w >> shift) & np.uint64((1 << self.store_bits) - 1)
        return bins, ranks, stored


def chunk_stream(seed: Seed, element: bytes, layout: ChunkLayout, count: int):
    """Yield the first ``count`` (bin, rank, stored) chunks for an element."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return
    lanes = np.full(count, element_lane(element), dtype=np.uint64)
    words = words_at(seed.lane, lanes, np.arange(count, dtype=np.uint64))
    bins, ranks, stored = layout.split(words)
    for b, r, s in zip(bins.tolist(), ranks.tolist(), stored.tolist()):
        yield (b, r, s)


@dataclass
class HashBudget:
    """Counter of hash-stream consumption, for cost instrumentation.

    ``rounding`` counts threshold evaluations made while rounding
    weighted sets, ``chunks`` counts sketch stream words, and
    ``tiebreak`` counts extension words spent resolving rank ties.
    """

    rounding: int = 0
    chunks: int = 0
    tiebreak: int = 0

    @property
    def total(self) -> int:
        return self.rounding + self.chunks + self.tiebreak

    def __add__(self, other: "HashBudget") -> "HashBudget":
        return HashBudget(
            self.rounding + other.rounding,
            self.chunks + other.chunks,
            self.tiebreak + other.tiebreak,
        )
