"""Weighted and unweighted multiset types plus exact Jaccard oracles.

A weighted set maps opaque byte-string element ids to positive real
weights.  An unweighted set is a plain set of (element, index) items
where the indices for each element always form the prefix 1..c; it is
therefore stored as an element -> count table and never materialized
item by item unless asked.

Both types keep their elements sorted by id so that every downstream
array computation is order-independent by construction.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Mapping, TextIO

import numpy as np

from .hashing import element_lanes


def _as_element(key: str | bytes) -> bytes:
    if isinstance(key, bytes):
        return key
    if isinstance(key, str):
        return key.encode("utf-8")
    raise TypeError(f"element id must be str or bytes, got {type(key).__name__}")


class WeightedSet:
    """Immutable mapping from element ids to positive finite weights."""

    __slots__ = ("_weights", "_ids", "_weight_arr", "_lane_arr")

    def __init__(self, entries: Mapping[str | bytes, float] | Iterable[tuple[str | bytes, float]]):
        items = entries.items() if isinstance(entries, Mapping) else entries
        table: dict[bytes, float] = {}
        for key, raw in items:
            elem = _as_element(key)
            if elem in table:
                raise ValueError(f"duplicate element id {elem!r}")
            w = float(raw)
            if not math.isfinite(w) or w <= 0.0:
                raise ValueError(f"weight for {elem!r} must be positive and finite, got {raw!r}")
            table[elem] = w
        self._ids: list[bytes] = sorted(table)
        self._weights: dict[bytes, float] = {e: table[e] for e in self._ids}
        self._weight_arr: np.ndarray | None = None
        self._lane_arr: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._ids)

    def __iter__(self) -> Iterator[bytes]:
        return iter(self._ids)

    def __contains__(self, key: object) -> bool:
        return isinstance(key, (str, bytes)) and _as_element(key) in self._weights

    def __getitem__(self, key: str | bytes) -> float:
        return self._weights[_as_element(key)]

    def get(self, key: str | bytes, default: float = 0.0) -> float:
        return self._weights.get(_as_element(key), default)

    def items(self):
        return self._weights.items()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedSet):
            return NotImplemented
        return self._weights == other._weights

    def __repr__(self) -> str:
        return f"WeightedSet({len(self._ids)} elements, l1={self.l1:g})"

    @property
    def ids(self) -> list[bytes]:
        """Element ids in sorted order."""
        return self._ids

    @property
    def weights(self) -> np.ndarray:
        """Weights aligned with :attr:`ids`, as a float64 array."""
        if self._weight_arr is None:
            self._weight_arr = np.array([self._weights[e] for e in self._ids], dtype=np.float64)
        return self._weight_arr

    @property
    def lanes(self) -> np.ndarray:
        """Per-element 64-bit hash lanes aligned with :attr:`ids`."""
        if self._lane_arr is None:
            self._lane_arr = element_lanes(self._ids)
        return self._lane_arr

    @property
    def l1(self) -> float:
        return float(sum(self._weights.values()))

    def pointwise_min(self, other: "WeightedSet") -> "WeightedSet":
        """Element-wise minimum, treating absent elements as weight 0."""
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        out = {}
        for e, w in small.items():
            v = big.get(e)
            if v > 0.0:
                out[e] = min(w, v)
        return WeightedSet(out)

    def pointwise_max(self, other: "WeightedSet") -> "WeightedSet":
        """Element-wise maximum, treating absent elements as weight 0."""
        out = dict(self._weights)
        for e, w in other.items():
            if w > out.get(e, 0.0):
                out[e] = w
        return WeightedSet(out)

    def scaled(self, factor: float) -> "WeightedSet":
        return WeightedSet({e: w * factor for e, w in self.items()})


def l1_norm(w: WeightedSet) -> float:
    return w.l1


def weighted_jaccard(w1: WeightedSet, w2: WeightedSet) -> float:
    """Exact weighted Jaccard: sum of minima over sum of maxima.

    Two empty sets are defined to have similarity 1.
    """
    if len(w1) == 0 and len(w2) == 0:
        return 1.0
    small, big = (w1, w2) if len(w1) <= len(w2) else (w2, w1)
    inter = 0.0
    for e, w in small.items():
        v = big.get(e)
        if v > 0.0:
            inter += min(w, v)
    denom = w1.l1 + w2.l1 - inter
    return inter / denom


class UnweightedSet:
    """A set of (element, index) items with contiguous index prefixes.

    The items for element ``a`` are exactly ``(a, 1) .. (a, c_a)``, so
    the set is represented by its count table.  Set intersection and
    union then reduce to pointwise min and max of counts.
    """

    __slots__ = ("_counts", "_ids", "_count_arr", "_lane_arr")

    def __init__(self, counts: Mapping[str | bytes, int]):
        table: dict[bytes, int] = {}
        for key, raw in counts.items():
            elem = _as_element(key)
            c = int(raw)
            if c != raw or c < 0:
                raise ValueError(f"count for {elem!r} must be a non-negative integer")
            if elem in table:
                raise ValueError(f"duplicate element id {elem!r}")
            if c > 0:
                table[elem] = c
        self._ids: list[bytes] = sorted(table)
        self._counts: dict[bytes, int] = {e: table[e] for e in self._ids}
        self._count_arr: np.ndarray | None = None
        self._lane_arr: np.ndarray | None = None

    @classmethod
    def from_items(cls, items: Iterable[tuple[str | bytes, int]]) -> "UnweightedSet":
        """Build from explicit (element, index) items, validating prefixes."""
        seen: dict[bytes, set[int]] = {}
        for key, idx in items:
            elem = _as_element(key)
            if idx < 1:
                raise ValueError(f"item index for {elem!r} must be >= 1, got {idx}")
            bucket = seen.setdefault(elem, set())
            if idx in bucket:
                raise ValueError(f"duplicate item ({elem!r}, {idx})")
            bucket.add(idx)
        counts = {}
        for elem, bucket in seen.items():
            c = len(bucket)
            if bucket != set(range(1, c + 1)):
                raise ValueError(f"indices for {elem!r} do not form a contiguous prefix")
            counts[elem] = c
        return cls(counts)

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __contains__(self, item: object) -> bool:
        if not isinstance(item, tuple) or len(item) != 2:
            return False
        elem, idx = item
        try:
            elem = _as_element(elem)
        except TypeError:
            return False
        return 1 <= idx <= self._counts.get(elem, 0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UnweightedSet):
            return NotImplemented
        return self._counts == other._counts

    def __repr__(self) -> str:
        return f"UnweightedSet({len(self._ids)} elements, {len(self)} items)"

    def items(self) -> Iterator[tuple[bytes, int]]:
        """Yield (element, index) items in sorted element order."""
        for e in self._ids:
            for i in range(1, self._counts[e] + 1):
                yield (e, i)

    def count(self, element: str | bytes) -> int:
        return self._counts.get(_as_element(element), 0)

    @property
    def counts(self) -> dict[bytes, int]:
        return dict(self._counts)

    @property
    def ids(self) -> list[bytes]:
        return self._ids

    @property
    def count_arr(self) -> np.ndarray:
        if self._count_arr is None:
            self._count_arr = np.array([self._counts[e] for e in self._ids], dtype=np.int64)
        return self._count_arr

    @property
    def lanes(self) -> np.ndarray:
        if self._lane_arr is None:
            self._lane_arr = element_lanes(self._ids)
        return self._lane_arr

    def intersection(self, other: "UnweightedSet") -> "UnweightedSet":
        small, big = (self, other) if len(self._ids) <= len(other._ids) else (other, self)
        out = {}
        for e, c in small._counts.items():
            v = big._counts.get(e, 0)
            if v:
                out[e] = min(c, v)
        return UnweightedSet(out)

    def union(self, other: "UnweightedSet") -> "UnweightedSet":
        out = dict(self._counts)
        for e, c in other._counts.items():
            if c > out.get(e, 0):
                out[e] = c
        return UnweightedSet(out)


def unweighted_jaccard(s1: UnweightedSet, s2: UnweightedSet) -> float:
    """Exact Jaccard of two item sets; two empty sets similarity 1."""
    n1, n2 = len(s1), len(s2)
    if n1 == 0 and n2 == 0:
        return 1.0
    small, big = (s1, s2) if len(s1._ids) <= len(s2._ids) else (s2, s1)
    inter = 0
    for e, c in small._counts.items():
        v = big._counts.get(e, 0)
        if v:
            inter += min(c, v)
    return inter / (n1 + n2 - inter)


class EstimateResult:
    """Outcome of a similarity estimate.

    Either a numeric estimate with the number of scales that backed it,
    or a below-threshold verdict carrying the threshold that applied.
    """

    __slots__ = ("value", "scales_used", "threshold")

    def __init__(self, value: float | None, scales_used: int | None, threshold: float | None):
        if (value is None) == (threshold is None):
            raise ValueError("exactly one of value and threshold must be set")
        if value is not None and scales_used is None:
            raise ValueError("a numeric estimate must record scales_used")
        self.value = value
        self.scales_used = scales_used
        self.threshold = threshold

    @classmethod
    def similarity(cls, value: float, scales_used: int) -> "EstimateResult":
        return cls(value, scales_used, None)

    @classmethod
    def below(cls, threshold: float) -> "EstimateResult":
        return cls(None, None, threshold)

    @property
    def is_below_threshold(self) -> bool:
        return self.value is None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EstimateResult):
            return NotImplemented
        return (
            self.value == other.value
            and self.scales_used == other.scales_used
            and self.threshold == other.threshold
        )

    def __repr__(self) -> str:
        if self.is_below_threshold:
            return f"EstimateResult(below threshold {self.threshold:g})"
        return f"EstimateResult({self.value:.6f}, scales_used={self.scales_used})"


def read_weighted_set(stream: TextIO) -> WeightedSet:
    """Parse the tab-separated text format: ``<element>\\t<weight>``.

    Blank lines are skipped.  Duplicate ids, missing fields, and
    non-positive or non-finite weights raise ValueError with the
    offending line number.
    """
    entries: dict[bytes, float] = {}
    for lineno, line in enumerate(stream, start=1):
        text = line.rstrip("\n").rstrip("\r")
        if not text.strip():
            continue
        if "\t" not in text:
            raise ValueError(f"line {lineno}: expected <element>\\t<weight>")
        name, _, weight_text = text.rpartition("\t")
        try:
            weight = float(weight_text)
        except ValueError:
            raise ValueError(f"line {lineno}: bad weight {weight_text!r}") from None
        elem = name.encode("utf-8")
        if elem in entries:
            raise ValueError(f"line {lineno}: duplicate element {name!r}")
        if not math.isfinite(weight) or weight <= 0.0:
            raise ValueError(f"line {lineno}: weight must be positive and finite")
        entries[elem] = weight
    return WeightedSet(entries)


def write_weighted_set(w: WeightedSet, stream: TextIO) -> None:
    """Write the tab-separated text format, one element per line."""
    for elem, weight in w.items():
        stream.write(f"{elem.decode('utf-8')}\t{weight!r}\n")
