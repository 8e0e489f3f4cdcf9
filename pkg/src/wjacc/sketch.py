"""Multi-scale sketches of weighted sets for thresholded similarity.

A weighted set is rescaled by powers of ``1 / beta`` (where
``beta = alpha ** (1 / tau)``) so that its l1 norm lands in a canonical
interval, rounded into an unweighted item set at ``t`` consecutive
scales, and each rounded set is bin-sketched.  Two sets whose norms are
within a factor ``beta ** -(t - 1)`` of each other share at least one
scale, and sets with similarity at least ``alpha`` always do; sets
sharing no scale are reported below threshold, which is sound because
such a norm gap alone caps their similarity below ``alpha``.

The per-scale bin count is ``k / (t - tau)``, sized so that any scale
pair used for estimation contributes at least ``k`` comparable bins in
total across the overlap, and the canonical interval keeps every
sketched set at least ``L`` items per bin on average at the densest
shared scale.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .binsketch import BinSketch, estimate_binsketch, sketch_items, xor_fold
from .hashing import PRF_ID, HashBudget, Seed, units_at
from .rounding import VARIANTS, _counts_for, counts_from_thresholds
from .sets import EstimateResult, UnweightedSet, WeightedSet

MAGIC = b"WJSK"
FORMAT_VERSION = 1

_BIT_CODES = {"full": 64, "half": 0, 1: 1, 2: 2, 4: 4, 8: 8, 16: 16}
_CODE_BITS = {64: "full", 0: "half", 1: 1, 2: 2, 4: 4, 8: 8, 16: 16}
_VARIANT_CODES = {"independent": 0, "dependent": 1}
_CODE_VARIANTS = {v: k for k, v in _VARIANT_CODES.items()}


@dataclass(frozen=True)
class SketchParams:
    """Parameters fixing a sketch family.

    alpha       similarity threshold in (0, 1)
    samples     total comparable-sample budget k (per-scale bins times
                the guaranteed scale overlap t - tau)
    tau         threshold subdivision: beta = alpha ** (1 / tau)
    scales      number of consecutive scales t kept per sketch
    redundancy  minimum expected items per bin L at the densest scale
    bits        stored width per bin: 1/2/4/8/16, "full", or "half"
    variant     rounding variant, "independent" or "dependent"
    """

    alpha: float = 0.5
    samples: int = 256
    tau: int = 1
    scales: int = 3
    redundancy: int = 5
    bits: int | str = 2
    variant: str = "independent"

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie strictly between 0 and 1")
        if self.scales < 2:
            raise ValueError("at least two scales are required")
        if not (1 <= self.tau < self.scales):
            raise ValueError("tau must satisfy 1 <= tau < scales")
        if self.redundancy < 1:
            raise ValueError("redundancy must be at least 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        span = self.scales - self.tau
        if self.samples < 1 or self.samples % span:
            raise ValueError(f"samples must be a positive multiple of scales - tau = {span}")
        per = self.samples // span
        if per & (per - 1):
            raise ValueError(f"per-scale bin count {per} must be a power of two")
        if self.bits not in _BIT_CODES:
            raise ValueError(f"bits must be one of {sorted(map(str, _BIT_CODES))}")
        if self.bits == "half" and per < 2:
            raise ValueError("half-bit sketches need at least two bins per scale")

    @property
    def beta(self) -> float:
        # tau == 1 short-circuits to alpha itself so the common case is
        # exact rather than exp(log(alpha)).
        if self.tau == 1:
            return self.alpha
        return math.exp(math.log(self.alpha) / self.tau)

    @property
    def per_scale_bins(self) -> int:
        return self.samples // (self.scales - self.tau)

    @property
    def floor_norm(self) -> float:
        """Lower edge of the canonical norm interval, L * k / (t - tau)."""
        return float(self.redundancy * self.per_scale_bins)

    def scale_factor(self, i: int) -> float:
        """``beta ** -i`` by repeated multiplication, shared everywhere.

        Repeated multiplication keeps every caller bit-identical to the
        scale search below, which matters at interval boundaries.
        """
        acc = 1.0
        if i >= 0:
            inv = 1.0 / self.beta
            for _ in range(i):
                acc *= inv
        else:
            for _ in range(-i):
                acc *= self.beta
        return acc


def first_scale(norm: float, params: SketchParams) -> int:
    """Smallest integer i with ``beta**-i * norm >= L * k / (t - tau)``.

    The log-based guess is corrected by direct substitution so the
    postcondition holds under the same arithmetic the sketcher uses.
    """
    if not (norm > 0.0 and math.isfinite(norm)):
        raise ValueError("norm must be positive and finite")
    floor = params.floor_norm
    guess = math.ceil(math.log(floor / norm) / math.log(1.0 / params.beta))
    s = int(guess)
    while params.scale_factor(s) * norm < floor:
        s += 1
    while params.scale_factor(s - 1) * norm >= floor:
        s -= 1
    return s


@dataclass
class WeightedSketch:
    """Bin sketches of one weighted set at ``t`` consecutive scales."""

    params: SketchParams
    scales: tuple[tuple[int, BinSketch], ...]
    prf_id: str = PRF_ID

    def __post_init__(self) -> None:
        if len(self.scales) != self.params.scales:
            raise ValueError("scale count does not match parameters")
        indices = [i for i, _ in self.scales]
        if indices != list(range(indices[0], indices[0] + len(indices))):
            raise ValueError("scale indices must be consecutive")

    @property
    def scale_indices(self) -> list[int]:
        return [i for i, _ in self.scales]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedSketch):
            return NotImplemented
        return (
            self.params == other.params
            and self.prf_id == other.prf_id
            and self.scales == other.scales
        )

    def to_bytes(self) -> bytes:
        prf = self.prf_id.encode("utf-8")
        p = self.params
        head = MAGIC + struct.pack(
            "<HdIHHIBBH",
            FORMAT_VERSION,
            p.alpha,
            p.samples,
            p.tau,
            p.scales,
            p.redundancy,
            _BIT_CODES[p.bits],
            _VARIANT_CODES[p.variant],
            len(prf),
        ) + prf + struct.pack("<H", len(self.scales))
        parts = [head]
        for i, sk in self.scales:
            blob = sk.to_bytes()
            parts.append(struct.pack("<iI", i, len(blob)))
            parts.append(blob)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "WeightedSketch":
        if blob[:4] != MAGIC:
            raise ValueError("not a weighted sketch (bad magic)")
        (
            version,
            alpha,
            samples,
            tau,
            scales_n,
            redundancy,
            bit_code,
            variant_code,
            prf_len,
        ) = struct.unpack_from("<HdIHHIBBH", blob, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported weighted sketch format version {version}")
        off = 4 + struct.calcsize("<HdIHHIBBH")
        prf_id = blob[off : off + prf_len].decode("utf-8")
        off += prf_len
        if bit_code not in _CODE_BITS:
            raise ValueError(f"bad bit-width code {bit_code}")
        if variant_code not in _CODE_VARIANTS:
            raise ValueError(f"bad variant code {variant_code}")
        params = SketchParams(
            alpha=alpha,
            samples=samples,
            tau=tau,
            scales=scales_n,
            redundancy=redundancy,
            bits=_CODE_BITS[bit_code],
            variant=_CODE_VARIANTS[variant_code],
        )
        (count,) = struct.unpack_from("<H", blob, off)
        off += 2
        entries = []
        for _ in range(count):
            i, length = struct.unpack_from("<iI", blob, off)
            off += 8
            entries.append((i, BinSketch.from_bytes(blob[off : off + length])))
            off += length
        if off != len(blob):
            raise ValueError(f"{len(blob) - off} trailing bytes after sketch")
        return cls(params=params, scales=tuple(entries), prf_id=prf_id)

    def save(self, stream: BinaryIO) -> None:
        stream.write(self.to_bytes())

    @classmethod
    def load(cls, stream: BinaryIO) -> "WeightedSketch":
        return cls.from_bytes(stream.read())


def _sketch_one_scale(
    w: WeightedSet,
    counts: np.ndarray,
    params: SketchParams,
    seed: Seed,
    budget: HashBudget | None,
) -> BinSketch:
    items = UnweightedSet(
        {e: int(c) for e, c in zip(w.ids, counts) if c > 0}
    )
    bits = 1 if params.bits == "half" else params.bits
    sk = sketch_items(items, params.per_scale_bins, bits, seed, budget)
    if params.bits == "half":
        sk = xor_fold(sk)
    return sk


def compute_sketch(
    w: WeightedSet,
    params: SketchParams,
    seed: Seed,
    budget: HashBudget | None = None,
) -> WeightedSketch:
    """Sketch ``w`` at its ``t`` canonical scales under ``seed``.

    The scale list starts at :func:`first_scale` of the l1 norm.  The
    independent variant derives a fresh rounding seed per scale; the
    dependent variant evaluates one threshold hash per element and
    reuses it at every scale.  Sketch chunk seeds are always per scale,
    labelled by absolute scale index so that two sets sharing a scale
    sketch it under the same hashes regardless of where their windows
    start.
    """
    if len(w) == 0:
        raise ValueError("cannot sketch an empty weighted set")
    s = first_scale(w.l1, params)
    weights = w.weights
    thresholds = None
    if params.variant == "dependent":
        rounding_seed = seed.derive("round")
        thresholds = units_at(rounding_seed.lane, w.lanes, np.zeros(len(w), dtype=np.uint64))
        if budget is not None:
            budget.rounding += len(w)
    entries = []
    for i in range(s, s + params.scales):
        scaled = weights * params.scale_factor(i)
        if params.variant == "dependent":
            counts = counts_from_thresholds(scaled, thresholds)
        else:
            counts = _counts_for(
                scaled, w.lanes, seed.derive(f"round/{i}"), "independent", budget
            )
        chunk_seed = seed.derive(f"sketch/{i}")
        entries.append((i, _sketch_one_scale(w, counts, params, chunk_seed, budget)))
    return WeightedSketch(params=params, scales=tuple(entries))


def estimate_jaccard(a: WeightedSketch, b: WeightedSketch) -> EstimateResult:
    """Estimate similarity from two sketches of the same family.

    Per-scale estimates over the shared scale indices are averaged with
    equal weight and clamped to [0, 1].  No shared scale means the two
    norms are too far apart for the similarity to reach alpha, so the
    result is a below-threshold verdict rather than a number.
    """
    if a.params != b.params or a.prf_id != b.prf_id:
        raise ValueError("sketches were built under different parameters")
    lookup = dict(b.scales)
    per_scale = [
        estimate_binsketch(sk, lookup[i]) for i, sk in a.scales if i in lookup
    ]
    if not per_scale:
        return EstimateResult.below(a.params.alpha)
    value = min(max(float(np.mean(per_scale)), 0.0), 1.0)
    return EstimateResult.similarity(value, len(per_scale))
