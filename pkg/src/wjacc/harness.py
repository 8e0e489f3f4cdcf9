"""Synthetic accuracy experiments over controlled similarity targets.

Pairs of weighted sets are generated at exact Jaccard targets: a base
set with exponential weights is copied, a random half of the copy is
pushed up and the other half down by a common factor, and the factor is
bisected against the exact oracle until the pair hits the target.  The
runner then measures estimator error per (target, k, bits, method)
cell and emits one CSV row per cell.

Methods:

* ``wjacc``                the scaled bin sketches under test
* ``wjacc-exact-reduction``  same rounding step, but Jaccard of the
                           rounded sets computed exactly, isolating the
                           rounding contribution from binning noise
* ``baseline``             the quantize-and-replicate minhash oracle

Per-trial seeds are derived from the master seed by (target, trial)
label, never from execution order, so any execution schedule produces
identical results.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping, TextIO

import numpy as np

from .baseline import baseline_estimate, baseline_sketch
from .hashing import Seed, units_at
from .rounding import _counts_for, counts_from_thresholds
from .sets import UnweightedSet, WeightedSet, unweighted_jaccard
from .sketch import SketchParams, compute_sketch, estimate_jaccard, first_scale

DEFAULT_TARGETS = (0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.6, 0.5, 0.45, 0.4)
DEFAULT_K = (64, 128, 256, 512)
DEFAULT_BITS = ("full", 2, 1, "half")
METHOD_ORDER = ("wjacc", "wjacc-exact-reduction", "baseline")

CSV_COLUMNS = (
    "target_j",
    "achieved_j_mean",
    "method",
    "k",
    "b",
    "mean_abs_error",
    "std_dev",
    "trials",
    "L",
    "flag",
)


class GenerationError(RuntimeError):
    """A pair could not be steered to its similarity target."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs of one experiment sweep; mirrors the config-file keys."""

    jaccard_targets: tuple[float, ...] = DEFAULT_TARGETS
    k_values: tuple[int, ...] = DEFAULT_K
    b_values: tuple[int | str, ...] = DEFAULT_BITS
    trials: int = 200
    n_elements: int = 1000
    alpha: float = 0.5
    tau: int = 1
    scales: int = 3
    redundancy: int = 5
    variant: str = "independent"
    # The replication baseline is opt-in: at a bias-safe quantum it is
    # orders of magnitude slower than everything it checks.
    methods: tuple[str, ...] = ("wjacc", "wjacc-exact-reduction")
    baseline_q: float | None = None
    seed_hex: str = "00" * 32

    def __post_init__(self) -> None:
        for m in self.methods:
            if m not in METHOD_ORDER:
                raise ValueError(f"unknown method {m!r}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.n_elements < 2:
            raise ValueError("n_elements must be at least 2")

    @classmethod
    def from_mapping(cls, data: Mapping[str, object], **overrides: object) -> "ExperimentConfig":
        """Build from parsed config-file keys plus keyword overrides."""
        kw: dict[str, object] = {}
        for key, value in {**dict(data), **overrides}.items():
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown config key {key!r}")
            if isinstance(value, list):
                value = tuple(value)
            kw[key] = value
        if "b_values" in kw:
            kw["b_values"] = tuple(_norm_bits(b) for b in kw["b_values"])  # type: ignore[union-attr]
        return cls(**kw)  # type: ignore[arg-type]

    def master_seed(self) -> Seed:
        return Seed.from_hex(self.seed_hex)

    def params_for(self, k: int, bits: int | str) -> SketchParams:
        return SketchParams(
            alpha=self.alpha,
            samples=k,
            tau=self.tau,
            scales=self.scales,
            redundancy=self.redundancy,
            bits=bits,
            variant=self.variant,
        )


def _norm_bits(b: object) -> int | str:
    if b in ("full", "half"):
        return str(b)
    if isinstance(b, str) and b.isdigit():
        return int(b)
    if isinstance(b, int) and not isinstance(b, bool):
        return b
    raise ValueError(f"bad bit width {b!r}")


@dataclass
class ResultRow:
    """One experiment cell.  CSV serialization uses :data:`CSV_COLUMNS`;
    ``mean_estimate`` and ``mean_error`` ride along for analysis but are
    not part of the file schema."""

    target_j: float
    achieved_j_mean: float
    method: str
    k: int
    b: int | str
    mean_abs_error: float
    std_dev: float
    trials: int
    redundancy: int
    flag: str = ""
    mean_estimate: float = 0.0
    mean_error: float = 0.0

    def csv_values(self) -> list[str]:
        return [
            f"{self.target_j:g}",
            f"{self.achieved_j_mean:.6f}",
            self.method,
            str(self.k),
            str(self.b),
            f"{self.mean_abs_error:.6f}",
            f"{self.std_dev:.6f}",
            str(self.trials),
            str(self.redundancy),
            self.flag,
        ]


def gen_pair(
    target: float,
    n: int,
    seed: Seed,
    mean_weight: float = 10.0,
    tolerance: float = 0.005,
) -> tuple[WeightedSet, WeightedSet, float]:
    """Generate a pair of weighted sets with Jaccard ``target`` +- tol.

    Deterministic in ``seed``.  Returns both sets and the exact
    achieved similarity.  Raises :class:`GenerationError` if bisection
    cannot land inside the tolerance.
    """
    if not (0.0 < target < 1.0):
        raise ValueError("target similarity must lie strictly between 0 and 1")
    if n < 2:
        raise ValueError("need at least 2 elements")
    rng = np.random.default_rng(np.frombuffer(seed.key, dtype=np.uint64))
    base = rng.exponential(mean_weight, n)
    base = np.maximum(base, 1e-9)
    up = rng.random(n) < 0.5

    def jacc(lam: float) -> float:
        factor = np.where(up, 1.0 + lam, 1.0 / (1.0 + lam))
        other = base * factor
        return float(np.minimum(base, other).sum() / np.maximum(base, other).sum())

    lo, hi = 0.0, 1.0
    grow = 0
    while jacc(hi) > target:
        hi *= 2.0
        grow += 1
        if grow > 60:
            raise GenerationError(f"cannot push similarity down to {target}")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if jacc(mid) > target:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    achieved = jacc(lam)
    if abs(achieved - target) > tolerance:
        raise GenerationError(
            f"bisection stalled at {achieved:.6f} for target {target:.6f}"
        )
    ids = [b"e%06d" % i for i in range(n)]
    factor = np.where(up, 1.0 + lam, 1.0 / (1.0 + lam))
    w1 = WeightedSet(dict(zip(ids, base.tolist())))
    w2 = WeightedSet(dict(zip(ids, (base * factor).tolist())))
    return w1, w2, achieved


def _exact_reduction_estimate(
    w1: WeightedSet, w2: WeightedSet, params: SketchParams, seed: Seed
) -> float | None:
    """Mean exact Jaccard of the rounded sets over shared scales.

    Mirrors the rounding the sketch path performs (same variant, same
    derived seeds) but skips binning entirely.  None when the two sets
    share no scale.
    """
    s1 = first_scale(w1.l1, params)
    s2 = first_scale(w2.l1, params)
    shared = range(
        max(s1, s2), min(s1 + params.scales, s2 + params.scales)
    )
    if not len(shared):
        return None
    thresholds = []
    if params.variant == "dependent":
        rs = seed.derive("round")
        for w in (w1, w2):
            thresholds.append(
                units_at(rs.lane, w.lanes, np.zeros(len(w), dtype=np.uint64))
            )
    vals = []
    for i in shared:
        counts = []
        for j, w in enumerate((w1, w2)):
            scaled = w.weights * params.scale_factor(i)
            if params.variant == "dependent":
                counts.append(counts_from_thresholds(scaled, thresholds[j]))
            else:
                counts.append(
                    _counts_for(scaled, w.lanes, seed.derive(f"round/{i}"), "independent")
                )
        # Same ids on both sides here would allow pure array math, but
        # the sets are small enough that the honest oracle is fine.
        r1 = UnweightedSet({e: int(c) for e, c in zip(w1.ids, counts[0]) if c > 0})
        r2 = UnweightedSet({e: int(c) for e, c in zip(w2.ids, counts[1]) if c > 0})
        vals.append(unweighted_jaccard(r1, r2))
    return float(np.mean(vals))


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Run the sweep and return one row per (target, k, b, method)."""
    master = cfg.master_seed()
    rows: list[ResultRow] = []
    targets = sorted(cfg.jaccard_targets, reverse=True)
    k_values = sorted(cfg.k_values)
    for target in targets:
        pairs = []
        failures = 0
        for trial in range(cfg.trials):
            pair_seed = master.derive(f"pair/{target:.6f}/{trial}")
            try:
                pairs.append(gen_pair(target, cfg.n_elements, pair_seed))
            except GenerationError:
                failures += 1
        flag = f"genfail:{failures}" if failures else ""
        for k in k_values:
            # Method results that do not depend on b are computed once
            # per k and reused across the b cells.
            exact_cache: list[float] | None = None
            base_cache: list[float] | None = None
            for bits in cfg.b_values:
                params = cfg.params_for(k, bits)
                for method in METHOD_ORDER:
                    if method not in cfg.methods:
                        continue
                    if method == "wjacc":
                        errors, ests = _run_wjacc(pairs, params, master, target)
                    elif method == "wjacc-exact-reduction":
                        if exact_cache is None:
                            exact_cache = [
                                _exact_reduction_estimate(
                                    w1, w2, params, master.derive(f"sk/{target:.6f}/{t}")
                                )
                                for t, (w1, w2, _) in enumerate(pairs)
                            ]
                        ests = [e if e is not None else 0.0 for e in exact_cache]
                        errors = [e - a for e, (_, _, a) in zip(ests, pairs)]
                    else:
                        if base_cache is None:
                            base_cache = _run_baseline(pairs, cfg, master, target, k)
                        ests = base_cache
                        errors = [e - a for e, (_, _, a) in zip(ests, pairs)]
                    if not errors:
                        continue
                    err = np.array(errors)
                    est = np.array(ests)
                    rows.append(
                        ResultRow(
                            target_j=target,
                            achieved_j_mean=float(np.mean([a for _, _, a in pairs])),
                            method=method,
                            k=k,
                            b=bits,
                            mean_abs_error=float(np.mean(np.abs(err))),
                            std_dev=float(np.std(err, ddof=1)) if err.size > 1 else 0.0,
                            trials=len(pairs),
                            redundancy=cfg.redundancy,
                            flag=flag,
                            mean_estimate=float(np.mean(est)),
                            mean_error=float(np.mean(err)),
                        )
                    )
    return rows


def _run_wjacc(pairs, params, master, target):
    errors, ests = [], []
    for trial, (w1, w2, achieved) in enumerate(pairs):
        seed = master.derive(f"sk/{target:.6f}/{trial}")
        est = estimate_jaccard(
            compute_sketch(w1, params, seed), compute_sketch(w2, params, seed)
        )
        value = 0.0 if est.is_below_threshold else est.value
        ests.append(value)
        errors.append(value - achieved)
    return errors, ests


def _run_baseline(pairs, cfg, master, target, k):
    ests = []
    for trial, (w1, w2, achieved) in enumerate(pairs):
        seed = master.derive(f"base/{target:.6f}/{trial}")
        big = max(w1.l1, w2.l1)
        q = cfg.baseline_q if cfg.baseline_q is not None else big / (1000.0 * cfg.n_elements)
        a = baseline_sketch(w1, k, q, seed)
        b = baseline_sketch(w2, k, q, seed)
        ests.append(baseline_estimate(a, b))
    return ests


def write_csv(rows: Iterable[ResultRow], stream: TextIO) -> None:
    writer = csv.writer(stream)
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_values())


def write_long(rows: Iterable[ResultRow], stream: TextIO) -> None:
    """Plot-friendly long format: one (cell, metric, value) per line."""
    writer = csv.writer(stream)
    writer.writerow(["target_j", "k", "b", "method", "metric", "value"])
    for row in rows:
        head = [f"{row.target_j:g}", str(row.k), str(row.b), row.method]
        writer.writerow(head + ["mean_abs_error", f"{row.mean_abs_error:.6f}"])
        writer.writerow(head + ["std_dev", f"{row.std_dev:.6f}"])
        writer.writerow(head + ["achieved_j_mean", f"{row.achieved_j_mean:.6f}"])
