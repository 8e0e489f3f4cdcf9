"""Acceptance suite: the contract-level guarantees, one verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see every verdict
as it is measured; the whole suite takes a few minutes.  Each check
prints its ``[PASS]``/``[FAIL]`` line before asserting, so a red run
still reports the measured numbers for all criteria that executed.
"""

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from wjacc.binsketch import estimate_binsketch, sketch_items
from wjacc.harness import ExperimentConfig, gen_pair, run_experiment
from wjacc.hashing import HashBudget, Seed
from wjacc.rounding import VARIANTS, reduce_weighted, rounding_count_matrix
from wjacc.sets import UnweightedSet, WeightedSet, weighted_jaccard
from wjacc.sketch import SketchParams, WeightedSketch, compute_sketch, estimate_jaccard

MASTER = Seed.from_int(777)


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d} {name}: {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def _exp_set(n, rng, norm, prefix="e"):
    vals = rng.exponential(1.0, n)
    vals *= norm / vals.sum()
    return WeightedSet({f"{prefix}{i:04d}": float(v) for i, v in enumerate(vals)})


def _derived_seeds(label, count):
    return [MASTER.derive(f"{label}/{i}") for i in range(count)]


def _pair_jaccards(w1, w2, seeds, variant, chunk=20_000):
    """Per-seed Jaccard of the two rounded sets, array of len(seeds)."""
    out = []
    for lo in range(0, len(seeds), chunk):
        part = seeds[lo : lo + chunk]
        c1 = rounding_count_matrix(w1, part, variant)
        c2 = rounding_count_matrix(w2, part, variant)
        inter = np.minimum(c1, c2).sum(axis=1)
        union = np.maximum(c1, c2).sum(axis=1)
        vals = np.ones(len(part))
        nz = union > 0
        vals[nz] = inter[nz] / union[nz]
        out.append(vals)
    return np.concatenate(out)


def test_c01_reduction_size_expectation():
    """Mean rounded-set size equals the l1 norm, both variants."""
    w = _exp_set(40, np.random.default_rng(101), 100.0)
    seeds = _derived_seeds("c1", 10_000)
    parts, ok = [], True
    for variant in VARIANTS:
        sizes = rounding_count_matrix(w, seeds, variant).sum(axis=1)
        mean = float(sizes.mean())
        se = float(sizes.std(ddof=1)) / math.sqrt(len(seeds))
        good = abs(mean - w.l1) <= 4 * se
        ok = ok and good
        parts.append(f"{variant} mean {mean:.3f} vs {w.l1:.0f} +- {4 * se:.3f}")
    _report(1, "size-expectation", ok, "; ".join(parts))


def test_c02_reduction_size_tail():
    """Size deviations beyond the concentration radius are rare."""
    w = _exp_set(60, np.random.default_rng(102), 200.0)
    radius = 3 * math.sqrt(200 * math.log(40))
    seeds = _derived_seeds("c2", 10_000)
    parts, ok = [], True
    for variant in VARIANTS:
        sizes = rounding_count_matrix(w, seeds, variant).sum(axis=1)
        rate = float(np.mean(np.abs(sizes - w.l1) >= radius))
        ok = ok and rate <= 0.05
        parts.append(f"{variant} rate {rate:.4f}")
    _report(2, "size-tail", ok, f"radius {radius:.1f}; " + "; ".join(parts) + "; limit 0.05")


def test_c03_rounded_jaccard_bias():
    """Jaccard of the rounded pair is within 1/(W-1) of truth in mean."""
    n_seeds = 100_000
    parts, ok = [], True
    for target in (0.4, 0.5, 0.8, 0.95):
        w1, w2, _ = gen_pair(target, 50, MASTER.derive(f"c3/pair/{target}"))
        scale = 100.0 / max(w1.l1, w2.l1)
        w1, w2 = w1.scaled(scale), w2.scaled(scale)
        true_j = weighted_jaccard(w1, w2)
        seeds = _derived_seeds(f"c3/{target}", n_seeds)
        for variant in VARIANTS:
            jaccs = _pair_jaccards(w1, w2, seeds, variant)
            bias = float(jaccs.mean()) - true_j
            bound = 1 / 99 + 3 * float(jaccs.std(ddof=1)) / math.sqrt(n_seeds)
            ok = ok and abs(bias) <= bound
            parts.append(f"J={target} {variant[:3]} bias {bias:+.5f} (|.|<={bound:.5f})")
    _report(3, "rounded-jaccard-bias", ok, "; ".join(parts))


def test_c04_rounded_jaccard_tail():
    """Jaccard deviations beyond the tail radius occur with rate <= 0.1."""
    w1, w2, _ = gen_pair(0.5, 100, MASTER.derive("c4/pair"))
    scale = 500.0 / max(w1.l1, w2.l1)
    w1, w2 = w1.scaled(scale), w2.scaled(scale)
    true_j = weighted_jaccard(w1, w2)
    radius = math.sqrt(27 * math.log(40) / 500)
    seeds = _derived_seeds("c4", 10_000)
    parts, ok = [], True
    for variant in VARIANTS:
        jaccs = _pair_jaccards(w1, w2, seeds, variant)
        rate = float(np.mean(np.abs(jaccs - true_j) >= radius))
        ok = ok and rate <= 0.1
        parts.append(f"{variant} rate {rate:.4f}")
    _report(4, "rounded-jaccard-tail", ok, f"radius {radius:.4f}; " + "; ".join(parts))


def test_c05_reduction_consistency():
    """Rounding commutes with pointwise min/max, per seed, exactly."""
    rng = np.random.default_rng(105)
    checked = 0
    ok = True
    for i in range(100):
        shared = {f"s{i}x{j}": float(v) for j, v in enumerate(rng.exponential(3.0, 20))}
        w1 = WeightedSet({**shared, **{f"a{i}x{j}": float(v) for j, v in
                                       enumerate(rng.exponential(3.0, 10))}})
        w2 = WeightedSet({**{k: float(v * rng.uniform(0.2, 2.0)) for k, v in shared.items()},
                          **{f"b{i}x{j}": float(v) for j, v in
                             enumerate(rng.exponential(3.0, 10))}})
        seed = MASTER.derive(f"c5/{i}")
        for variant in VARIANTS:
            r1 = reduce_weighted(w1, seed, variant)
            r2 = reduce_weighted(w2, seed, variant)
            rmin = reduce_weighted(w1.pointwise_min(w2), seed, variant)
            rmax = reduce_weighted(w1.pointwise_max(w2), seed, variant)
            good = rmin == r1.intersection(r2) and rmax == r1.union(r2)
            ok = ok and good
            checked += 1
    _report(5, "reduction-consistency", ok, f"{checked} pair/variant checks, all exact")


def test_c06_end_to_end_accuracy():
    """Full-pipeline error at defaults stays inside the published band."""
    cfg = ExperimentConfig(
        jaccard_targets=(0.96, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.6, 0.5),
        k_values=(128,),
        b_values=("full",),
        trials=200,
        n_elements=1000,
        methods=("wjacc",),
        seed_hex="07" * 32,
    )
    rows = run_experiment(cfg)
    by_target = {r.target_j: r for r in rows}
    top = by_target[0.96].mean_abs_error
    worst = max(r.mean_abs_error for r in rows)
    ok = top <= 0.015 and worst <= 0.05
    _report(
        6,
        "end-to-end-accuracy",
        ok,
        f"MAE at J=0.96: {top:.4f} (<=0.015); worst over J>=0.5: {worst:.4f} (<=0.05)",
    )


def test_c07_threshold_soundness():
    """Below-threshold verdicts never hide a truly similar pair."""
    params = SketchParams()
    alpha = params.alpha
    false_suppressions = 0
    window_misses = 0
    verdicts = 0
    in_window = 0
    for i in range(1000):
        rng = np.random.default_rng(70_000 + i)
        w1 = _exp_set(100, rng, norm=float(rng.uniform(500, 2000)), prefix=f"p{i}q")
        keep = rng.random(100) < 0.8
        entries = {}
        for j, (e, v) in enumerate(w1.items()):
            if keep[j]:
                entries[e] = v * float(rng.lognormal(0.0, 0.25))
        for j in range(20):
            entries[f"n{i}q{j:04d}".encode()] = float(rng.exponential(10.0))
        w2 = WeightedSet(entries)
        ratio = 2.0 ** rng.uniform(-3.0, 3.0)
        w2 = w2.scaled(ratio * w1.l1 / w2.l1)
        seed = MASTER.derive(f"c7/{i}")
        est = estimate_jaccard(
            compute_sketch(w1, params, seed), compute_sketch(w2, params, seed)
        )
        if est.is_below_threshold:
            verdicts += 1
            if weighted_jaccard(w1, w2) >= alpha:
                false_suppressions += 1
        if alpha <= ratio <= 1 / alpha:
            in_window += 1
            if est.is_below_threshold or est.scales_used < params.scales - params.tau:
                window_misses += 1
    ok = false_suppressions == 0 and window_misses == 0
    _report(
        7,
        "threshold-soundness",
        ok,
        f"{verdicts} below-threshold verdicts, {false_suppressions} false; "
        f"{in_window} in-window pairs, {window_misses} without full overlap",
    )


def test_c08_narrow_fingerprint_correction():
    """Collision-corrected 1/2-bit estimates are centered; raw match
    counts on unrelated sets sit at the predicted collision rate."""
    bins = 256
    per = 40
    a_full = UnweightedSet({f"s{i:04d}": per for i in range(bins)})
    b_disjoint = UnweightedSet({f"d{i:04d}": per for i in range(bins)})
    b_nested = UnweightedSet({f"s{i:04d}": per // 2 for i in range(bins)})
    n_seeds = 1000
    parts, ok = [], True
    raw_counts = []
    for b in (1, 2):
        means = {0.0: [], 0.5: [], 1.0: []}
        for s in range(n_seeds):
            seed = MASTER.derive(f"c8/{b}/{s}")
            sk_a = sketch_items(a_full, bins, b, seed)
            sk_d = sketch_items(b_disjoint, bins, b, seed)
            sk_n = sketch_items(b_nested, bins, b, seed)
            means[0.0].append(estimate_binsketch(sk_a, sk_d))
            means[0.5].append(estimate_binsketch(sk_a, sk_n))
            means[1.0].append(estimate_binsketch(sk_a, sk_a))
            if b == 2:
                raw_counts.append(int(np.sum(sk_a.values[:136] == sk_d.values[:136])))
        for j, vals in means.items():
            err = abs(float(np.mean(vals)) - j)
            ok = ok and err <= 0.03
            parts.append(f"b={b} J={j:g} off {err:.4f}")
    raw_mean = float(np.mean(raw_counts))
    sigma = math.sqrt(136 * 0.25 * 0.75)
    raw_ok = abs(raw_mean - 34.0) <= 4 * sigma / math.sqrt(n_seeds)
    ok = ok and raw_ok
    parts.append(f"raw 136-bin matches {raw_mean:.2f} vs 34 +- {4 * sigma / math.sqrt(n_seeds):.2f}")
    _report(8, "narrow-fingerprint-correction", ok, "; ".join(parts))


def test_c09_determinism_and_round_trip():
    """Same inputs give byte-identical sketches, also under threads."""
    rng = np.random.default_rng(123)
    w = WeightedSet({f"e{i:04d}": float(v) for i, v in enumerate(rng.exponential(10.0, 300))})
    golden = {
        ("independent", 2): "f305653f1252ecd7b33f7f676df91d2a0ec0e9826d97ffdc2db90ee90105eb8e",
        ("independent", "full"): "b314e546c5d78ef0c7775cc3433b2e3170ad5f34cca653eb88b9725f7cac27e7",
        ("dependent", 2): "d76529e089e5c98f521a59f9a6e5bfe7a33d855b3fcfe7bac1687d4ef0955da4",
        ("dependent", "full"): "ad1c4103dd2818bbf9916fa9d2960c0ab115c52ae23439c1ff30275371c14d64",
    }
    seed = Seed(b"\x00" * 32)
    ok = True
    notes = []
    for (variant, bits), want in golden.items():
        params = SketchParams(bits=bits, variant=variant)
        blob = compute_sketch(w, params, seed).to_bytes()
        stable = hashlib.sha256(blob).hexdigest() == want
        round_trip = WeightedSketch.from_bytes(blob).to_bytes() == blob
        with ThreadPoolExecutor(max_workers=4) as pool:
            copies = list(pool.map(lambda _: compute_sketch(w, params, seed).to_bytes(), range(8)))
        threaded = all(c == blob for c in copies)
        ok = ok and stable and round_trip and threaded
        notes.append(f"{variant}/{bits}: digest {'ok' if stable else 'DRIFT'}")
    _report(9, "determinism-round-trip", ok, "; ".join(notes))


def test_c10_hash_budget():
    """Dependent rounding spends one hash per element; chunk spend at
    defaults stays within 5% of the n + 7Lk account."""
    k = 256
    params = SketchParams(samples=k, bits=2, variant="dependent")
    n = 1000
    cap = 1.05 * (n + 7 * params.redundancy * k)
    rng = np.random.default_rng(110)
    ok = True
    worst = 0.0
    for s in range(20):
        norm = float(rng.uniform(params.floor_norm, 2 * params.floor_norm))
        w = _exp_set(n, rng, norm, prefix=f"g{s}x")
        budget = HashBudget()
        compute_sketch(w, params, MASTER.derive(f"c10/{s}"), budget)
        ok = ok and budget.rounding == n and budget.total <= cap
        worst = max(worst, budget.total)
    _report(
        10,
        "hash-budget",
        ok,
        f"rounding == {n} every run; max total {worst:.0f} <= {cap:.0f}",
    )


def test_c11_oracle_crosscheck():
    """Sketch estimates agree with the replication oracle in mean."""
    cfg = ExperimentConfig(
        jaccard_targets=(0.95, 0.8, 0.6, 0.5),
        k_values=(256,),
        b_values=("full",),
        trials=40,
        n_elements=30,
        methods=("wjacc", "baseline"),
        seed_hex="0b" * 32,
    )
    rows = run_experiment(cfg)
    by = {(r.target_j, r.method): r for r in rows}
    parts, ok = [], True
    for target in cfg.jaccard_targets:
        wj = by[(target, "wjacc")]
        base = by[(target, "baseline")]
        diff = abs(wj.mean_estimate - base.mean_estimate)
        bound = 3 * math.sqrt(
            wj.std_dev**2 / wj.trials + base.std_dev**2 / base.trials
        )
        ok = ok and diff <= bound
        parts.append(f"J={target:g} diff {diff:.4f} (<= {bound:.4f})")
    _report(11, "oracle-crosscheck", ok, "; ".join(parts))
