"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.

Two protocols are used for the pipeline-level experiments, both on the
same synthetic benchmark (10 clusters, 100 points each, 16 dims, center
sphere radius 20, known-ratio 0.75, labeled-ratio 0.1, seeds 0..9):

* DEFAULT     - library defaults; used where the pre-trained encoder
                should stay close to the input geometry (cluster-count
                estimation).
* BOTTLENECK  - hidden width 6, fully-fit pre-training, gentle round
                rate 2e-3.  The narrow head makes the self-supervised
                stage non-trivial at this scale: initial clusterings
                occasionally miss a cluster, and only an arm that can
                accumulate training signal across rounds repairs that.
                Used for the alignment-vs-reinitialization comparison
                and the protocol sweeps, whose point is exactly that
                mechanism.
"""

import itertools
import time
from dataclasses import replace

import numpy as np
import pytest

from dac.alignment import hungarian
from dac.data import gen_synthetic, make_split
from dac.encoder import EncoderModel, TrainConfig, encode, pretrain
from dac.estimation import estimate_k
from dac.kmeans import kmeans
from dac.metrics import acc, ari, k_error, nmi, silhouette
from dac.pipeline import RunConfig, reinit_ablation_run, run

from test_encoder import analytic_grads, max_rel_err, numeric_grads, random_model
from test_kmeans import exhaustive_optimum
from test_metrics import acc_oracle, ari_oracle, nmi_oracle, partitions_with_at_most

K_TRUE = 10
SEEDS = range(10)


def report(name, ok, detail=""):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def benchmark():
    features, truth = gen_synthetic(
        k=K_TRUE, n_per_cluster=100, dim=16, separation=20.0, seed=0
    )
    return features, truth


def bottleneck_config(seed, **kw):
    train = TrainConfig(seed=seed, hidden_dim=6, pretrain_min_delta=1e-4)
    return RunConfig(train=train, seed=seed, round_learning_rate=2e-3, **kw)


@pytest.fixture(scope="module")
def end_to_end(benchmark):
    """Both arms over all seeds at the bottleneck protocol (shared by the
    ablation criterion and the known-ratio sweep)."""
    features, truth = benchmark
    start = time.time()
    align_accs, reinit_accs = [], []
    for seed in SEEDS:
        data = make_split(features, truth, 0.75, 0.1, seed=seed)
        cfg = bottleneck_config(seed, k=K_TRUE)
        _, final_a, _ = run(data, cfg)
        _, final_r, _ = reinit_ablation_run(data, cfg)
        align_accs.append(acc(truth, final_a.assignments))
        reinit_accs.append(acc(truth, final_r.assignments))
    return align_accs, reinit_accs, time.time() - start


def test_hungarian_oracle_equivalence():
    rng = np.random.default_rng(2024)
    start = time.time()
    for trial in range(200):
        n = 2 + trial % 7  # K in 2..8
        cost = rng.random((n, n)) * 10
        perm = hungarian(cost)
        perms = np.array(list(itertools.permutations(range(n))))
        exact_min = cost[np.arange(n), perms].sum(axis=1).min()
        got = cost[np.arange(n), perm].sum()
        assert got == exact_min, f"trial {trial}: {got} != {exact_min}"
    elapsed = time.time() - start
    report(
        "hungarian-oracle-equivalence",
        elapsed < 10.0,
        f"(200 matrices exact, {elapsed:.2f}s)",
    )


def test_metric_oracle_equivalence():
    checked = 0
    for n in range(2, 6):  # exhaustive pairing
        parts = list(partitions_with_at_most(n, 3))
        for truth in parts:
            for pred in parts:
                assert abs(nmi(truth, pred) - nmi_oracle(truth, pred)) <= 1e-12
                assert abs(ari(truth, pred) - ari_oracle(truth, pred)) <= 1e-12
                assert abs(acc(truth, pred) - acc_oracle(truth, pred)) <= 1e-12
                checked += 1
    for n in (6, 7, 8):  # every partition, seeded partners
        parts = list(partitions_with_at_most(n, 3))
        rng = np.random.default_rng(n)
        for truth in parts:
            for j in rng.choice(len(parts), size=8, replace=False):
                pred = parts[j]
                assert abs(nmi(truth, pred) - nmi_oracle(truth, pred)) <= 1e-12
                assert abs(ari(truth, pred) - ari_oracle(truth, pred)) <= 1e-12
                assert abs(acc(truth, pred) - acc_oracle(truth, pred)) <= 1e-12
                checked += 1
    hand = silhouette(np.array([[0.0], [1.0], [10.0], [11.0]]), [0, 0, 1, 1])
    sil_ok = abs(hand - 0.8997) <= 1e-4
    report(
        "metric-oracle-equivalence",
        sil_ok,
        f"({checked} partition pairs at 1e-12; silhouette {hand:.6f})",
    )


def test_k_error_reference_values():
    cases = [(150, 122, 18.67), (77, 66, 14.29), (150, 129, 14.00), (77, 67, 12.99)]
    results = [(kt, kp, k_error(kt, kp)) for kt, kp, _ in cases]
    ok = all(got == exp for (kt, kp, exp), (_, _, got) in zip(cases, results))
    report("k-error-reference-values", ok, f"({results})")


def test_gradient_check():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(20):
        d_in = int(rng.integers(2, 6))
        d = int(rng.integers(2, 6))
        k = int(rng.integers(2, 5))
        n = int(rng.integers(2, 7))
        model = random_model(rng, d_in, d, k)
        if rng.random() < 0.5:
            model = replace(
                model, shift=rng.normal(size=d_in), scale=np.abs(rng.normal(size=d_in)) + 0.5
            )
        z = rng.normal(size=(n, d_in)) * 2
        y = rng.integers(0, k, size=n)
        analytic = analytic_grads(model, z, y)
        numeric = numeric_grads(model, z, y, h=1e-5)
        for name in ("w_h", "b_h", "w_c", "b_c"):
            worst = max(worst, max_rel_err(analytic[name], numeric[name]))
    report("gradient-check", worst <= 1e-4, f"(worst relative error {worst:.3g})")


def test_kmeans_monotone_and_globally_optimal_on_small_instances():
    rng = np.random.default_rng(5)
    for trial in range(100):
        n = int(rng.integers(20, 80))
        d = int(rng.integers(2, 6))
        k = int(rng.integers(2, 6))
        x = rng.normal(size=(n, d)) * rng.uniform(0.5, 5.0)
        model = kmeans(x, k, seed=trial)
        hist = np.array(model.objective_history)
        assert np.all(hist[1:] <= hist[:-1] * (1 + 1e-12) + 1e-12), f"trial {trial}"

    mismatches = 0
    for trial in range(12):
        n = int(rng.integers(5, 9))
        k = int(rng.integers(2, 4))
        x = rng.normal(size=(n, 2)) * 3
        best = min(kmeans(x, k, seed=s).objective for s in range(10))
        if abs(best - exhaustive_optimum(x, k)) > 1e-9:
            mismatches += 1
    report(
        "kmeans-monotone-and-optimal",
        mismatches == 0,
        f"(100 monotone instances; {mismatches} optimum mismatches)",
    )


def test_end_to_end_alignment_beats_reinitialization(end_to_end):
    align_accs, reinit_accs, elapsed = end_to_end
    mean_align = float(np.mean(align_accs))
    mean_reinit = float(np.mean(reinit_accs))
    ok = mean_align >= 95.0 and mean_align > mean_reinit and elapsed < 300.0
    report(
        "end-to-end-ablation-direction",
        ok,
        f"(align {mean_align:.2f} vs reinit {mean_reinit:.2f}, {elapsed:.0f}s)",
    )


def test_estimate_k_within_ten_percent(benchmark):
    features, truth = benchmark
    in_band, estimates = 0, []
    for seed in SEEDS:
        data = make_split(features, truth, 0.75, 0.1, seed=seed)
        model = pretrain(data, TrainConfig(seed=seed))
        encoded = encode(model, features)
        k_hat = estimate_k(encoded, k_prime=2 * K_TRUE, seed=seed)
        estimates.append(k_hat)
        in_band += abs(k_hat - K_TRUE) <= 0.1 * K_TRUE
    report(
        "estimate-k-within-ten-percent",
        in_band >= 8,
        f"(estimates {estimates}, {in_band}/10 in band)",
    )


def test_sweep_directions(benchmark, end_to_end):
    features, truth = benchmark
    align_accs, _, _ = end_to_end  # known-ratio 0.75 arm, same protocol

    low_ratio_accs = []
    for seed in SEEDS:
        data = make_split(features, truth, 0.25, 0.1, seed=seed)
        _, final, _ = run(data, bottleneck_config(seed, k=K_TRUE))
        low_ratio_accs.append(acc(truth, final.assignments))
    acc_high, acc_low = float(np.mean(align_accs)), float(np.mean(low_ratio_accs))

    kprime_means = {}
    for mult in (1, 4):
        accs = []
        for seed in SEEDS:
            data = make_split(features, truth, 0.75, 0.1, seed=seed)
            _, final, _ = run(data, bottleneck_config(seed, k_prime=mult * K_TRUE))
            accs.append(acc(truth, final.assignments))
        kprime_means[mult] = float(np.mean(accs))

    ratio_ok = acc_high >= acc_low
    kprime_ok = kprime_means[1] >= kprime_means[4] - 5.0
    report(
        "sweep-directions",
        ratio_ok and kprime_ok,
        f"(known-ratio 0.75: {acc_high:.2f} >= 0.25: {acc_low:.2f}; "
        f"kprime 1x: {kprime_means[1]:.2f} vs 4x: {kprime_means[4]:.2f})",
    )
