"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines
as they complete. Every tolerance is pinned in the assertions below.
"""
import os
import random
import time

import numpy as np
import pytest

from fixscope.classify import ClassifierConfig, classify
from fixscope.cluster import DistanceMatrix, hac_with_dendrogram
from fixscope.evaluate import (DEFAULT_THRESHOLDS, SplitSpec, SweepGrid,
                               best_on_test, pr_curve, split, sweep,
                               trapezoid_auc)
from fixscope.model_io import load_model, save_model
from fixscope.pipeline import train_model
from fixscope.represent import (AutoencoderConfig, DistanceConfig,
                                EqualityScheme, MetricFamily,
                                build_vocabulary, init_autoencoder,
                                script_distance, train_autoencoder, vectorize)
from fixscope.synth import (EXTRA_STATEMENT, OFF_BY_ONE, WRONG_COMPARISON,
                            WRONG_VARIABLE, generate_synthetic_corpus)
from fixscope.tree import trees_identical
from fixscope.treediff import apply_script, diff
from fixscope.classify import UNKNOWN

from conftest import random_tree
from test_cluster import reference_hac
from test_evaluate import FIG2_A_POINTS, random_rows, reference_curve
from test_represent import gradient_check


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def thousand_pair_run():
    rng = random.Random(12345)
    pairs = [(random_tree(rng), random_tree(rng)) for _ in range(1000)]
    started = time.perf_counter()
    rows = []
    for a, b in pairs:
        script = diff(a, b)
        ok = trees_identical(apply_script(a, script), b)
        rows.append((a, b, script, ok))
    elapsed = time.perf_counter() - started
    return rows, elapsed


def test_edit_script_oracle(thousand_pair_run):
    rows, elapsed = thousand_pair_run
    correct = sum(1 for _, _, _, ok in rows if ok)
    report("edit-script oracle",
           correct == 1000 and elapsed < 60.0,
           f"{correct}/1000 apply(diff) == dst, {elapsed:.1f}s (< 60s)")


def test_script_size_bound(thousand_pair_run):
    rows, _ = thousand_pair_run
    within = sum(1 for a, b, s, _ in rows if s.length <= a.size + b.size)

    rng = random.Random(777)
    exact_one = 0
    total_single = 0
    while total_single < 100:
        tree = random_tree(rng)
        for op in (WRONG_COMPARISON, OFF_BY_ONE, WRONG_VARIABLE):
            if op.applicable(tree):
                mutated = op.apply(tree, rng)
                if trees_identical(mutated, tree):
                    break
                total_single += 1
                if diff(mutated, tree).length == 1:
                    exact_one += 1
                break
    report("script-size bound",
           within == 1000 and exact_one == total_single,
           f"{within}/1000 within size(src)+size(dst); "
           f"{exact_one}/{total_single} single-label pairs give length 1")


def test_hac_oracle():
    rng = np.random.default_rng(1000)
    matrices = 0
    mismatches = 0
    monotone_failures = 0
    for _ in range(100):
        n = int(rng.integers(2, 51))
        matrix = DistanceMatrix(n=n, values=rng.random(n * (n - 1) // 2),
                                item_ids=[f"s{i}" for i in range(n)])
        matrices += 1
        for linkage in ("single", "complete", "average"):
            clusters, dendrogram = hac_with_dendrogram(matrix, linkage, 1.0)
            ref_merges, ref_partition = reference_hac(matrix, linkage, 1.0)
            got = [(m.cluster_a, m.cluster_b, m.new_cluster_id)
                   for m in dendrogram.merges]
            if got != [(a, b, nid) for a, b, _, nid in ref_merges]:
                mismatches += 1
                continue
            if any(abs(m.merge_distance - d) > 1e-12
                   for m, (_, _, d, _) in zip(dendrogram.merges, ref_merges)):
                mismatches += 1
            partition = [sorted(int(s[1:]) for s in c.member_script_ids)
                         for c in clusters]
            if partition != ref_partition:
                mismatches += 1
            if linkage in ("single", "complete"):
                distances = [m.merge_distance for m in dendrogram.merges]
                if any(x > y for x, y in zip(distances, distances[1:])):
                    monotone_failures += 1
    report("HAC oracle",
           mismatches == 0 and monotone_failures == 0,
           f"{matrices} matrices x 3 linkages match the brute-force "
           f"reference; {monotone_failures} monotonicity violations")


def test_metric_properties():
    rng = random.Random(31337)
    scripts = [diff(random_tree(rng), random_tree(rng)) for _ in range(80)]
    scheme = EqualityScheme.KIND_TYPE_LABEL
    vocab = build_vocabulary(scripts, scheme)
    autoencoder = train_autoencoder(
        [vectorize(s, scheme, vocab) for s in scripts],
        AutoencoderConfig(hidden_dim=8, epochs=40, seed=5))
    configs = [
        DistanceConfig(MetricFamily.JACCARD, scheme),
        DistanceConfig(MetricFamily.BOW_COSINE, scheme, vocabulary=vocab),
        DistanceConfig(MetricFamily.AE_COSINE, scheme, vocabulary=vocab,
                       autoencoder=autoencoder),
    ]
    index_pairs = [(rng.randrange(80), rng.randrange(80)) for _ in range(500)]
    violations = 0
    for config in configs:
        for script in scripts:
            if script_distance(script, script, config) != 0.0:
                violations += 1
        for i, j in index_pairs:
            d_ij = script_distance(scripts[i], scripts[j], config)
            d_ji = script_distance(scripts[j], scripts[i], config)
            if not (0.0 <= d_ij <= 1.0) or d_ij != d_ji:
                violations += 1
    report("metric properties", violations == 0,
           f"500 pairs x 3 families: range [0,1], bit-exact symmetry, "
           f"d(x,x)=0 ({violations} violations)")


def test_autoencoder_gradient_check():
    rng = np.random.default_rng(90)
    worst = 0.0
    for seed in range(20):
        config = AutoencoderConfig(hidden_dim=3, seed=seed)
        model = init_autoencoder(3, config)
        x = rng.random((4, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        worst = max(worst, gradient_check(model, x, step=1e-5))

    vectors_raw = rng.integers(0, 4, (6, 5))
    from fixscope.represent import BowVector
    vectors = [BowVector(counts={i: int(c) for i, c in enumerate(row) if c},
                         dim=5, vocab_ref="v") for row in vectors_raw]
    config = AutoencoderConfig(hidden_dim=4, epochs=0, seed=11)
    trained = train_autoencoder(vectors, config)
    reference = init_autoencoder(5, config)
    untouched = (np.array_equal(trained.encoder_weights,
                                reference.encoder_weights)
                 and np.array_equal(trained.decoder_weights,
                                    reference.decoder_weights)
                 and np.array_equal(trained.encoder_bias,
                                    reference.encoder_bias)
                 and np.array_equal(trained.decoder_bias,
                                    reference.decoder_bias))
    report("autoencoder gradient check",
           worst < 1e-4 and untouched,
           f"max relative error {worst:.2e} over 20 seeded instances "
           f"(< 1e-4); epochs=0 keeps the seeded init: {untouched}")


def test_pr_auc_oracle():
    trapz = getattr(np, "trapezoid", None) or np.trapz
    rng = random.Random(2718)
    worst = 0.0
    for _ in range(100):
        rows = random_rows(rng, rng.randint(1, 60))
        curve = pr_curve(rows, DEFAULT_THRESHOLDS)
        independent = float(trapz([p for _, p in curve.points],
                                  [r for r, _ in curve.points]))
        worst = max(worst, abs(curve.auc - independent))
        _, ref_auc = reference_curve(rows, DEFAULT_THRESHOLDS)
        worst = max(worst, abs(curve.auc - ref_auc))
    fig2 = trapezoid_auc(FIG2_A_POINTS)
    fig2_oracle = float(trapz([p for _, p in FIG2_A_POINTS],
                              [r for r, _ in FIG2_A_POINTS]))
    fig2_delta = abs(fig2 - fig2_oracle)
    report("PR-AUC oracle",
           worst <= 1e-12 and fig2_delta <= 1e-12,
           f"100 random sets within {worst:.1e} of the independent "
           f"integration; the 11 problem-A figure points give "
           f"{fig2:.6f} (delta {fig2_delta:.1e})")


def test_split_check():
    class Stub:
        def __init__(self, i):
            self.pair_id = str(i)

    sizes = tuple(len(part) for part in
                  split([Stub(i) for i in range(1472)], SplitSpec(seed=0)))
    report("split check", sizes == (1176, 148, 148),
           f"(0.8, 0.1, 0.1) over 1472 pairs -> {sizes}")


def test_sweep_shape():
    grid_96 = SweepGrid(
        families=[MetricFamily.JACCARD],
        schemes=list(EqualityScheme),                    # 4
        linkages=["single", "complete", "average"],      # 3
        cut_thresholds=[0.2, 0.3, 0.4, 0.5],             # 4
        min_sizes=[3, 5],                                # 2
        methods=["nearest_cluster"],
        k_values=[1],
    )
    corpus = generate_synthetic_corpus(40, seed=17)
    m_report = sweep(corpus, grid_96, split_spec=SplitSpec(seed=17))

    grid_full = SweepGrid(
        families=list(MetricFamily),                     # 3
        schemes=list(EqualityScheme),                    # 4
        linkages=["single", "complete", "average"],      # 3
        cut_thresholds=[0.2, 0.3, 0.4, 0.5],             # 4
        min_sizes=[3, 5],                                # 2
        methods=["nearest_cluster", "knn"],              # 2
        k_values=list(range(1, 49)),                     # 48
    )
    enumerated = sum(1 for _ in grid_full.combinations())
    report("sweep shape",
           grid_96.clustering_total() == 96
           and m_report.models_trained == 96
           and grid_full.total() == 27648 and enumerated == 27648,
           f"96-clustering grid trained {m_report.models_trained} models; "
           f"full grid enumerates {enumerated} combinations")


def test_end_to_end_synthetic_benchmark():
    started = time.perf_counter()
    corpus = generate_synthetic_corpus(250, seed=7)
    grid = SweepGrid(
        families=list(MetricFamily),                             # 3
        schemes=[EqualityScheme.KIND_TYPE,
                 EqualityScheme.KIND_TYPE_LABEL],                # 2
        linkages=["average", "complete"],                        # 2
        cut_thresholds=[0.3, 0.5],                               # 2
        min_sizes=[5],                                           # 1
        methods=["nearest_cluster", "knn"],                      # 2
        k_values=[1, 5],                                         # 2
    )
    assert grid.total() <= 200
    split_spec = SplitSpec(seed=7)
    sweep_report = sweep(corpus, grid, split_spec=split_spec,
                         ae_config=AutoencoderConfig(seed=7))
    best = sweep_report.results[0]
    curve, model = best_on_test(best.config, corpus, split_spec=split_spec,
                                ae_config=AutoencoderConfig(seed=7))

    probes = generate_synthetic_corpus(50, operators=(EXTRA_STATEMENT,),
                                       seed=99, id_prefix="probe")
    config = ClassifierConfig(method=best.config.method, k=best.config.k,
                              confidence_threshold=0.7,
                              distance_threshold=0.5)
    rejected = sum(1 for p in probes
                   if classify(p.incorrect_tree, model, config).label
                   == UNKNOWN)
    elapsed = time.perf_counter() - started
    report("end-to-end synthetic benchmark",
           curve.auc >= 0.90 and rejected >= 40 and elapsed < 600.0,
           f"grid {grid.total()} combos; best test PR-AUC {curve.auc:.3f} "
           f"(>= 0.90); {rejected}/50 novel-type probes rejected at "
           f"theta=0.7 (>= 40); {elapsed:.0f}s (< 600s)")


def test_model_persistence(tmp_path, monkeypatch):
    corpus = generate_synthetic_corpus(36, seed=2)
    model = train_model(corpus, family=MetricFamily.BOW_COSINE,
                        scheme=EqualityScheme.KIND_TYPE,
                        cut_threshold=0.3, min_cluster_size=2,
                        auto_label=True)
    path = tmp_path / "model.fixscope"
    save_model(model, str(path))
    reloaded = load_model(str(path))
    config = ClassifierConfig(confidence_threshold=0.0, distance_threshold=1.0)
    probes = generate_synthetic_corpus(50, seed=42, id_prefix="probe")
    identical = 0
    for pair in probes:
        before = classify(pair.incorrect_tree, model, config)
        after = classify(pair.incorrect_tree, reloaded, config)
        if (before.label == after.label
                and before.confidence == after.confidence
                and before.nearest_distance == after.nearest_distance
                and before.evidence == after.evidence):
            identical += 1

    original_bytes = path.read_text()

    def exploding_replace(src, dst):
        raise RuntimeError("killed during rename")

    monkeypatch.setattr(os, "replace", exploding_replace)
    model.clusters[0].label = "doomed write"
    crashed = False
    try:
        save_model(model, str(path))
    except RuntimeError:
        crashed = True
    monkeypatch.undo()
    intact = path.read_text() == original_bytes
    load_model(str(path))  # still parses with a valid digest

    report("model persistence",
           identical == 50 and crashed and intact,
           f"{identical}/50 probes bit-identical after round-trip; "
           f"kill during label write left the file intact: {intact}")
