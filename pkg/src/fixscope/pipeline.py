"""Training-stage glue: pairs -> shortest scripts -> distances -> clusters.

The correct-solution pool is every correct tree in the training corpus,
deduplicated structurally (identical trees yield identical scripts, and the
tie-break keeps the first pool index, so dropping later duplicates cannot
change any shortest script).
"""
from __future__ import annotations

import json
from typing import Optional, Sequence

from .cluster import (Cluster, ClusterModel, TrainingScript, distance_matrix,
                      filter_clusters, hac_with_dendrogram, unclustered_members)
from .errors import ConfigError
from .represent import (AutoencoderConfig, DistanceConfig, EqualityScheme,
                        MetricFamily, build_vocabulary, train_autoencoder,
                        vectorize)
from .tree import AstTree, subtree_hashes, isomorphic
from .treeio import SubmissionPair, pair_to_record
from .treediff import MatcherParams, shortest_script
from .tree import fnv1a_64


def dedupe_trees(trees: Sequence[AstTree]) -> list[AstTree]:
    """Keep the first occurrence of each structurally distinct tree."""
    seen: dict[int, list[AstTree]] = {}
    out: list[AstTree] = []
    for t in trees:
        h = subtree_hashes(t.root)[t.root.id]
        bucket = seen.setdefault(h, [])
        if any(isomorphic(t.root, other.root) for other in bucket):
            continue
        bucket.append(t)
        out.append(t)
    return out


def corpus_digest(pairs: Sequence[SubmissionPair]) -> str:
    payload = "\n".join(
        json.dumps(pair_to_record(p), sort_keys=True, separators=(",", ":"))
        for p in pairs)
    return f"{fnv1a_64(payload.encode('utf-8')):016x}"


def compute_training_scripts(pairs: Sequence[SubmissionPair],
                             correct_pool: Sequence[AstTree],
                             matcher: MatcherParams) -> dict:
    scripts: dict[str, TrainingScript] = {}
    for pair in pairs:
        script = shortest_script(pair.incorrect_tree, list(correct_pool),
                                 matcher, src_ref=pair.pair_id)
        scripts[pair.pair_id] = TrainingScript(
            script_id=pair.pair_id,
            pair_id=pair.pair_id,
            problem_id=pair.problem_id,
            script=script,
            incorrect_src=pair.incorrect_tree.source_text,
            correct_src=pair.correct_tree.source_text,
            ground_truth_label=pair.ground_truth_label,
        )
    return scripts


def fit_distance_config(scripts: Sequence, family: MetricFamily,
                        scheme: EqualityScheme, min_df: int = 1,
                        ae_config: Optional[AutoencoderConfig] = None) -> DistanceConfig:
    """Fit whatever artifacts the metric family needs on the training scripts."""
    if family is MetricFamily.JACCARD:
        return DistanceConfig(family=family, scheme=scheme)
    vocab = build_vocabulary([s.script for s in scripts], scheme, min_df)
    if family is MetricFamily.BOW_COSINE:
        return DistanceConfig(family=family, scheme=scheme, vocabulary=vocab)
    if len(vocab) == 0:
        raise ConfigError("cannot train an autoencoder on an empty vocabulary")
    ae_config = ae_config or AutoencoderConfig()
    vectors = [vectorize(s.script, scheme, vocab) for s in scripts]
    model = train_autoencoder(vectors, ae_config)
    return DistanceConfig(family=family, scheme=scheme, vocabulary=vocab,
                          autoencoder=model)


def auto_label_clusters(clusters: list[Cluster], scripts: dict) -> None:
    """Label each cluster with the majority ground truth of its members
    (ties to the lexicographically smallest label); clusters whose members
    carry no ground truth stay unlabeled."""
    for cluster in clusters:
        votes: dict[str, int] = {}
        for sid in cluster.member_script_ids:
            gt = scripts[sid].ground_truth_label
            if gt is not None:
                votes[gt] = votes.get(gt, 0) + 1
        if votes:
            cluster.label = min(votes, key=lambda lab: (-votes[lab], lab))


def train_model(pairs: Sequence[SubmissionPair],
                family: MetricFamily = MetricFamily.JACCARD,
                scheme: EqualityScheme = EqualityScheme.KIND_TYPE_LABEL,
                linkage: str = "average",
                cut_threshold: float = 0.3,
                min_cluster_size: int = 5,
                matcher: MatcherParams = MatcherParams(),
                min_df: int = 1,
                ae_config: Optional[AutoencoderConfig] = None,
                auto_label: bool = False,
                provenance: Optional[dict] = None) -> ClusterModel:
    """Run the full training stage and return the persistable model."""
    if not pairs:
        raise ConfigError("training corpus is empty")
    correct_pool = dedupe_trees([p.correct_tree for p in pairs])
    scripts = compute_training_scripts(pairs, correct_pool, matcher)
    config = fit_distance_config(list(scripts.values()), family, scheme,
                                 min_df, ae_config)
    ordered_ids = [p.pair_id for p in pairs]
    matrix = distance_matrix([scripts[sid].script for sid in ordered_ids],
                             config, item_ids=ordered_ids)
    all_clusters, _ = hac_with_dendrogram(matrix, linkage, cut_threshold)
    kept = filter_clusters(all_clusters, min_cluster_size)
    model = ClusterModel(
        clusters=kept,
        distance_config=config,
        matcher_params=matcher,
        scripts=scripts,
        correct_pool=correct_pool,
        cut_threshold=cut_threshold,
        min_cluster_size=min_cluster_size,
        linkage=linkage,
        unclustered=unclustered_members(all_clusters, kept),
        provenance=provenance or {"corpus_digest": corpus_digest(pairs)},
    )
    if auto_label:
        auto_label_clusters(model.clusters, model.scripts)
    return model
