"""Assign an error-type label (or Unknown) to a new incorrect submission.

The submission is diffed against the model's correct-solution pool, the
shortest script is kept, and either the nearest labeled cluster or weighted
kNN over labeled training scripts decides the label. If the nearest evidence
is farther than the distance threshold, or the confidence falls below the
confidence threshold, the prediction is rejected as Unknown.
"""
from __future__ import annotations

from dataclasses import dataclass

from .cluster import ClusterModel
from .errors import KTooLarge, UnlabeledModel
from .represent import script_distance
from .tree import AstTree
from .treediff import EditScript, shortest_script

UNKNOWN = "unknown"

NEAREST_CLUSTER = "nearest_cluster"
KNN = "knn"


@dataclass(frozen=True)
class ClassifierConfig:
    method: str = NEAREST_CLUSTER
    k: int = 5
    vote_epsilon: float = 0.001
    confidence_threshold: float = 0.7
    distance_threshold: float = 0.5
    # point-to-cluster distance: min over members (default) or to the medoid
    cluster_distance: str = "min"

    def validate(self) -> None:
        if self.method not in (NEAREST_CLUSTER, KNN):
            raise ValueError(f"unknown method {self.method!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.vote_epsilon <= 0:
            raise ValueError("vote_epsilon must be positive")


@dataclass(frozen=True)
class Prediction:
    label: str  # an error-type label, or UNKNOWN
    confidence: float
    nearest_distance: float
    method: str
    evidence: tuple = ()  # (script_id, distance, cluster_id) consulted

    @property
    def is_unknown(self) -> bool:
        return self.label == UNKNOWN

    def to_record(self) -> dict:
        return {
            "label": self.label,
            "confidence": self.confidence,
            "nearest_distance": self.nearest_distance,
            "method": self.method,
            "evidence": [
                {"script_id": sid, "distance": d, "cluster_id": cid}
                for sid, d, cid in self.evidence
            ],
        }


def _require_labels(model: ClusterModel) -> list:
    labeled = model.labeled_clusters()
    if not labeled:
        raise UnlabeledModel("model has no labeled cluster")
    return labeled


def nearest_cluster(script: EditScript, model: ClusterModel,
                    config: ClassifierConfig = ClassifierConfig()) -> Prediction:
    """Pick the labeled cluster at minimum point-to-cluster distance.

    Distance to a cluster is the minimum script distance to any member
    (or to the medoid when configured); ties go to the smallest cluster id.
    Confidence is 1 - nearest distance.
    """
    labeled = _require_labels(model)
    best_cluster = None
    best_d = None
    evidence = []
    for cluster in sorted(labeled, key=lambda c: c.cluster_id):
        if config.cluster_distance == "medoid":
            member_ids = [cluster.medoid_id]
        else:
            member_ids = cluster.member_script_ids
        d_cluster = None
        d_evidence = None
        for sid in member_ids:
            d = script_distance(script, model.scripts[sid].script,
                                model.distance_config)
            if d_cluster is None or d < d_cluster:
                d_cluster = d
                d_evidence = (sid, d, cluster.cluster_id)
        evidence.append(d_evidence)
        if best_d is None or d_cluster < best_d:
            best_d = d_cluster
            best_cluster = cluster
    prediction = Prediction(
        label=best_cluster.label,
        confidence=1.0 - best_d,
        nearest_distance=best_d,
        method=NEAREST_CLUSTER,
        evidence=tuple(evidence),
    )
    return _reject_if_unsure(prediction, config)


def knn_vote(script: EditScript, model: ClusterModel,
             config: ClassifierConfig = ClassifierConfig()) -> Prediction:
    """Weighted vote of the k nearest labeled training scripts.

    Each neighbor votes 1/(distance + epsilon) for its cluster's label;
    neighbor ties break by script id, label ties lexicographically.
    Confidence is the winning weight share.
    """
    _require_labels(model)
    electorate = []
    for cluster in model.labeled_clusters():
        for sid in cluster.member_script_ids:
            electorate.append((sid, cluster))
    if config.k > len(electorate):
        raise KTooLarge(
            f"k={config.k} but only {len(electorate)} labeled scripts")
    scored = []
    for sid, cluster in electorate:
        d = script_distance(script, model.scripts[sid].script,
                            model.distance_config)
        scored.append((d, sid, cluster))
    scored.sort(key=lambda t: (t[0], t[1]))
    neighbors = scored[:config.k]
    weights: dict[str, float] = {}
    for d, sid, cluster in neighbors:
        weights[cluster.label] = weights.get(cluster.label, 0.0) \
            + 1.0 / (d + config.vote_epsilon)
    winner = min(weights, key=lambda lab: (-weights[lab], lab))
    total = sum(weights.values())
    prediction = Prediction(
        label=winner,
        confidence=weights[winner] / total,
        nearest_distance=neighbors[0][0],
        method=KNN,
        evidence=tuple((sid, d, cluster.cluster_id)
                       for d, sid, cluster in neighbors),
    )
    return _reject_if_unsure(prediction, config)


def _reject_if_unsure(prediction: Prediction, config: ClassifierConfig) -> Prediction:
    """Unknown when the evidence is too far or the confidence too low; the
    measured confidence and distance are kept on the rejected prediction."""
    if prediction.nearest_distance > config.distance_threshold \
            or prediction.confidence < config.confidence_threshold:
        return Prediction(
            label=UNKNOWN,
            confidence=prediction.confidence,
            nearest_distance=prediction.nearest_distance,
            method=prediction.method,
            evidence=prediction.evidence,
        )
    return prediction


def classify_script(script: EditScript, model: ClusterModel,
                    config: ClassifierConfig = ClassifierConfig()) -> Prediction:
    config.validate()
    if config.method == KNN:
        return knn_vote(script, model, config)
    return nearest_cluster(script, model, config)


def classify(incorrect: AstTree, model: ClusterModel,
             config: ClassifierConfig = ClassifierConfig()) -> Prediction:
    """Diff against the model's correct pool, keep the shortest script, and
    classify it."""
    _require_labels(model)
    script = shortest_script(incorrect, model.correct_pool, model.matcher_params)
    return classify_script(script, model, config)
