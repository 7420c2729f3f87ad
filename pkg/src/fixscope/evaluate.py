"""Splitting, precision-recall analysis, and the hyperparameter sweep.

Precision counts only issued predictions (silence is free); recall charges
every item, including those whose true error type was never clustered
(marked NOVEL). Curves carry the (0, 1) and (1, 0) anchor points and the
area is the trapezoid over recall.
"""
from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .classify import KNN, NEAREST_CLUSTER, ClassifierConfig, classify_script
from .cluster import ClusterModel, distance_matrix, filter_clusters, \
    hac_with_dendrogram, unclustered_members
from .errors import EmptyPredictionSet, KTooLarge, UnlabeledModel
from .pipeline import (auto_label_clusters, compute_training_scripts,
                       corpus_digest, dedupe_trees, fit_distance_config)
from .represent import AutoencoderConfig, EqualityScheme, MetricFamily
from .treediff import MatcherParams, shortest_script
from .treeio import SubmissionPair

NOVEL_LABEL = "__novel__"

DEFAULT_THRESHOLDS = tuple(round(0.05 * i, 2) for i in range(21))


# ---------------------------------------------------------------------------
# Splitting

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    validation_fraction: float = 0.1
    test_fraction: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        fractions = (self.train_fraction, self.validation_fraction,
                     self.test_fraction)
        if any(f < 0 for f in fractions):
            raise ValueError("fractions must be non-negative")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")


def split(corpus: Sequence[SubmissionPair], spec: SplitSpec):
    """Seeded shuffle, then carve validation and test off the tail.

    Rounding rule: validation and test sizes are ceil(fraction * n), with a
    1e-9 slack so exact integers do not round up; train takes the remainder.
    (0.8, 0.1, 0.1) over 1472 pairs therefore gives 1176/148/148.
    """
    spec.validate()
    if not corpus:
        raise ValueError("corpus is empty")
    shuffled = list(corpus)
    random.Random(spec.seed).shuffle(shuffled)
    n = len(shuffled)
    n_val = min(n, _rounded_up(spec.validation_fraction, n))
    n_test = min(n - n_val, _rounded_up(spec.test_fraction, n))
    n_train = n - n_val - n_test
    train = shuffled[:n_train]
    validation = shuffled[n_train:n_train + n_val]
    test = shuffled[n_train + n_val:]
    return train, validation, test


def _rounded_up(fraction: float, n: int) -> int:
    # ceil with slack so exact integer products do not round up
    return math.ceil(fraction * n - 1e-9)


# ---------------------------------------------------------------------------
# PR curves

@dataclass(frozen=True)
class PRCurve:
    points: tuple  # (recall, precision), anchors (0,1) and (1,0) included
    thresholds: tuple  # theta per measured (non-anchor) point
    auc: float

    def measured_points(self) -> list:
        return list(self.points[1:-1])


def trapezoid_auc(points: Sequence[tuple]) -> float:
    """Trapezoidal area under a (recall, precision) polyline."""
    area = 0.0
    for (r1, p1), (r2, p2) in zip(points, points[1:]):
        area += (r2 - r1) * (p1 + p2) / 2.0
    return area


def pr_curve(predictions: Sequence[tuple],
             thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> PRCurve:
    """Curve over (Prediction, true_label) pairs for the given theta grid.

    At each theta a prediction is issued when its label is not Unknown and
    its confidence reaches theta. Precision is correct/issued (1.0 when
    nothing is issued); recall is correct/total.
    """
    if not predictions:
        raise EmptyPredictionSet("no predictions to evaluate")
    total = len(predictions)
    measured = []
    for theta in thresholds:
        issued = [(p, t) for p, t in predictions
                  if not p.is_unknown and p.confidence >= theta]
        correct = sum(1 for p, t in issued if p.label == t)
        precision = correct / len(issued) if issued else 1.0
        recall = correct / total
        measured.append((recall, precision, theta))
    measured.sort(key=lambda m: (m[0], -m[1]))
    points = [(0.0, 1.0)] + [(r, p) for r, p, _ in measured] + [(1.0, 0.0)]
    return PRCurve(points=tuple(points),
                   thresholds=tuple(t for _, _, t in measured),
                   auc=trapezoid_auc(points))


def true_label_for(pair: SubmissionPair, model_labels: set) -> str:
    """Ground truth projected onto the model's label set (else NOVEL)."""
    if pair.ground_truth_label is None:
        raise ValueError(f"pair {pair.pair_id} has no ground-truth label")
    if pair.ground_truth_label in model_labels:
        return pair.ground_truth_label
    return NOVEL_LABEL


# ---------------------------------------------------------------------------
# Sweep

@dataclass(frozen=True)
class SweepConfig:
    family: MetricFamily
    scheme: EqualityScheme
    linkage: str
    cut_threshold: float
    min_cluster_size: int
    method: str
    k: int

    def clustering_key(self):
        return (self.family, self.scheme, self.linkage, self.cut_threshold,
                self.min_cluster_size)

    def to_record(self) -> dict:
        return {
            "family": self.family.value,
            "scheme": self.scheme.value,
            "linkage": self.linkage,
            "cut_threshold": self.cut_threshold,
            "min_cluster_size": self.min_cluster_size,
            "method": self.method,
            "k": self.k,
        }


@dataclass
class SweepGrid:
    families: list = field(default_factory=lambda: list(MetricFamily))
    schemes: list = field(default_factory=lambda: list(EqualityScheme))
    linkages: list = field(default_factory=lambda: ["single", "complete", "average"])
    cut_thresholds: list = field(default_factory=lambda: [0.2, 0.3, 0.4, 0.5])
    min_sizes: list = field(default_factory=lambda: [3, 5])
    methods: list = field(default_factory=lambda: [NEAREST_CLUSTER, KNN])
    k_values: list = field(default_factory=lambda: [1, 3, 5])

    def axes(self) -> tuple:
        return (self.families, self.schemes, self.linkages,
                self.cut_thresholds, self.min_sizes, self.methods,
                self.k_values)

    def total(self) -> int:
        return math.prod(len(axis) for axis in self.axes())

    def clustering_total(self) -> int:
        return math.prod(len(axis) for axis in self.axes()[:5])

    def combinations(self):
        """Deterministic enumeration; nesting order is the axis order."""
        for values in itertools.product(*self.axes()):
            yield SweepConfig(*values)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepGrid":
        grid = cls()
        if "families" in data:
            grid.families = [MetricFamily(v) for v in data["families"]]
        if "schemes" in data:
            grid.schemes = [EqualityScheme(v) for v in data["schemes"]]
        for key in ("linkages", "cut_thresholds", "min_sizes", "methods",
                    "k_values"):
            if key in data:
                setattr(grid, key, list(data[key]))
        return grid


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    validation_pr_auc: float
    wall_time_ms: float
    grid_index: int
    error: Optional[str] = None


@dataclass
class SweepReport:
    results: list  # ranked by validation PR-AUC descending, ties by grid order
    models_trained: int
    split_sizes: tuple


class _SweepWorkspace:
    """Shared, cached intermediate products across grid combinations."""

    def __init__(self, pairs: Sequence[SubmissionPair], split_spec: SplitSpec,
                 matcher: MatcherParams, ae_config: Optional[AutoencoderConfig]):
        self.matcher = matcher
        self.ae_config = ae_config
        self.train, self.validation, self.test = split(pairs, split_spec)
        if not self.train or not self.validation:
            raise ValueError("split left train or validation empty")
        self.digest = corpus_digest(pairs)
        self.pool = dedupe_trees([p.correct_tree for p in self.train])
        self.scripts = compute_training_scripts(self.train, self.pool, matcher)
        self.ordered_ids = [p.pair_id for p in self.train]
        self.val_scripts = [
            (pair, shortest_script(pair.incorrect_tree, self.pool, matcher,
                                   src_ref=pair.pair_id))
            for pair in self.validation
        ]
        self._configs: dict = {}
        self._matrices: dict = {}
        self._models: dict = {}
        self.models_trained = 0

    def metric_config(self, family: MetricFamily, scheme: EqualityScheme):
        key = (family, scheme)
        if key not in self._configs:
            self._configs[key] = fit_distance_config(
                list(self.scripts.values()), family, scheme,
                ae_config=self.ae_config)
        return self._configs[key]

    def matrix(self, family: MetricFamily, scheme: EqualityScheme):
        key = (family, scheme)
        if key not in self._matrices:
            config = self.metric_config(family, scheme)
            self._matrices[key] = distance_matrix(
                [self.scripts[sid].script for sid in self.ordered_ids],
                config, item_ids=list(self.ordered_ids))
        return self._matrices[key]

    def model(self, config: SweepConfig) -> ClusterModel:
        key = config.clustering_key()
        if key not in self._models:
            metric_config = self.metric_config(config.family, config.scheme)
            matrix = self.matrix(config.family, config.scheme)
            all_clusters, _ = hac_with_dendrogram(matrix, config.linkage,
                                                  config.cut_threshold)
            kept = filter_clusters(all_clusters, config.min_cluster_size)
            model = ClusterModel(
                clusters=kept,
                distance_config=metric_config,
                matcher_params=self.matcher,
                scripts=self.scripts,
                correct_pool=self.pool,
                cut_threshold=config.cut_threshold,
                min_cluster_size=config.min_cluster_size,
                linkage=config.linkage,
                unclustered=unclustered_members(all_clusters, kept),
                provenance={"corpus_digest": self.digest,
                            "sweep_config": config.to_record()},
            )
            auto_label_clusters(model.clusters, model.scripts)
            self._models[key] = model
            self.models_trained += 1
        return self._models[key]


def _curve_predictions(scored_pairs, model: ClusterModel,
                       config: ClassifierConfig) -> list:
    """(Prediction, true_label) rows with confidence left unthresholded so
    pr_curve can sweep theta; the distance rejection still applies."""
    labels = {c.label for c in model.labeled_clusters()}
    rows = []
    for pair, script in scored_pairs:
        prediction = classify_script(script, model, config)
        rows.append((prediction, true_label_for(pair, labels)))
    return rows


def sweep(pairs: Sequence[SubmissionPair], grid: SweepGrid,
          budget: Optional[int] = None,
          split_spec: SplitSpec = SplitSpec(),
          matcher: MatcherParams = MatcherParams(),
          ae_config: Optional[AutoencoderConfig] = None,
          thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
          distance_threshold: float = 0.5) -> SweepReport:
    """Train a model per clustering combination and rank every grid
    combination by validation PR-AUC (ties keep grid order).

    Combinations whose model ends up unusable (nothing labeled, or k larger
    than the electorate) are kept in the ranking with PR-AUC 0 and an error
    note, so the ranking stays a permutation of the grid.
    """
    workspace = _SweepWorkspace(pairs, split_spec, matcher, ae_config)
    combos = grid.combinations()
    if budget is not None:
        combos = itertools.islice(combos, budget)
    results = []
    for index, config in enumerate(combos):
        started = time.perf_counter()
        error = None
        auc = 0.0
        try:
            model = workspace.model(config)
            classifier = ClassifierConfig(
                method=config.method, k=config.k,
                confidence_threshold=0.0,
                distance_threshold=distance_threshold)
            rows = _curve_predictions(workspace.val_scripts, model, classifier)
            auc = pr_curve(rows, thresholds).auc
        except (UnlabeledModel, KTooLarge) as exc:
            error = f"{type(exc).__name__}: {exc}"
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        results.append(SweepResult(config=config, validation_pr_auc=auc,
                                   wall_time_ms=elapsed_ms, grid_index=index,
                                   error=error))
    results.sort(key=lambda r: (-r.validation_pr_auc, r.grid_index))
    return SweepReport(results=results,
                       models_trained=workspace.models_trained,
                       split_sizes=(len(workspace.train),
                                    len(workspace.validation),
                                    len(workspace.test)))


def best_on_test(top_config: SweepConfig, pairs: Sequence[SubmissionPair],
                 split_spec: SplitSpec = SplitSpec(),
                 matcher: MatcherParams = MatcherParams(),
                 ae_config: Optional[AutoencoderConfig] = None,
                 thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                 distance_threshold: float = 0.5):
    """Retrain the winning configuration and measure it once on the test
    split. Returns (PRCurve, ClusterModel)."""
    workspace = _SweepWorkspace(pairs, split_spec, matcher, ae_config)
    model = workspace.model(top_config)
    test_scripts = [
        (pair, shortest_script(pair.incorrect_tree, workspace.pool,
                               matcher, src_ref=pair.pair_id))
        for pair in workspace.test
    ]
    if not test_scripts:
        raise ValueError("test split is empty")
    classifier = ClassifierConfig(method=top_config.method, k=top_config.k,
                                  confidence_threshold=0.0,
                                  distance_threshold=distance_threshold)
    rows = _curve_predictions(test_scripts, model, classifier)
    return pr_curve(rows, thresholds), model
