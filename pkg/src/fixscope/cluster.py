"""Hierarchical agglomerative clustering of edit scripts and the cluster model.

Linkage distances are maintained with Lance-Williams updates (single: min,
complete: max, average: size-weighted mean). Merging always takes the pair of
active clusters at minimum distance, ties broken by the smallest then
second-smallest cluster id, and stops once the minimum exceeds the cut
threshold. Leaves are clusters 0..n-1; merge k creates cluster n+k.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import UnknownCluster
from .represent import DistanceConfig, script_distance
from .tree import AstTree
from .treediff import EditScript, MatcherParams

LINKAGES = ("single", "complete", "average")


@dataclass
class DistanceMatrix:
    """Condensed pairwise distances over n items (upper triangle, row-major)."""

    n: int
    values: np.ndarray
    item_ids: list[str]

    def get(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if i > j:
            i, j = j, i
        return float(self.values[self._offset(i, j)])

    def _offset(self, i: int, j: int) -> int:
        return i * self.n - i * (i + 1) // 2 + (j - i - 1)

    def square(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        k = 0
        for i in range(self.n):
            for j in range(i + 1, self.n):
                out[i, j] = out[j, i] = self.values[k]
                k += 1
        return out


def distance_matrix(scripts: Sequence[EditScript], config: DistanceConfig,
                    item_ids: Optional[list[str]] = None) -> DistanceMatrix:
    if not scripts:
        raise ValueError("scripts must be nonempty")
    n = len(scripts)
    if item_ids is None:
        item_ids = [str(i) for i in range(n)]
    values = np.zeros(n * (n - 1) // 2)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            values[k] = script_distance(scripts[i], scripts[j], config)
            k += 1
    return DistanceMatrix(n=n, values=values, item_ids=item_ids)


@dataclass(frozen=True)
class Merge:
    cluster_a: int
    cluster_b: int
    merge_distance: float
    new_cluster_id: int


@dataclass(frozen=True)
class Dendrogram:
    merges: tuple[Merge, ...]
    n_leaves: int


@dataclass
class Cluster:
    cluster_id: int
    member_script_ids: list[str]
    label: Optional[str] = None
    medoid_id: Optional[str] = None

    @property
    def size(self) -> int:
        return len(self.member_script_ids)


def hac(matrix: DistanceMatrix, linkage: str = "average",
        cut_threshold: float = 0.3) -> list[Cluster]:
    clusters, _ = hac_with_dendrogram(matrix, linkage, cut_threshold)
    return clusters


def hac_with_dendrogram(matrix: DistanceMatrix, linkage: str,
                        cut_threshold: float) -> tuple[list[Cluster], Dendrogram]:
    """Agglomerate until the minimum linkage distance exceeds cut_threshold.

    Returned clusters are renumbered 0..k-1 ordered by their smallest member
    index; members stay in original item order and carry their medoid.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}")
    if not (0.0 <= cut_threshold <= 1.0):
        raise ValueError("cut_threshold must be in [0, 1]")
    n = matrix.n
    merges: list[Merge] = []
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    if n > 1:
        # slot c holds cluster id c; merge k creates slot/id n+k
        dist = np.full((2 * n - 1, 2 * n - 1), np.inf)
        square = matrix.square()
        dist[:n, :n] = square
        next_id = n
        active = list(range(n))  # kept sorted; new ids are always largest
        while len(active) > 1:
            idx = np.array(active)
            sub = dist[np.ix_(idx, idx)].copy()
            sub[np.tril_indices(len(active))] = np.inf
            flat = int(np.argmin(sub))  # first occurrence = smallest id pair
            i, j = divmod(flat, len(active))
            best_d = float(sub[i, j])
            if best_d > cut_threshold:
                break
            a, b = active[i], active[j]
            size_a, size_b = len(members[a]), len(members[b])
            new_id = next_id
            next_id += 1
            merges.append(Merge(a, b, best_d, new_id))
            others = np.array([c for c in active if c not in (a, b)], dtype=int)
            if len(others):
                da = dist[a, others]
                db = dist[b, others]
                if linkage == "single":
                    new_row = np.minimum(da, db)
                elif linkage == "complete":
                    new_row = np.maximum(da, db)
                else:
                    new_row = (size_a * da + size_b * db) / (size_a + size_b)
                dist[new_id, others] = new_row
                dist[others, new_id] = new_row
            members[new_id] = members.pop(a) + members.pop(b)
            active = [c for c in active if c not in (a, b)] + [new_id]

    active_groups = sorted(members.values(), key=min)
    clusters = []
    for cid, idx_members in enumerate(active_groups):
        ordered = sorted(idx_members)
        cluster = Cluster(
            cluster_id=cid,
            member_script_ids=[matrix.item_ids[i] for i in ordered],
        )
        cluster.medoid_id = _medoid_of(ordered, matrix)
        clusters.append(cluster)
    return clusters, Dendrogram(merges=tuple(merges), n_leaves=n)


def _medoid_of(member_indices: list[int], matrix: DistanceMatrix) -> str:
    best_idx = None
    best_sum = None
    for i in member_indices:
        total = sum(matrix.get(i, j) for j in member_indices if j != i)
        if best_sum is None or total < best_sum or \
                (total == best_sum and i < best_idx):
            best_sum = total
            best_idx = i
    return matrix.item_ids[best_idx]


def compute_medoid(cluster: Cluster, matrix: DistanceMatrix) -> str:
    """Member minimizing summed distance to the others; ties to smallest id."""
    index_of = {sid: i for i, sid in enumerate(matrix.item_ids)}
    indices = sorted(index_of[sid] for sid in cluster.member_script_ids)
    return _medoid_of(indices, matrix)


def filter_clusters(clusters: list[Cluster], min_size: int) -> list[Cluster]:
    """Drop clusters with fewer than min_size members, order preserved."""
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    return [c for c in clusters if c.size >= min_size]


def unclustered_members(before: list[Cluster], after: list[Cluster]) -> list[str]:
    kept = {id(c) for c in after}
    out: list[str] = []
    for c in before:
        if id(c) not in kept:
            out.extend(c.member_script_ids)
    return out


# ---------------------------------------------------------------------------
# The trained model

@dataclass
class TrainingScript:
    """One training edit script plus the provenance the labeling UI shows."""

    script_id: str
    pair_id: str
    problem_id: str
    script: EditScript
    incorrect_src: Optional[str] = None
    correct_src: Optional[str] = None
    ground_truth_label: Optional[str] = None


@dataclass
class ClusterModel:
    clusters: list[Cluster]
    distance_config: DistanceConfig
    matcher_params: MatcherParams
    scripts: dict  # script_id -> TrainingScript
    correct_pool: list[AstTree]
    cut_threshold: float
    min_cluster_size: int
    linkage: str = "average"
    unclustered: list[str] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def cluster_by_id(self, cluster_id: int) -> Cluster:
        for c in self.clusters:
            if c.cluster_id == cluster_id:
                return c
        raise UnknownCluster(f"no cluster with id {cluster_id}")

    def labeled_clusters(self) -> list[Cluster]:
        return [c for c in self.clusters if c.label]

    def cluster_of_script(self, script_id: str) -> Optional[Cluster]:
        for c in self.clusters:
            if script_id in c.member_script_ids:
                return c
        return None


def assign_label(model: ClusterModel, cluster_id: int, label: str) -> ClusterModel:
    """Set (or clear, with an empty string) a cluster's expert label."""
    cluster = model.cluster_by_id(cluster_id)
    cluster.label = label if label else None
    return model
