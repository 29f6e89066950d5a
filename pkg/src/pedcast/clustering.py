"""Seeded k-means over trajectory endpoints plus minimum-count merging.

Clusters are identified by their original seed index forever; merging a
cluster redirects its id to the survivor via ``merge_map`` and re-weights the
survivor's centroid. Downstream training uses dense labels in [0, K) over the
surviving clusters, in ascending original-id order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import ResampledTrajectory
from .errors import ComputeError, DataError
from .stats import MIN_EXPECTED, ContingencyTable, build_contingency, expected_counts


@dataclass
class ClusterModel:
    """Destination clusters: one centroid slot per original seed."""

    centroids: np.ndarray  # (K_original, 2); merged-away slots are stale
    merge_map: dict[int, int] = field(default_factory=dict)  # orig id -> survivor orig id
    empty: frozenset[int] = frozenset()  # clusters that went empty during fitting

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2 or self.centroids.shape[1] != 2:
            raise DataError("centroids must be (K, 2)")
        if not np.all(np.isfinite(self.centroids)):
            raise DataError("centroids must be finite")
        if not self.merge_map:
            self.merge_map = {k: k for k in range(len(self.centroids))}
        for k, v in self.merge_map.items():
            if self.merge_map.get(v) != v:
                raise DataError(f"merge_map not idempotent at {k} -> {v}")

    @property
    def surviving(self) -> list[int]:
        return sorted(set(self.merge_map.values()))

    @property
    def K(self) -> int:
        return len(self.surviving)

    def dense_label(self, original_id: int) -> int:
        """Dense label in [0, K) of the survivor that absorbed ``original_id``."""
        return self.surviving.index(self.merge_map[original_id])

    def surviving_centroids(self) -> np.ndarray:
        return self.centroids[self.surviving]

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": 1,
                "K": self.K,
                "centroids": [[float(x), float(y)] for x, y in self.centroids],
                "merge_map": {str(k): v for k, v in sorted(self.merge_map.items())},
                "empty": sorted(self.empty),
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ClusterModel":
        obj = json.loads(text)
        return cls(
            np.asarray(obj["centroids"], dtype=np.float64),
            {int(k): int(v) for k, v in obj["merge_map"].items()},
            frozenset(obj.get("empty", [])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "ClusterModel":
        return cls.from_json(Path(path).read_text())


@dataclass
class LabeledDataset:
    """Resampled trajectories with dense destination labels in [0, K)."""

    trajectories: list[ResampledTrajectory]
    labels: np.ndarray  # (N,) int
    K: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != len(self.trajectories):
            raise DataError("labels/trajectories length mismatch")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.K):
            raise DataError("label out of range")

    def __len__(self) -> int:
        return len(self.trajectories)


def kmeans_endpoints(
    endpoints: np.ndarray,
    init_centroids: np.ndarray,
    max_iter: int = 100,
    tol: float = 1e-9,
) -> ClusterModel:
    """Lloyd iterations from user-supplied seed centroids.

    A cluster that loses all members keeps its previous centroid and is
    flagged; the minimum-count merge downstream will absorb it.
    """
    endpoints = np.asarray(endpoints, dtype=np.float64)
    centroids = np.array(init_centroids, dtype=np.float64, copy=True)
    if endpoints.ndim != 2 or endpoints.shape[1] != 2 or len(endpoints) == 0:
        raise DataError("endpoints must be a non-empty (N, 2) array")
    K = len(centroids)
    if K < 2:
        raise DataError("need at least 2 init centroids")
    if len(np.unique(centroids, axis=0)) != K:
        raise DataError("init centroids must be distinct")

    empty: set[int] = set()
    for _ in range(max_iter):
        labels = _nearest(endpoints, centroids)
        moved = 0.0
        for k in range(K):
            members = endpoints[labels == k]
            if len(members) == 0:
                empty.add(k)
                continue
            new_c = members.mean(axis=0)
            moved = max(moved, float(np.linalg.norm(new_c - centroids[k])))
            centroids[k] = new_c
        if moved < tol:
            break
    return ClusterModel(centroids, empty=frozenset(empty))


def _nearest(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Index of the closest centroid per point; ties go to the lowest index."""
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def kmeans_objective(endpoints: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of squared distances from each point to its nearest centroid."""
    d2 = ((endpoints[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).sum())


def assign_label(model: ClusterModel, endpoint: np.ndarray) -> int:
    """Dense label of the surviving centroid nearest to ``endpoint``."""
    return int(assign_labels(model, np.asarray(endpoint, dtype=np.float64)[None, :])[0])


def assign_labels(model: ClusterModel, endpoints: np.ndarray) -> np.ndarray:
    """Vectorized nearest-surviving-centroid labels, ties to lowest id."""
    return _nearest(np.asarray(endpoints, dtype=np.float64), model.surviving_centroids())


def merge_undersampled(model: ClusterModel, table: ContingencyTable) -> ClusterModel:
    """Merge clusters whose expected contingency counts fall below the
    minimum, worst violator first, into the nearest surviving centroid.

    ``table`` rows must align with the model's surviving clusters in dense
    order. The merged centroid is the count-weighted mean of the pair.
    Raises when the rule cannot be satisfied without dropping below K=2.
    """
    surviving = model.surviving
    if table.counts.shape[0] != len(surviving):
        raise DataError(
            f"table has {table.counts.shape[0]} rows but model has "
            f"{len(surviving)} surviving clusters"
        )
    counts = table.counts.copy()
    ids = list(surviving)  # original id per row
    centroids = model.centroids.copy()
    weights = counts.sum(axis=1).astype(np.float64)
    merge_map = dict(model.merge_map)

    while True:
        current = ContingencyTable(counts)
        e = expected_counts(current)
        row_min = e.min(axis=1)
        violators = np.flatnonzero(row_min < MIN_EXPECTED)
        if violators.size == 0:
            break
        if len(ids) <= 2:
            bad = [
                (ids[i], c, float(e[i, c]))
                for i in violators
                for c in np.flatnonzero(e[i] < MIN_EXPECTED)
            ]
            raise ComputeError(
                "cannot satisfy the minimum expected-count rule at K=2; "
                f"offending (cluster, condition, expected) cells: {bad}"
            )
        worst = int(violators[np.argmin(row_min[violators])])
        others = [i for i in range(len(ids)) if i != worst]
        d2 = ((centroids[[ids[i] for i in others]] - centroids[ids[worst]]) ** 2).sum(axis=1)
        target = others[int(np.argmin(d2))]

        w_sum = weights[worst] + weights[target]
        if w_sum > 0:
            centroids[ids[target]] = (
                weights[worst] * centroids[ids[worst]]
                + weights[target] * centroids[ids[target]]
            ) / w_sum
        else:
            centroids[ids[target]] = 0.5 * (centroids[ids[worst]] + centroids[ids[target]])
        weights[target] = w_sum
        counts[target] += counts[worst]
        absorbed, survivor = ids[worst], ids[target]
        for k, v in merge_map.items():
            if v == absorbed:
                merge_map[k] = survivor
        counts = np.delete(counts, worst, axis=0)
        weights = np.delete(weights, worst)
        del ids[worst]

    return ClusterModel(centroids, merge_map, model.empty)


def cluster_and_merge(
    rts: Sequence[ResampledTrajectory],
    init_centroids: np.ndarray,
    n_conditions: int,
    c_d: int,
    drop_same_origin_dest: bool = True,
) -> tuple[ClusterModel, LabeledDataset, ContingencyTable, ContingencyTable]:
    """End-to-end clustering: k-means on endpoints, same-origin/destination
    drop, minimum-expected-count merge, final labels.

    Returns (model, labeled dataset, pre-merge table, post-merge table).
    """
    endpoints = np.stack([rt.points[-1] for rt in rts])
    fitted = kmeans_endpoints(endpoints, init_centroids)
    if drop_same_origin_dest:
        starts = np.stack([rt.points[0] for rt in rts])
        keep = assign_labels(fitted, starts) != assign_labels(fitted, endpoints)
        rts = [rt for rt, k in zip(rts, keep) if k]
        if not rts:
            raise DataError("all trajectories start and end in the same cluster")
        endpoints = endpoints[keep]
    conds = []
    for rt in rts:
        if rt.condition is None:
            raise DataError(f"trajectory {rt.ped_id} has no condition label")
        conds.append(rt.condition.combined(c_d))
    labels0 = assign_labels(fitted, endpoints)
    table_pre = build_contingency(labels0, conds, fitted.K, n_conditions)
    model = merge_undersampled(fitted, table_pre)
    dataset = build_labeled_dataset(model, rts, drop_same_origin_dest=False)
    table_post = build_contingency(dataset.labels, conds, model.K, n_conditions)
    return model, dataset, table_pre, table_post


def build_labeled_dataset(
    model: ClusterModel,
    rts: Sequence[ResampledTrajectory],
    drop_same_origin_dest: bool = True,
) -> LabeledDataset:
    """Label each trajectory by its final point's cluster; optionally drop
    trajectories that start and end in the same cluster."""
    kept: list[ResampledTrajectory] = []
    labels: list[int] = []
    for rt in rts:
        dest = assign_label(model, rt.points[-1])
        if drop_same_origin_dest and assign_label(model, rt.points[0]) == dest:
            continue
        kept.append(rt)
        labels.append(dest)
    return LabeledDataset(kept, np.asarray(labels, dtype=np.int64), model.K)
