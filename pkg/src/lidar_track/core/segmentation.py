# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
KD-tree accelerated DBSCAN over the non-ground world-frame cloud.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .exceptions import ContractViolationError
from .geometry import PointCloud
from .utils.config_utils import require

logger = logging.getLogger(__name__)

NOISE = -1


@dataclass(frozen=True)
class DbscanConfig:
    eps: float = 0.5
    min_pts: int = 10

    def __post_init__(self):
        require(self.eps > 0, f"eps must be > 0, got {self.eps}")
        require(self.min_pts >= 1, f"min_pts must be >= 1, got {self.min_pts}")


class KdTree3:
    """Immutable 3D index; radius queries are inclusive and return sorted indices."""

    def __init__(self, xyz: np.ndarray):
        self.xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        self._tree = cKDTree(self.xyz) if len(self.xyz) else None

    def __len__(self) -> int:
        return len(self.xyz)

    def query_radius(self, point: Sequence[float], radius: float) -> List[int]:
        if self._tree is None:
            return []
        return sorted(self._tree.query_ball_point(np.asarray(point, dtype=float), radius))

    def pairs_within(self, radius: float) -> np.ndarray:
        """All index pairs ``(i, j)``, ``i < j``, at distance ``<= radius``."""
        if self._tree is None:
            return np.zeros((0, 2), dtype=np.int64)
        pairs = self._tree.query_pairs(radius, output_type="ndarray")
        return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def build_kdtree(cloud: PointCloud) -> KdTree3:
    return KdTree3(cloud.xyz)


@dataclass(frozen=True, eq=False)
class ObjectCluster:
    cluster_id: int
    point_indices: np.ndarray
    xyz: np.ndarray
    centroid: np.ndarray
    bbox_min: np.ndarray
    bbox_max: np.ndarray

    @property
    def count(self) -> int:
        return int(len(self.point_indices))


class DbscanResult(NamedTuple):
    clusters: List[ObjectCluster]
    labels: np.ndarray
    noise: np.ndarray


def summarize(
    indices: Sequence[int] | np.ndarray, cloud: PointCloud, cluster_id: int = 0
) -> ObjectCluster:
    """Centroid and axis-aligned box of the points ``indices`` of ``cloud``."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ContractViolationError("Cannot summarize an empty cluster")
    xyz = cloud.xyz[idx]
    return ObjectCluster(
        cluster_id=cluster_id,
        point_indices=idx,
        xyz=xyz,
        centroid=xyz.mean(axis=0),
        bbox_min=xyz.min(axis=0),
        bbox_max=xyz.max(axis=0),
    )


def dbscan(cloud: PointCloud, tree: KdTree3, cfg: DbscanConfig) -> DbscanResult:
    """
    Density-based clustering with sequential-scan semantics.

    A point is core when at least ``min_pts`` points, itself included, lie
    within ``eps``. Clusters are the connected components of core points;
    they are numbered by their lowest core index, which is the order a
    sequential scan would discover them. A border point joins the
    lowest-numbered cluster it touches, i.e. the first one to claim it.
    """
    n = len(cloud)
    if len(tree) != n:
        raise ContractViolationError(f"Tree indexes {len(tree)} points, cloud has {n}")
    labels = np.full(n, NOISE, dtype=np.int64)
    if n == 0:
        return DbscanResult([], labels, np.zeros(0, dtype=np.int64))

    pairs = tree.pairs_within(cfg.eps)
    a, b = pairs[:, 0], pairs[:, 1]
    counts = np.bincount(pairs.ravel(), minlength=n) + 1
    core = counts >= cfg.min_pts

    core_idx = np.flatnonzero(core)
    if core_idx.size:
        linked = core[a] & core[b]
        graph = coo_matrix(
            (np.ones(int(linked.sum())), (a[linked], b[linked])), shape=(n, n)
        )
        _, component = connected_components(graph, directed=False)
        core_component = component[core_idx]
        uniq, first = np.unique(core_component, return_index=True)
        rank = np.empty(component.max() + 1, dtype=np.int64)
        rank[uniq[np.argsort(first)]] = np.arange(len(uniq))
        labels[core_idx] = rank[core_component]

        a_claims = core[a] & ~core[b]
        b_claims = core[b] & ~core[a]
        border = np.concatenate([b[a_claims], a[b_claims]])
        claim = np.concatenate([labels[a[a_claims]], labels[b[b_claims]]])
        best = np.full(n, np.iinfo(np.int64).max)
        np.minimum.at(best, border, claim)
        claimed = ~core & (best != np.iinfo(np.int64).max)
        labels[claimed] = best[claimed]

    clusters = [
        summarize(np.flatnonzero(labels == k), cloud, cluster_id=int(k))
        for k in range(int(labels.max()) + 1)
    ]
    noise = np.flatnonzero(labels == NOISE)
    logger.debug(f"DBSCAN: {len(clusters)} clusters, {len(noise)} noise of {n} points")
    return DbscanResult(clusters, labels, noise)
