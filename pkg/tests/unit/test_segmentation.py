from collections import deque

import numpy as np
import pytest

from lidar_track.core.exceptions import ConfigError, ContractViolationError
from lidar_track.core.geometry import PointCloud
from lidar_track.core.segmentation import (
    NOISE,
    DbscanConfig,
    KdTree3,
    build_kdtree,
    dbscan,
    summarize,
)


def _cloud(xyz):
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    return PointCloud(xyz, np.zeros(len(xyz)))


def _run(xyz, eps, min_pts):
    cloud = _cloud(xyz)
    return dbscan(cloud, build_kdtree(cloud), DbscanConfig(eps=eps, min_pts=min_pts))


def _sequential_dbscan(xyz, eps, min_pts):
    """Textbook DBSCAN scanning points in index order."""
    n = len(xyz)
    d2 = ((xyz[:, None, :] - xyz[None, :, :]) ** 2).sum(axis=2)
    neighbours = [np.flatnonzero(d2[i] <= eps * eps) for i in range(n)]
    core = [len(nb) >= min_pts for nb in neighbours]
    labels = np.full(n, NOISE)
    cluster = -1
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        cluster += 1
        labels[i] = cluster
        queue = deque([i])
        while queue:
            p = queue.popleft()
            for q in neighbours[p]:
                if labels[q] == NOISE:
                    labels[q] = cluster
                    if core[q]:
                        queue.append(q)
    return labels


def _blobs(rng, n):
    centres = rng.uniform(-5, 5, size=(rng.integers(1, 5), 3))
    pts = centres[rng.integers(len(centres), size=n)] + rng.normal(0, 0.4, size=(n, 3))
    noise = rng.uniform(-6, 6, size=(n // 10, 3))
    return np.vstack([pts, noise])


def test_config_validation():
    with pytest.raises(ConfigError):
        DbscanConfig(eps=0.0)
    with pytest.raises(ConfigError):
        DbscanConfig(min_pts=0)


def test_empty_tree():
    tree = KdTree3(np.zeros((0, 3)))
    assert len(tree) == 0
    assert tree.query_radius([0, 0, 0], 10.0) == []
    assert tree.pairs_within(1.0).shape == (0, 2)


def test_single_point_query():
    tree = KdTree3(np.array([[1.0, 2.0, 3.0]]))
    assert tree.query_radius([1.0, 2.0, 3.0], 0.1) == [0]


def test_radius_query_matches_linear_scan():
    rng = np.random.default_rng(0)
    xyz = rng.uniform(-10, 10, size=(1000, 3))
    tree = KdTree3(xyz)
    for _ in range(50):
        q = rng.uniform(-10, 10, size=3)
        r = rng.uniform(0.5, 4.0)
        expected = np.flatnonzero(np.linalg.norm(xyz - q, axis=1) <= r).tolist()
        assert tree.query_radius(q, r) == expected


def test_two_blobs():
    rng = np.random.default_rng(1)
    xyz = np.vstack(
        [rng.normal(0, 0.1, size=(20, 3)), rng.normal(0, 0.1, size=(20, 3)) + [5, 0, 0]]
    )
    result = _run(xyz, eps=0.5, min_pts=5)
    assert len(result.clusters) == 2
    assert len(result.noise) == 0
    assert result.clusters[0].count == 20
    np.testing.assert_array_equal(result.clusters[0].point_indices, np.arange(20))


def test_isolated_points_are_noise():
    result = _run([[0, 0, 0], [10, 0, 0], [0, 10, 0]], eps=0.5, min_pts=5)
    assert result.clusters == []
    assert result.noise.tolist() == [0, 1, 2]


def test_large_eps_gives_one_cluster():
    rng = np.random.default_rng(2)
    result = _run(rng.uniform(0, 1, size=(30, 3)), eps=5.0, min_pts=5)
    assert len(result.clusters) == 1
    assert result.clusters[0].count == 30


def test_min_pts_counts_the_point_itself():
    # each point has exactly two neighbours besides itself
    result = _run([[0, 0, 0], [0.1, 0, 0], [0.2, 0, 0]], eps=0.25, min_pts=3)
    assert len(result.clusters) == 1
    result = _run([[0, 0, 0], [0.1, 0, 0], [0.2, 0, 0]], eps=0.25, min_pts=4)
    assert result.clusters == []


def test_border_point_joins_first_cluster():
    # point 4 sits between two dense groups and is core in neither
    left = [[0, 0, 0], [0.05, 0, 0], [0.1, 0, 0], [0.2, 0, 0]]
    right = [[1.1, 0, 0], [1.2, 0, 0], [1.25, 0, 0], [1.3, 0, 0]]
    xyz = np.array(left + [[0.65, 0, 0]] + right, dtype=float)
    result = _run(xyz, eps=0.5, min_pts=4)
    assert len(result.clusters) == 2
    assert result.labels[4] == 0
    assert result.labels.tolist() == [0, 0, 0, 0, 0, 1, 1, 1, 1]


def test_empty_cloud():
    result = _run(np.zeros((0, 3)), eps=0.5, min_pts=3)
    assert result.clusters == []
    assert len(result.labels) == 0


def test_tree_size_mismatch():
    cloud = _cloud([[0, 0, 0], [1, 0, 0]])
    with pytest.raises(ContractViolationError):
        dbscan(cloud, KdTree3(np.zeros((1, 3))), DbscanConfig())


def test_matches_sequential_dbscan():
    rng = np.random.default_rng(42)
    for _ in range(200):
        xyz = _blobs(rng, int(rng.integers(0, 450)))
        eps = float(rng.uniform(0.2, 0.8))
        min_pts = int(rng.integers(2, 12))
        result = _run(xyz, eps, min_pts)
        np.testing.assert_array_equal(result.labels, _sequential_dbscan(xyz, eps, min_pts))


def test_summarize_single_point():
    cluster = summarize([0], _cloud([[1.0, 2.0, 3.0]]))
    np.testing.assert_allclose(cluster.centroid, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(cluster.bbox_min, cluster.bbox_max)


def test_summarize_two_points():
    cluster = summarize([0, 1], _cloud([[0, 0, 0], [2, 0, 0]]), cluster_id=7)
    np.testing.assert_allclose(cluster.centroid, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(cluster.bbox_max, [2.0, 0.0, 0.0])
    assert cluster.cluster_id == 7


def test_summarize_matches_mean():
    rng = np.random.default_rng(5)
    xyz = rng.normal(size=(100, 3))
    cluster = summarize(np.arange(100), _cloud(xyz))
    np.testing.assert_allclose(cluster.centroid, xyz.mean(axis=0), atol=1e-12)


def test_summarize_empty_set():
    with pytest.raises(ContractViolationError):
        summarize([], _cloud([[0, 0, 0]]))
