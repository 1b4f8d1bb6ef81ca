# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Viewpoint Feature Histogram descriptors.

A cluster's geometry becomes a normalized 308-bin histogram: four angular or
distance features of every point relative to the cluster centroid (45 bins
each) followed by the angle between each normal and the viewpoint direction
(128 bins). The histogram is treated as a PDF; its prefix sum is the CDF used
by the maximum-deviation test.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import ContractViolationError, DegenerateInputError
from .utils.config_utils import require

logger = logging.getLogger(__name__)

FEATURE_BINS = 45
VIEWPOINT_BINS = 128
DESCRIPTOR_LENGTH = 4 * FEATURE_BINS + VIEWPOINT_BINS

_FEATURE_RANGES = (
    (-1.0, 1.0),
    (-1.0, 1.0),
    (-np.pi, np.pi),
    (0.0, 1.0),
)


@dataclass(frozen=True)
class DescriptorConfig:
    normal_k: int = 10

    def __post_init__(self):
        require(self.normal_k >= 3, f"normal_k must be >= 3, got {self.normal_k}")


class NormalCloud(NamedTuple):
    normals: np.ndarray
    degenerate: np.ndarray
    k: int


@dataclass(frozen=True, eq=False)
class VfhDescriptor:
    pdf: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        for name in ("pdf", "cdf"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.pdf.shape != self.cdf.shape:
            raise ContractViolationError("pdf and cdf lengths differ")

    @classmethod
    def from_pdf(cls, pdf: Sequence[float] | np.ndarray) -> "VfhDescriptor":
        pdf = np.asarray(pdf, dtype=np.float64)
        return cls(pdf, cdf_of(pdf))

    def __len__(self) -> int:
        return int(self.pdf.shape[0])


def _canonical_order(points: np.ndarray, normals: np.ndarray | None = None) -> np.ndarray:
    keys = [points[:, 2], points[:, 1], points[:, 0]]
    if normals is not None:
        keys = [normals[:, 2], normals[:, 1], normals[:, 0]] + keys
    return np.lexsort(keys)


def estimate_normals(
    points: np.ndarray, k: int, viewpoint: Sequence[float]
) -> NormalCloud:
    """
    Per-point normals from a plane fit over the ``k`` nearest neighbours.

    ``k`` is clamped to the cluster size. Normals point towards ``viewpoint``.
    Where the neighbourhood is collinear the normal is still a unit vector
    orthogonal to the line, and the point is flagged in ``degenerate``.

    Raises:
        DegenerateInputError: with fewer than three points
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    if n < 3:
        raise DegenerateInputError(f"Normal estimation needs >= 3 points, got {n}")
    k = min(max(int(k), 3), n)

    order = _canonical_order(pts)
    sorted_pts = pts[order]
    _, neighbours = cKDTree(sorted_pts).query(sorted_pts, k=k)
    local = sorted_pts[neighbours]
    centred = local - local.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centred, centred) / k
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    normals = eigenvectors[:, :, 0]

    scale = np.maximum(eigenvalues[:, 2], 1e-300)
    degenerate = eigenvalues[:, 1] <= 1e-10 * scale

    towards = np.asarray(viewpoint, dtype=np.float64) - sorted_pts
    flip = np.einsum("ni,ni->n", normals, towards) < 0
    normals[flip] *= -1.0
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    if degenerate.any():
        logger.debug(f"{int(degenerate.sum())}/{n} normals from collinear neighbourhoods")

    out_normals = np.empty_like(normals)
    out_degenerate = np.empty_like(degenerate)
    out_normals[order] = normals
    out_degenerate[order] = degenerate
    return NormalCloud(out_normals, out_degenerate, k)


def cdf_of(pdf: Sequence[float] | np.ndarray) -> np.ndarray:
    """
    Prefix sum of a normalized histogram, scaled so the last value is exactly 1.

    Raises:
        ContractViolationError: on a negative bin or a total that is not 1
    """
    pdf = np.asarray(pdf, dtype=np.float64)
    if pdf.ndim != 1 or pdf.size == 0:
        raise ContractViolationError("pdf must be a non-empty 1-D array")
    if np.any(pdf < 0):
        raise ContractViolationError("pdf has a negative bin")
    total = pdf.sum()
    if abs(total - 1.0) > 1e-9:
        raise ContractViolationError(f"pdf must sum to 1, sums to {total}")
    cdf = np.cumsum(pdf)
    return cdf / cdf[-1]


def compute_vfh(
    points: np.ndarray, normals: np.ndarray, viewpoint: Sequence[float]
) -> VfhDescriptor:
    """
    Build the viewpoint feature histogram of one cluster.

    Args:
        points: (N, 3) cluster points, N >= 3
        normals: (N, 3) unit normals matching ``points``
        viewpoint: sensor origin in the same frame as ``points``

    Returns:
        A ``VfhDescriptor`` of length 308 summing to 1

    Raises:
        DegenerateInputError: with fewer than three points
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    nrm = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 3:
        raise DegenerateInputError(f"VFH needs >= 3 points, got {len(pts)}")
    if nrm.shape != pts.shape:
        raise ContractViolationError("normals must match points one-to-one")

    order = _canonical_order(pts, nrm)
    pts, nrm = pts[order], nrm[order]
    vp = np.asarray(viewpoint, dtype=np.float64)

    centroid = pts.mean(axis=0)
    to_view = vp - centroid
    view_norm = np.linalg.norm(to_view)
    view_dir = to_view / view_norm if view_norm > 0 else np.array([0.0, 0.0, 1.0])

    u = nrm.mean(axis=0)
    u_norm = np.linalg.norm(u)
    u = u / u_norm if u_norm > 1e-12 else view_dir

    d = pts - centroid
    dist = np.linalg.norm(d, axis=1)
    safe = np.where(dist > 0, dist, 1.0)
    d_unit = d / safe[:, None]

    v = np.cross(d_unit, u)
    v_norm = np.linalg.norm(v, axis=1)
    v = np.where(v_norm[:, None] > 1e-12, v / np.maximum(v_norm, 1e-12)[:, None], 0.0)
    w = np.cross(u, v)

    f_alpha = np.einsum("ni,ni->n", v, nrm)
    f_phi = d_unit @ u
    f_theta = np.arctan2(np.einsum("ni,ni->n", w, nrm), nrm @ u)
    max_dist = dist.max()
    f_dist = dist / max_dist if max_dist > 0 else np.zeros_like(dist)

    counts = [
        np.histogram(np.clip(values, lo, hi), bins=FEATURE_BINS, range=(lo, hi))[0]
        for values, (lo, hi) in zip((f_alpha, f_phi, f_theta, f_dist), _FEATURE_RANGES)
    ]
    view_angle = np.arccos(np.clip(nrm @ view_dir, -1.0, 1.0))
    counts.append(np.histogram(view_angle, bins=VIEWPOINT_BINS, range=(0.0, np.pi))[0])

    hist = np.concatenate(counts).astype(np.float64)
    return VfhDescriptor.from_pdf(hist / hist.sum())


def describe(points: np.ndarray, viewpoint: Sequence[float], cfg: DescriptorConfig):
    """Normals then VFH for one cluster."""
    normals = estimate_normals(points, cfg.normal_k, viewpoint)
    return compute_vfh(points, normals.normals, viewpoint)


def _as_pdf(h: VfhDescriptor | Sequence[float] | np.ndarray) -> np.ndarray:
    return h.pdf if isinstance(h, VfhDescriptor) else np.asarray(h, dtype=np.float64)


def chi_squared_distance(
    h1: VfhDescriptor | Sequence[float] | np.ndarray,
    h2: VfhDescriptor | Sequence[float] | np.ndarray,
) -> float:
    """``Σ (h1 − h2)² / (h1 + h2)``, bins with ``h1 + h2 = 0`` contributing 0."""
    a, b = _as_pdf(h1), _as_pdf(h2)
    if a.shape != b.shape:
        raise ContractViolationError(f"Histogram lengths differ: {a.shape} vs {b.shape}")
    total = a + b
    diff = a - b
    terms = np.divide(diff * diff, total, out=np.zeros_like(total), where=total > 0)
    return float(terms.sum())
