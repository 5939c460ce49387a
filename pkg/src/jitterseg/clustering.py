"""Affinity construction and spectral clustering of pre-shapes.

The affinity between two trajectories is the exponentiated negative
Procrustes distance between their pre-shapes: trajectories that move
together sit close in shape space and get affinity near 1. Clustering
uses the normalized symmetric Laplacian, the eigenvectors of its m
smallest eigenvalues, row normalization, and a deterministic seeded
k-means.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ClusterCollapse, InvalidParameter, ShapeMismatch
from .shapes import PreShape, procrustes_distance

DEFAULT_OMEGA = 0.02

KMEANS_MAX_ITERS = 100
KMEANS_RESTARTS = 5


@dataclass(frozen=True)
class AffinityMatrix:
    """K x K symmetric matrix of exponentiated negative Procrustes distances."""

    values: np.ndarray
    omega: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("values must be a square matrix")
        if self.omega <= 0:
            raise InvalidParameter("omega must be > 0")
        if np.max(np.abs(v - v.T)) > 1e-12:
            raise ValueError("affinity matrix is not symmetric")
        if not np.all(np.diag(v) == 1.0):
            raise ValueError("affinity diagonal must be 1")
        if np.any(v <= 0.0) or np.any(v > 1.0):
            raise ValueError("affinities must lie in (0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster index per input shape; every index in {0..m-1} occurs."""

    labels: tuple[int, ...]
    m: int

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        present = set(labels)
        if not present <= set(range(self.m)):
            raise ValueError("labels outside {0..m-1}")
        if present != set(range(self.m)):
            raise ValueError("some cluster is empty")
        object.__setattr__(self, "labels", labels)

    def members(self, cluster: int) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == cluster]


def build_affinity(shapes: Sequence[PreShape], omega: float = DEFAULT_OMEGA) -> AffinityMatrix:
    """Pairwise affinity exp(-d_proc(i, j) / omega) between pre-shapes.

    The matrix is exactly symmetric (each pair computed once) with unit
    diagonal.
    """
    shapes = list(shapes)
    if len(shapes) < 2:
        raise InvalidParameter("need at least 2 shapes")
    if omega <= 0:
        raise InvalidParameter("omega must be > 0")
    n = shapes[0].n_frames
    for s in shapes:
        if s.n_frames != n:
            raise ShapeMismatch(f"frame counts differ: {s.n_frames} vs {n}")
    k = len(shapes)
    values = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            a = np.exp(-procrustes_distance(shapes[i], shapes[j]) / omega)
            values[i, j] = a
            values[j, i] = a
    return AffinityMatrix(values, omega)


def _spectral_embedding(values: np.ndarray, m: int) -> np.ndarray:
    """Row-normalized eigenvectors of the m smallest Laplacian eigenvalues."""
    degrees = values.sum(axis=1)
    d_isqrt = 1.0 / np.sqrt(degrees)
    lap = np.eye(len(values)) - d_isqrt[:, None] * values * d_isqrt[None, :]
    lap = (lap + lap.T) / 2.0  # scrub rounding asymmetry before eigh
    _, vecs = np.linalg.eigh(lap)
    emb = vecs[:, :m].copy()
    # Eigenvector signs are arbitrary; canonicalize so the first nonzero
    # component of each column is positive.
    for col in range(m):
        for x in emb[:, col]:
            if x != 0.0:
                if x < 0.0:
                    emb[:, col] = -emb[:, col]
                break
    norms = np.linalg.norm(emb, axis=1)
    nonzero = norms > 0.0
    emb[nonzero] /= norms[nonzero, None]
    return emb


def _farthest_first_centers(points: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded first center, then repeatedly the point farthest from the set."""
    chosen = [int(rng.integers(len(points)))]
    dist = np.linalg.norm(points - points[chosen[0]], axis=1)
    while len(chosen) < m:
        nxt = int(np.argmax(dist))  # ties resolve to the lowest index
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return points[chosen].copy()


def _kmeans_once(points: np.ndarray, m: int, seed: int) -> np.ndarray | None:
    """One Lloyd run; None when some cluster empties out."""
    rng = np.random.default_rng(seed)
    centers = _farthest_first_centers(points, m, rng)
    labels = np.full(len(points), -1, dtype=int)
    for _ in range(KMEANS_MAX_ITERS):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        counts = np.bincount(new_labels, minlength=m)
        if np.any(counts == 0):
            return None
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(m):
            centers[c] = points[labels == c].mean(axis=0)
    return labels


def spectral_cluster(afy: AffinityMatrix, m: int, seed: int) -> ClusterAssignment:
    """Partition the affinity graph into m non-empty clusters.

    Deterministic for a fixed (afy, m, seed). On an empty-cluster collapse
    the k-means stage is restarted with incremented seeds up to
    ``KMEANS_RESTARTS`` times before giving up.
    """
    k = afy.size
    if m < 2:
        raise InvalidParameter("m must be >= 2")
    if m > k:
        raise InvalidParameter(f"m={m} exceeds the number of shapes ({k})")
    emb = _spectral_embedding(afy.values, m)
    for attempt in range(1 + KMEANS_RESTARTS):
        labels = _kmeans_once(emb, m, seed + attempt)
        if labels is not None:
            return ClusterAssignment(tuple(int(x) for x in labels), m)
    raise ClusterCollapse(
        f"empty cluster persisted through {KMEANS_RESTARTS} re-seeded restarts"
    )
