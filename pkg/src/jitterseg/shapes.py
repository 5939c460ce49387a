"""Planar pre-shape geometry for point trajectories.

A trajectory of N frames is treated as an N x 2 landmark configuration.
Centering it and scaling it to unit Frobenius norm removes location and
size, leaving a point on the pre-shape hypersphere; quotienting out planar
rotation on top of that gives the shape. Two trajectories that differ only
by a similarity transform (translation, positive scaling, rotation) are
therefore the same shape, and the Procrustes distance between pre-shapes
measures how differently they move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTrajectory, ShapeMismatch

# Below this centered Frobenius norm a configuration has no usable shape;
# far smaller than any realistic pixel-scale trajectory.
DEGENERACY_EPS = 1e-12

_INVARIANT_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Trajectory:
    """An (x, y) point track over a contiguous frame range.

    Point ``i`` is the position at frame ``start_frame + i``. At least two
    points are required: a single point has no shape.
    """

    id: int
    start_frame: int
    points: np.ndarray

    def __post_init__(self):
        pts = _readonly(self.points)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be an (N, 2) array, got {pts.shape}")
        if pts.shape[0] < 2:
            raise ValueError("a trajectory needs at least 2 points")
        if self.start_frame < 0:
            raise ValueError("start_frame must be >= 0")
        object.__setattr__(self, "points", pts)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def end_frame(self) -> int:
        """One past the last covered frame."""
        return self.start_frame + self.n_points


@dataclass(frozen=True)
class PreShape:
    """A centered, unit-Frobenius-norm N x 2 configuration."""

    config: np.ndarray

    def __post_init__(self):
        cfg = _readonly(self.config)
        if cfg.ndim != 2 or cfg.shape[1] != 2 or cfg.shape[0] < 2:
            raise ValueError(f"config must be an (N, 2) array with N >= 2, got {cfg.shape}")
        if np.max(np.abs(cfg.sum(axis=0))) > _INVARIANT_TOL:
            raise ValueError("config is not centered")
        if abs(np.linalg.norm(cfg) - 1.0) > _INVARIANT_TOL:
            raise ValueError("config does not have unit Frobenius norm")
        object.__setattr__(self, "config", cfg)

    @property
    def n_frames(self) -> int:
        return self.config.shape[0]


@dataclass(frozen=True)
class Rotation2D:
    """A member of SO(2)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.shape != (2, 2):
            raise ValueError("rotation matrix must be 2x2")
        if np.max(np.abs(m @ m.T - np.eye(2))) > _INVARIANT_TOL:
            raise ValueError("matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > _INVARIANT_TOL:
            raise ValueError("matrix is not a proper rotation (det != +1)")
        object.__setattr__(self, "matrix", m)

    @property
    def angle(self) -> float:
        """Rotation angle in radians, in (-pi, pi]."""
        return float(np.arctan2(self.matrix[1, 0], self.matrix[0, 0]))


def identity_rotation() -> Rotation2D:
    return Rotation2D(np.eye(2))


def project_to_preshape(config: np.ndarray) -> PreShape:
    """Re-center the rows of ``config`` and rescale to unit Frobenius norm.

    Idempotent on valid pre-shapes (up to floating-point identity: a valid
    pre-shape's centering and norm are already exact to ~1e-16).

    Raises DegenerateTrajectory when the centered norm falls below
    ``DEGENERACY_EPS`` (all points coincide).
    """
    cfg = np.asarray(config, dtype=float)
    if cfg.ndim != 2 or cfg.shape[1] != 2 or cfg.shape[0] < 2:
        raise ValueError(f"config must be an (N, 2) array with N >= 2, got {cfg.shape}")
    centered = cfg - cfg.mean(axis=0)
    norm = np.linalg.norm(centered)
    if norm < DEGENERACY_EPS:
        raise DegenerateTrajectory(f"centered norm {norm:.3e} below {DEGENERACY_EPS:.0e}")
    return PreShape(centered / norm)


def to_preshape(traj: Trajectory) -> PreShape:
    """Project a trajectory onto the pre-shape sphere.

    Invariant to translation and positive scaling of the input track.
    """
    return project_to_preshape(traj.points)


def _best_rotation_matrix(target: np.ndarray, source: np.ndarray) -> np.ndarray:
    """SO(2) matrix G minimizing ||target - source @ G||_F.

    Via SVD of source.T @ target = U S Vt: the orthogonal minimizer is
    U @ Vt; forcing det +1 flips the sign of the smaller singular
    direction when the unconstrained solution is a reflection.
    """
    m = source.T @ target
    u, _, vt = np.linalg.svd(m)
    sign = 1.0 if np.linalg.det(u @ vt) >= 0.0 else -1.0
    return u @ np.diag([1.0, sign]) @ vt


def optimal_rotation(a: PreShape, b: PreShape) -> Rotation2D:
    """The rotation G in SO(2) minimizing ||a - b @ G||_F."""
    if a.n_frames != b.n_frames:
        raise ShapeMismatch(f"frame counts differ: {a.n_frames} vs {b.n_frames}")
    return Rotation2D(_best_rotation_matrix(a.config, b.config))


def procrustes_distance(a: PreShape, b: PreShape) -> float:
    """Residual norm between two pre-shapes after optimal rotational alignment.

    Symmetric in its arguments; ranges over [0, 2] for unit-norm inputs.
    """
    rot = optimal_rotation(a, b)
    return float(np.linalg.norm(a.config - b.config @ rot.matrix))
