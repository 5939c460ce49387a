"""Shared helpers: seeded shape factories and brute-force oracles."""

from __future__ import annotations

import numpy as np

from jitterseg import PreShape, project_to_preshape


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_preshape(rng: np.random.Generator, n: int = 30) -> PreShape:
    return project_to_preshape(rng.standard_normal((n, 2)))


def random_trajectory_points(rng: np.random.Generator, n: int = 30) -> np.ndarray:
    """A plausible pixel-scale track: smooth drift plus noise."""
    start = rng.uniform(50, 500, size=2)
    velocity = rng.uniform(-3, 3, size=2)
    f = np.arange(n, dtype=float)[:, None]
    return start + f * velocity + rng.normal(0, 2.0, size=(n, 2))


_ANGLE_GRID_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _angle_grid(n_angles: int):
    if n_angles not in _ANGLE_GRID_CACHE:
        theta = (2.0 * np.pi / n_angles) * np.arange(n_angles)
        _ANGLE_GRID_CACHE[n_angles] = (theta, np.cos(theta), np.sin(theta))
    return _ANGLE_GRID_CACHE[n_angles]


def residual_at_angle(a: PreShape, b: PreShape, theta: float) -> float:
    """||a - b R(theta)||_F evaluated literally from its definition."""
    return float(np.linalg.norm(a.config - b.config @ rotation_matrix(theta)))


def grid_search_rotation(
    a: PreShape, b: PreShape, n_angles: int = 1_000_000
) -> tuple[float, float]:
    """Brute-force (min distance, argmin angle) of ||a - b R(theta)||_F.

    Expanding the squared residual row by row, the theta-dependent part of
    ||a - b R(theta)||^2 is exactly -2 (P cos + Q sin) with
    P = sum(ax bx + ay by) and Q = sum(ax by - ay bx); the rotation leaves
    ||b R(theta)|| unchanged. The grid search evaluates that closed
    expansion on an even grid over [0, 2pi) -- no SVD anywhere. Use
    ``residual_at_angle`` to spot-check the expansion against the raw
    definition.
    """
    theta, c, s = _angle_grid(n_angles)
    ax, ay = a.config[:, 0], a.config[:, 1]
    bx, by = b.config[:, 0], b.config[:, 1]
    p = float(np.sum(ax * bx + ay * by))
    q = float(np.sum(ax * by - ay * bx))
    norms = float(np.sum(a.config**2) + np.sum(b.config**2))
    d2 = norms - 2.0 * (p * c + q * s)
    i = int(np.argmin(d2))
    return float(np.sqrt(max(d2[i], 0.0))), float(theta[i])
