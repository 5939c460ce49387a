"""Per-cluster alignment and smoothing of mean trajectories.

Given a cluster of pre-shapes, alternating Procrustes alignment rotates
each member so the cluster collapses as tightly as possible around its
average configuration (the cluster's mean trajectory in shape space).
That mean is then smoothed by a fixed number of Jacobi sweeps of a
closed-form update that trades fidelity to the raw mean against the
variance of its rows, and each member is reconstructed from the smoothed
mean by undoing its rotation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyCluster, InvalidParameter, ShapeMismatch
from .shapes import PreShape, Rotation2D, _best_rotation_matrix, _readonly

GPA_TOL = 1e-10
GPA_MAX_SWEEPS = 50

DEFAULT_JACOBI_ITERS = 5
JACOBI_CONVERGENCE_TOL = 1e-10
_JACOBI_ITER_CAP = 10_000_000


@dataclass(frozen=True)
class GpaResult:
    """Aligned cluster: per-member rotations, mean configuration, objective.

    ``mean`` is the average of the rotated members; ``objective`` is the
    mean squared residual of the rotated members about it.
    ``sweep_objectives`` records the objective before any sweep and after
    each one (diagnostic; non-increasing by construction).
    """

    rotations: tuple[Rotation2D, ...]
    mean: np.ndarray
    objective: float
    sweep_objectives: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mean", _readonly(self.mean))
        if self.objective < 0:
            raise ValueError("objective must be >= 0")


@dataclass(frozen=True)
class StabilizedMean:
    """A mean configuration after a fixed number of smoothing sweeps."""

    config: np.ndarray
    lam: float
    jacobi_iters: int

    def __post_init__(self):
        object.__setattr__(self, "config", _readonly(self.config))


def _objective(rotated: Sequence[np.ndarray]) -> tuple[float, np.ndarray]:
    mean = np.mean(rotated, axis=0)
    obj = sum(float(np.sum((r - mean) ** 2)) for r in rotated) / len(rotated)
    return obj, mean


def gpa_align(shapes: Sequence[PreShape], members: Sequence[int]) -> GpaResult:
    """Jointly rotate the given cluster members to minimize their spread.

    Classical alternating scheme: start from identity rotations, then
    repeat {recompute the mean of the rotated members; re-solve each
    member's rotation against that mean} until the objective decrease
    falls below ``GPA_TOL`` or ``GPA_MAX_SWEEPS`` sweeps. Each half-step
    can only lower the objective, so the sweep sequence is non-increasing.
    Because the objective is already an upper bound on any further
    decrease, a cluster that starts below tolerance returns immediately
    with its identity rotations untouched.

    The solution is only defined up to a common rotation; the gauge is
    fixed by rotating everything so the first member's rotation is the
    identity.
    """
    members = list(members)
    if not members:
        raise EmptyCluster("member set is empty")
    configs = [shapes[i].config for i in members]
    n = configs[0].shape[0]
    for c in configs:
        if c.shape[0] != n:
            raise ShapeMismatch(f"frame counts differ: {c.shape[0]} vs {n}")

    rotations = [np.eye(2) for _ in configs]
    rotated = list(configs)
    obj, mean = _objective(rotated)
    history = [obj]
    for _ in range(GPA_MAX_SWEEPS):
        if obj < GPA_TOL:
            break
        rotations = [_best_rotation_matrix(mean, c) for c in configs]
        rotated = [c @ r for c, r in zip(configs, rotations)]
        new_obj, mean = _objective(rotated)
        history.append(new_obj)
        decrease = obj - new_obj
        obj = new_obj
        if decrease < GPA_TOL:
            break

    first = rotations[0]
    if not np.array_equal(first, np.eye(2)):
        rotations = [r @ first.T for r in rotations]
        rotations[0] = np.eye(2)
        rotated = [c @ r for c, r in zip(configs, rotations)]
        obj, mean = _objective(rotated)
    return GpaResult(tuple(Rotation2D(r) for r in rotations), mean, obj, tuple(history))


def _jacobi_coefficients(lam: float, n: int) -> tuple[float, float]:
    alpha = 1.0 / (1.0 + lam - lam / n)
    beta = (lam / n) * alpha
    return alpha, beta


def stabilize_mean(
    mean: np.ndarray,
    lam: float,
    iters: int = DEFAULT_JACOBI_ITERS,
    *,
    run_to_convergence: bool = False,
) -> StabilizedMean:
    """Smooth a mean configuration with simultaneous Jacobi sweeps.

    Each sweep replaces every row r with
    ``alpha * mean[r] + beta * sum(previous rows except r)`` where
    ``alpha = 1 / (1 + lam - lam/N)`` and ``beta = (lam / N) * alpha``,
    starting from the input mean. ``lam = 0`` gives alpha = 1, beta = 0:
    the identity. With ``run_to_convergence`` the sweeps continue until
    successive iterates differ by at most ``JACOBI_CONVERGENCE_TOL``
    (testing aid; the pipeline always runs exactly ``iters`` sweeps).
    """
    if lam < 0:
        raise InvalidParameter("lam must be >= 0")
    if iters < 1:
        raise InvalidParameter("iters must be >= 1")
    mean = np.asarray(mean, dtype=float)
    if mean.ndim != 2 or mean.shape[1] != 2 or mean.shape[0] < 2:
        raise InvalidParameter("mean must be an (N, 2) matrix with N >= 2")
    n = mean.shape[0]
    alpha, beta = _jacobi_coefficients(lam, n)

    current = mean.copy()
    sweeps = 0
    limit = _JACOBI_ITER_CAP if run_to_convergence else iters
    while sweeps < limit:
        row_sum = current.sum(axis=0)
        nxt = alpha * mean + beta * (row_sum - current)
        sweeps += 1
        if run_to_convergence and np.max(np.abs(nxt - current)) <= JACOBI_CONVERGENCE_TOL:
            current = nxt
            break
        current = nxt
    return StabilizedMean(current, lam, sweeps)


def back_transform(stab: StabilizedMean, rotations: Sequence[Rotation2D]) -> list[np.ndarray]:
    """Rebuild each member's configuration from the stabilized mean.

    Member k receives ``stab.config @ rotations[k].T``, undoing the
    rotation that aligned it during GPA. Rotations are isometries, so
    every output has the Frobenius norm of the stabilized mean.
    """
    return [stab.config @ rot.matrix.T for rot in rotations]
