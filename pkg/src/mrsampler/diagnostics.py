"""Trajectory diagnostics: Taylor convergence ratio, PCA projection, error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler.driver import Trajectory

__all__ = [
    "ConvergenceReport",
    "TrajectoryProjection",
    "PCABasis",
    "convergence_ratio",
    "pca_fit",
    "pca_project",
    "path_length",
    "empirical_order",
    "rmse",
]


@dataclass(frozen=True)
class ConvergenceReport:
    """Fraction of output components whose radius estimate exceeds the step.

    Entry ``k`` describes sampling step ``steps[k]`` (1-based), which expands
    around the output buffered at ``times[k]`` and integrates over ``h_values[k]``.
    """

    per_step_ratio: np.ndarray
    h_values: np.ndarray
    steps: np.ndarray
    times: np.ndarray

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.per_step_ratio))


@dataclass(frozen=True)
class TrajectoryProjection:
    points_2d: np.ndarray
    explained_variance: tuple[float, float]


@dataclass(frozen=True)
class PCABasis:
    mean: np.ndarray
    components: np.ndarray  # (2, D), unit rows
    explained_variance: tuple[float, float]

    def project(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.mean) @ self.components.T


def convergence_ratio(traj: Trajectory, h=None, tol: float | None = None) -> ConvergenceReport:
    """Per-step share of components with estimated Taylor radius above ``h``.

    The radius of component ``i`` is approximated by ``|c0_i| / |c1_i|``
    where ``c0`` is the buffered model output and ``c1`` its backward
    difference in log-SNR, the same quantity a second-order step uses.
    Components with ``|c1_i| < tol`` have an effectively infinite radius;
    ``tol`` defaults to ``1e-12 * max|c0|`` per step.

    ``h`` holds one threshold per step (default: the trajectory's own
    log-SNR steps); the backward difference always uses the trajectory grid.
    """
    outs = np.asarray(traj.outputs, dtype=float)
    m = outs.shape[0]
    if m < 2:
        raise ValueError("convergence ratio needs at least two buffered model outputs")
    steps = np.diff(np.asarray(traj.lambdas, dtype=float))
    h = steps if h is None else np.asarray(h, dtype=float)
    if h.shape != (m,):
        raise ValueError(f"expected {m} step sizes, got shape {h.shape}")
    ratios, hs, idx = [], [], []
    for i in range(2, m + 1):
        c0 = outs[i - 1]
        c1 = (outs[i - 1] - outs[i - 2]) / steps[i - 2]
        step_tol = 1e-12 * np.max(np.abs(c0)) if tol is None else tol
        flat = np.abs(c1) <= step_tol
        with np.errstate(divide="ignore", invalid="ignore"):
            radius = np.where(flat, np.inf, np.abs(c0) / np.where(flat, 1.0, np.abs(c1)))
        ratios.append(float(np.mean(radius > abs(h[i - 1]))))
        hs.append(abs(float(h[i - 1])))
        idx.append(i)
    return ConvergenceReport(np.array(ratios), np.array(hs), np.array(idx), np.asarray(traj.times)[np.array(idx) - 1])


def _states_matrix(traj_or_points) -> np.ndarray:
    pts = traj_or_points.xs if isinstance(traj_or_points, Trajectory) else traj_or_points
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"expected a (states, D) matrix, got shape {pts.shape}")
    return pts


def pca_fit(points) -> PCABasis:
    """Top-two principal directions of ``points`` via a thin SVD.

    Each direction is signed so that its first non-negligible loading is
    positive.
    """
    pts = _states_matrix(points)
    if pts.shape[1] < 2:
        raise ValueError("PCA to two dimensions needs D >= 2")
    mean = pts.mean(axis=0)
    centered = pts - mean
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    total = float(np.sum(sv**2))
    comps = np.zeros((2, pts.shape[1]))
    k = min(2, vt.shape[0])
    comps[:k] = vt[:k]
    for row in comps:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    if total == 0.0:
        return PCABasis(mean, comps, (0.0, 0.0))
    var = np.zeros(2)
    var[:k] = sv[:k] ** 2 / total
    return PCABasis(mean, comps, (float(var[0]), float(var[1])))


def pca_project(traj) -> TrajectoryProjection:
    """Project a single-chain trajectory (or a state matrix) onto its top-2 PCs."""
    pts = _states_matrix(traj)
    if pts.shape[0] < 3:
        raise ValueError("PCA projection needs at least three states")
    basis = pca_fit(pts)
    if basis.explained_variance == (0.0, 0.0):
        return TrajectoryProjection(np.zeros((pts.shape[0], 2)), (0.0, 0.0))
    return TrajectoryProjection(basis.project(pts), basis.explained_variance)


def path_length(points_2d) -> float:
    """Sum of segment lengths along a polyline."""
    pts = np.asarray(points_2d, dtype=float)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def empirical_order(errors) -> float:
    """Least-squares slope of ``log(err)`` against ``log(1 / nfe)``."""
    pairs = [(float(n), float(e)) for n, e in errors]
    if len(pairs) < 3:
        raise ValueError("need at least three (nfe, error) pairs")
    nfe = np.array([p[0] for p in pairs])
    err = np.array([p[1] for p in pairs])
    if np.any(err <= 0) or np.any(~np.isfinite(err)):
        raise ValueError(f"errors must be positive and finite, got {err}")
    if np.any(nfe <= 0) or np.unique(nfe).size != nfe.size:
        raise ValueError(f"nfe values must be positive and distinct, got {nfe}")
    slope, _ = np.polyfit(np.log(1.0 / nfe), np.log(err), 1)
    return float(slope)


def rmse(a, b) -> float:
    """Root-mean-square difference of two arrays or two trajectories' states."""
    a = a.xs if isinstance(a, Trajectory) else a
    b = b.xs if isinstance(b, Trajectory) else b
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))
