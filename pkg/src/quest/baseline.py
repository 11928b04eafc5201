"""8-point essential-matrix baseline.

Solves the epipolar constraint n^T E m = 0 linearly from 8 or more
correspondences, projects onto the essential manifold, and picks the
(R, t) decomposition that places the most points in front of both
cameras. The translation carries no scale information: it is always
returned with unit norm. The method breaks down structurally when the
points lie on a critical surface (e.g. a plane): the design matrix loses
rank at zero noise, and under noise the estimate passes the rank test but
is wrong.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import quat_from_rotation
from .errors import ChiralityFailureError, DegenerateConfigurationError, InsufficientPointsError
from .solver import PoseCandidate, _triangulate_uv


@dataclass(frozen=True, eq=False)
class EssentialMatrix:
    """Essential matrix with the (s, s, 0) singular-value structure enforced
    and unit Frobenius norm."""

    E: np.ndarray


def _hartley_normalization(xy: np.ndarray) -> np.ndarray:
    """Similarity transform taking the 2D points to centroid 0 and RMS
    radius sqrt(2). Conditioning step; without it the linear solve is
    needlessly noise-fragile."""
    centroid = xy.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum((xy - centroid) ** 2, axis=1)))
    s = np.sqrt(2.0) / rms if rms > 0.0 else 1.0
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def eight_point(points) -> EssentialMatrix:
    """Linear essential-matrix estimate from >= 8 correspondences.

    Raises DegenerateConfigurationError when the design matrix has rank
    below 8 (the null space is not unique) - the expected outcome for
    exactly coplanar points at zero noise."""
    points = list(points)
    if len(points) < 8:
        raise InsufficientPointsError(f"need at least 8 correspondences, got {len(points)}")
    M = np.array([c.m for c in points])
    N = np.array([c.n for c in points])
    T1 = _hartley_normalization(M[:, :2])
    T2 = _hartley_normalization(N[:, :2])
    Mh = M @ T1.T
    Nh = N @ T2.T
    design = np.stack(
        [
            Nh[:, 0] * Mh[:, 0], Nh[:, 0] * Mh[:, 1], Nh[:, 0] * Mh[:, 2],
            Nh[:, 1] * Mh[:, 0], Nh[:, 1] * Mh[:, 1], Nh[:, 1] * Mh[:, 2],
            Nh[:, 2] * Mh[:, 0], Nh[:, 2] * Mh[:, 1], Nh[:, 2] * Mh[:, 2],
        ],
        axis=1,
    )
    svals = np.linalg.svd(design, compute_uv=False)
    if svals[7] <= 1e-10 * svals[0]:
        raise DegenerateConfigurationError(
            "epipolar design matrix has rank < 8; the correspondences do not "
            "determine a unique essential matrix (coplanar points?)"
        )
    _, _, Vt = np.linalg.svd(design)
    E = Vt[-1].reshape(3, 3)
    E = T2.T @ E @ T1
    U, s, Vt = np.linalg.svd(E)
    sbar = 0.5 * (s[0] + s[1])
    E = U @ np.diag([sbar, sbar, 0.0]) @ Vt
    E = E / np.linalg.norm(E)
    return EssentialMatrix(E)


def decompose_essential(E: EssentialMatrix, points) -> PoseCandidate:
    """Pose from an essential matrix: four (R, +-t) hypotheses, resolved by
    majority positive-depth voting over the triangulated points.

    The returned candidate has unit-norm translation (the essential matrix
    carries no translation scale); algebraic_residual is the largest
    epipolar residual |n^T E m| over the input points."""
    points = list(points)
    U, _, Vt = np.linalg.svd(E.E)
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    t_unit = U[:, 2]
    best = None
    for R in (U @ W @ Vt, U @ W.T @ Vt):
        for t in (t_unit, -t_unit):
            u, v, _ = _triangulate_uv(R, t, points)
            pos = int(np.sum((u > 0.0) & (v > 0.0)))
            if best is None or pos > best[0]:
                best = (pos, R, t, u, v)
    pos, R, t, u, v = best
    if pos <= len(points) // 2:
        raise ChiralityFailureError(
            f"no decomposition places a majority of points in front of both cameras "
            f"(best {pos}/{len(points)})"
        )
    M = np.array([c.m for c in points])
    N = np.array([c.n for c in points])
    residual = float(np.max(np.abs(np.einsum("ij,jk,ik->i", N, E.E, M))))
    return PoseCandidate(
        q=quat_from_rotation(R),
        algebraic_residual=residual,
        t=t / np.linalg.norm(t),
        depths_u=u,
        depths_v=v,
        chirality_ok=bool(np.all(u > 0.0) and np.all(v > 0.0)),
        scale_note="unit-translation",
        t_depth_ratio=float(np.linalg.norm(t) / np.mean(np.abs(np.concatenate([u, v])))),
    )
