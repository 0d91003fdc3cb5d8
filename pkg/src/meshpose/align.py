"""Orthogonal Procrustes alignment and rotation-difference losses.

Given two corresponded, centroid-centered point sets this solves for the
proper rotation minimizing the summed squared residual, and scores rotation
estimates against references with a half-angle loss that is bounded,
symmetric and symmetry-aware when an object symmetry is declared.
"""

import numpy as np

from .geometry import DegenerateGeometryError, validate_rotation
from .mesh import SymmetrySpec, symmetry_rotations

CENTERING_TOL = 1e-6

_SQRT8 = 2.0 * np.sqrt(2.0)


def _checked_point_sets(reconstructed, canonical, require_centered: bool):
    a = np.asarray(reconstructed, dtype=float).reshape(-1, 3)
    b = np.asarray(canonical, dtype=float).reshape(-1, 3)
    if len(a) != len(b):
        raise ValueError(f"point counts differ: {len(a)} vs {len(b)}")
    if len(a) < 3:
        raise ValueError(f"need at least 3 point pairs, got {len(a)}")
    if require_centered:
        for name, pts in (("reconstructed", a), ("canonical", b)):
            drift = np.linalg.norm(pts.mean(axis=0))
            if drift > CENTERING_TOL:
                raise ValueError(
                    f"{name} points are not centroid-centered (mean norm {drift:.3e}); "
                    "subtract the centroid before aligning"
                )
    return a, b


def procrustes_align(reconstructed, canonical) -> np.ndarray:
    """Best proper rotation R minimizing sum_i ||reconstructed_i - R @ canonical_i||^2.

    Both sets must be corresponded index-by-index and centered on their
    centroids. The solution comes from the SVD of the 3x3 cross-covariance,
    with the smallest singular direction sign-flipped when needed so that
    det(R) = +1 even for reflected inputs.

    Raises DegenerateGeometryError when the cross-covariance has rank < 2
    (collinear or collapsed points), where no unique rotation exists.
    """
    a, b = _checked_point_sets(reconstructed, canonical, require_centered=True)
    h = a.T @ b
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 0.0 or s[1] <= s[0] * 1e-12:
        raise DegenerateGeometryError(
            "cross-covariance rank < 2 (points collinear or degenerate); rotation is not unique"
        )
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def procrustes_residual(reconstructed, canonical, rotation) -> float:
    """Root-mean-square of ||reconstructed_i - R @ canonical_i|| over points."""
    a, b = _checked_point_sets(reconstructed, canonical, require_centered=False)
    r = validate_rotation(rotation)
    diff = a - b @ r.T
    return float(np.sqrt((diff ** 2).sum(axis=1).mean()))


def pose_loss(estimated, groundtruth) -> float:
    """Half the geodesic angle between two rotations, in radians.

    Computed as arcsin(||R_est - R_gt||_F / (2*sqrt(2))), which equals
    theta/2 for rotations separated by theta in [0, pi]. The arcsin argument
    is clamped to [0, 1] against floating-point drift. Range: [0, pi/2].
    """
    est = validate_rotation(estimated)
    gt = validate_rotation(groundtruth)
    arg = np.linalg.norm(est - gt) / _SQRT8
    return float(np.arcsin(np.clip(arg, 0.0, 1.0)))


def symmetry_aware_pose_loss(estimated, groundtruth, spec: SymmetrySpec) -> float:
    """Minimum pose_loss over the groundtruth's symmetry-rotated copies."""
    est = validate_rotation(estimated)
    gt = validate_rotation(groundtruth)
    return min(pose_loss(est, gt @ s) for s in symmetry_rotations(spec))
