"""Rotation matrices, rigid poses and small vector helpers shared across the toolkit.

Rotations are plain 3x3 numpy arrays (row-major when serialized). Everything
here is pure and allocation-light; validation is explicit rather than baked
into a wrapper class.
"""

from dataclasses import dataclass, field

import numpy as np

ROTATION_ATOL = 1e-9


class DegenerateGeometryError(ValueError):
    """Raised when an input configuration admits no well-defined answer
    (rank-deficient point sets, anti-parallel rays, ...)."""


def identity_rotation() -> np.ndarray:
    return np.eye(3)


def is_rotation(m, atol: float = ROTATION_ATOL) -> bool:
    """True if m is orthonormal with determinant +1 within atol."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        return False
    if not np.allclose(m.T @ m, np.eye(3), atol=atol, rtol=0.0):
        return False
    return abs(np.linalg.det(m) - 1.0) <= atol


def validate_rotation(m, atol: float = ROTATION_ATOL) -> np.ndarray:
    """Return m as a float array after checking it is a proper rotation."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got shape {m.shape}")
    err = np.abs(m.T @ m - np.eye(3)).max()
    if err > atol:
        raise ValueError(f"matrix is not orthonormal (max deviation {err:.3e})")
    det = np.linalg.det(m)
    if abs(det - 1.0) > atol:
        raise ValueError(f"matrix determinant is {det:.6f}, expected +1")
    return m


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rotation by `angle` radians about `axis` (Rodrigues' formula)."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be non-zero")
    x, y, z = axis / n
    c, s = np.cos(angle), np.sin(angle)
    cc = 1.0 - c
    return np.array([
        [x * x * cc + c, x * y * cc - z * s, x * z * cc + y * s],
        [y * x * cc + z * s, y * y * cc + c, y * z * cc - x * s],
        [z * x * cc - y * s, z * y * cc + x * s, z * z * cc + c],
    ])


def nearest_rotation(m) -> np.ndarray:
    """Project an arbitrary 3x3 matrix to the closest proper rotation.

    Closest in the Frobenius sense, via SVD with the smallest singular
    direction sign-flipped for negative-determinant inputs. Raises
    DegenerateGeometryError when the matrix has rank < 2, where the
    projection is not unique.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got shape {m.shape}")
    u, s, vt = np.linalg.svd(m)
    if s[0] <= 0.0 or s[1] <= s[0] * 1e-12:
        raise DegenerateGeometryError("matrix rank < 2; nearest rotation is not unique")
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def geodesic_angle(r1, r2) -> float:
    """Angle in radians of the relative rotation r1ᵀ·r2.

    Measured as atan2 of the relative rotation's skew-part norm against its
    trace: ‖R−Rᵀ‖_F = 2√2·sin(θ) and tr(R) = 1 + 2·cos(θ). Unlike a plain
    arccos of the trace this keeps full resolution near θ = 0, where arccos
    bottoms out around 1e-8 even for bitwise-equal inputs.
    """
    rel = np.asarray(r1).T @ np.asarray(r2)
    cos_theta = (np.trace(rel) - 1.0) * 0.5
    sin_theta = np.sqrt(((rel - rel.T) ** 2).sum()) / (2.0 * np.sqrt(2.0))
    return float(np.arctan2(sin_theta, cos_theta))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation via a normalized Gaussian quaternion.

    A 4-vector of iid normals normalized to the unit sphere is uniform on
    S^3, and the double cover makes the induced rotation uniform on SO(3).
    """
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def skew(v) -> np.ndarray:
    """Skew-symmetric cross-product matrix [v]x with [v]x·w = v x w."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


@dataclass
class Pose6D:
    """Rigid transform: p -> rotation @ p + translation. Units: meters."""

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rotation = validate_rotation(self.rotation)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (n, 3) array of points."""
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def compose(self, other: "Pose6D") -> "Pose6D":
        """self ∘ other: apply `other` first, then `self`."""
        return Pose6D(
            rotation=self.rotation @ other.rotation,
            translation=self.rotation @ other.translation + self.translation,
        )

    @classmethod
    def identity(cls) -> "Pose6D":
        return cls(rotation=np.eye(3))
