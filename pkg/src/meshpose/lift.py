"""2D localization primitives and allocentric-to-egocentric pose lifting.

Pixel coordinates follow the convention that pixel (ix, iy) has its center
at (ix, iy) and covers the unit square around it; heatmap and mask grids
are row-major numpy arrays indexed [iy, ix].

Lifting turns an allocentric orientation (rotation relative to the viewing
ray) plus a projected-centroid pixel and an apparent-size measurement into
a full rotation + translation in the camera frame: the viewing-ray rotation
re-aims the principal axis at the object, and the ratio of a reference
projected size to the observed size recovers the distance.
"""

import json
import re
from dataclasses import dataclass

import numpy as np

from .geometry import DegenerateGeometryError, Pose6D, skew, validate_rotation
from .mesh import Mesh, mesh_diameter

PGM_MAXVAL = 65535


@dataclass
class CameraIntrinsics:
    """Pinhole parameters in pixels plus the image dimensions."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be at least 1x1")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CameraIntrinsics":
        try:
            return cls(
                fx=float(data["fx"]), fy=float(data["fy"]),
                cx=float(data["cx"]), cy=float(data["cy"]),
                width=int(data["width"]), height=int(data["height"]),
            )
        except KeyError as exc:
            raise ValueError(f"intrinsics missing field {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path) -> "CameraIntrinsics":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def make_centroid_heatmap(center, width: int, height: int, sigma: float = 5.0) -> np.ndarray:
    """Unnormalized Gaussian bump exp(-|p - center|^2 / (2 sigma^2)).

    Evaluated at pixel centers; amplitude 1 at the center point, so the
    nearest pixel reaches 1 exactly when the center sits on a pixel. The
    center may lie outside the image (the Gaussian is simply truncated).
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if width < 1 or height < 1:
        raise ValueError("heatmap dimensions must be at least 1x1")
    cx, cy = float(center[0]), float(center[1])
    gx = np.exp(-((np.arange(width) - cx) ** 2) / (2.0 * sigma * sigma))
    gy = np.exp(-((np.arange(height) - cy) ** 2) / (2.0 * sigma * sigma))
    return np.outer(gy, gx)


def decode_heatmap(heatmap: np.ndarray, window: int = 11) -> tuple[float, float]:
    """Subpixel peak location: argmax refined by an intensity-weighted mean.

    The mean runs over a `window` x `window` patch centered on the argmax
    pixel, clipped to the image; negative values carry zero weight.
    """
    h = np.asarray(heatmap, dtype=float)
    if h.ndim != 2:
        raise ValueError(f"heatmap must be 2D, got shape {h.shape}")
    if not (h > 0).any():
        raise ValueError("heatmap has no positive values to decode")
    iy, ix = np.unravel_index(np.argmax(h), h.shape)
    half = window // 2
    y0, y1 = max(0, iy - half), min(h.shape[0], iy + half + 1)
    x0, x1 = max(0, ix - half), min(h.shape[1], ix + half + 1)
    patch = np.clip(h[y0:y1, x0:x1], 0.0, None)
    ys, xs = np.mgrid[y0:y1, x0:x1]
    total = patch.sum()
    return float((xs * patch).sum() / total), float((ys * patch).sum() / total)


def project_point(k: CameraIntrinsics, p) -> tuple[float, float]:
    """Pinhole projection of a camera-frame point with z > 0 to pixels."""
    x, y, z = np.asarray(p, dtype=float)
    if z <= 0:
        raise ValueError(f"point has z = {z}, cannot project points behind the camera")
    return (k.fx * x / z + k.cx, k.fy * y / z + k.cy)


def project_points(k: CameraIntrinsics, points) -> np.ndarray:
    """Vectorized projection of an (n, 3) array; every z must be positive."""
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    z = p[:, 2]
    if (z <= 0).any():
        raise ValueError("cannot project points behind the camera (z <= 0)")
    return np.stack([k.fx * p[:, 0] / z + k.cx, k.fy * p[:, 1] / z + k.cy], axis=1)


def ray_from_pixel(k: CameraIntrinsics, pixel) -> np.ndarray:
    """Unit direction of the back-projected ray through a pixel."""
    u, v = float(pixel[0]), float(pixel[1])
    ray = np.array([(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0])
    return ray / np.linalg.norm(ray)


def rotation_to_ray(ray) -> np.ndarray:
    """Rotation mapping the principal axis (0, 0, 1) onto a unit ray.

    Uses R = I + [v]x + [v]x^2 / (1 + a.r) with v = a x r, which is the
    minimal-angle rotation between the two directions. Undefined for rays
    anti-parallel to the principal axis.
    """
    r = np.asarray(ray, dtype=float).reshape(3)
    norm = np.linalg.norm(r)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"ray must be a unit vector, got norm {norm}")
    a = np.array([0.0, 0.0, 1.0])
    c = float(a @ r)
    if c <= -1.0 + 1e-9:
        raise DegenerateGeometryError("ray is anti-parallel to the principal axis")
    vx = skew(np.cross(a, r))
    return np.eye(3) + vx + (vx @ vx) / (1.0 + c)


def mask_bbox_diagonal(mask: np.ndarray, threshold: float = 0.5) -> float:
    """Diagonal of the tight pixel-extent box over pixels >= threshold."""
    m = np.asarray(mask, dtype=float)
    ys, xs = np.nonzero(m >= threshold)
    if not len(xs):
        raise ValueError(f"mask has no pixels >= {threshold}")
    extent_x = xs.max() - xs.min() + 1
    extent_y = ys.max() - ys.min() + 1
    return float(np.hypot(extent_x, extent_y))


def projected_bbox_diagonal(k: CameraIntrinsics, mesh: Mesh, rotation, distance: float) -> float:
    """Diagonal of the projected-vertex bounding box of the rotated mesh
    placed on the principal axis at `distance` meters.

    A vertex-projection proxy for the rendered silhouette box: the extremal
    projected vertices bound the silhouette for the convex outline.
    """
    r = validate_rotation(rotation)
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    if mesh.n_vertices < 2:
        raise DegenerateGeometryError("projected bbox needs at least 2 vertices")
    cam = mesh.vertices @ r.T
    cam[:, 2] += distance
    uv = project_points(k, cam)
    span = uv.max(axis=0) - uv.min(axis=0)
    return float(np.hypot(span[0], span[1]))


def estimate_distance(reference_diagonal: float, reference_distance: float,
                      observed_diagonal: float) -> float:
    """Distance from apparent size: reference_diagonal * reference_distance / observed_diagonal."""
    if reference_diagonal <= 0 or reference_distance <= 0 or observed_diagonal <= 0:
        raise ValueError("diagonals and distances must be positive")
    return reference_diagonal * reference_distance / observed_diagonal


def default_reference_distance(k: CameraIntrinsics, mesh: Mesh) -> float:
    """2.5 x mesh diameter divided by the tangent of the narrower half field
    of view, far enough that the projected object fits the frame."""
    tan_half = min(k.width / (2.0 * k.fx), k.height / (2.0 * k.fy))
    return 2.5 * mesh_diameter(mesh) / tan_half


def lift_pose(
    allocentric,
    centroid: tuple[float, float],
    observed_diagonal: float,
    k: CameraIntrinsics,
    mesh: Mesh,
    reference_distance: float | None = None,
) -> Pose6D:
    """Assemble the camera-frame 6D pose from allocentric cues.

    `centroid` is the projected object center in full-image pixels and
    `observed_diagonal` the apparent bounding-box diagonal in pixels. The
    mesh must be in centered model coordinates. Returns rotation
    R_c @ allocentric and translation R_c @ (0, 0, d) where R_c aims the
    principal axis along the centroid ray and d comes from the size ratio
    against a synthetic reference projection at `reference_distance`.
    """
    r_allo = validate_rotation(allocentric)
    ray = ray_from_pixel(k, centroid)
    r_cam = rotation_to_ray(ray)
    if reference_distance is None:
        reference_distance = default_reference_distance(k, mesh)
    reference_diagonal = projected_bbox_diagonal(k, mesh, r_allo, reference_distance)
    distance = estimate_distance(reference_diagonal, reference_distance, observed_diagonal)
    return Pose6D(
        rotation=r_cam @ r_allo,
        translation=r_cam @ np.array([0.0, 0.0, distance]),
    )


def write_pgm(path, values: np.ndarray, binary: bool = True):
    """Write a mask/heatmap grid of [0, 1] floats as a 16-bit PGM.

    A `# scale <s>` comment records the factor mapping the integer range
    back to floats: value = raw / 65535 * s. This writer always uses s = 1.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError(f"PGM grid must be 2D, got shape {v.shape}")
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueError("PGM writer expects values in [0, 1]")
    raw = np.rint(v * PGM_MAXVAL).astype(np.uint16)
    header = f"{'P5' if binary else 'P2'}\n# scale 1.0\n{v.shape[1]} {v.shape[0]}\n{PGM_MAXVAL}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        if binary:
            f.write(raw.astype(">u2").tobytes())
        else:
            for row in raw:
                f.write((" ".join(str(int(x)) for x in row) + "\n").encode("ascii"))


def _pgm_header(data: bytes) -> tuple[list[bytes], int]:
    """First four whitespace-separated header tokens (comments skipped) and
    the byte offset one past the final token."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(data):
            raise ValueError("truncated PGM header")
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    return tokens, pos


def read_pgm(path) -> np.ndarray:
    """Read a P2/P5 PGM into floats, honoring the scale comment if present."""
    with open(path, "rb") as f:
        data = f.read()
    tokens, header_end = _pgm_header(data)
    magic = tokens[0].decode("ascii", "replace")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise ValueError("malformed PGM header") from None
    if width < 1 or height < 1 or maxval < 1:
        raise ValueError("malformed PGM header")
    scale = 1.0
    for m in re.finditer(rb"#[^\n]*", data[:header_end]):
        sm = re.search(rb"scale\s+([0-9.eE+-]+)", m.group(0))
        if sm:
            scale = float(sm.group(1))
    if magic == "P2":
        body = re.sub(rb"#[^\n]*", b"", data[header_end:])
        raw = np.array([int(t) for t in body.split()], dtype=float)
        if len(raw) != width * height:
            raise ValueError(f"P2 body has {len(raw)} samples, expected {width * height}")
    elif magic == "P5":
        # binary payload starts one whitespace byte after the maxval token
        dtype = ">u2" if maxval > 255 else "u1"
        raw = np.frombuffer(data, dtype=dtype, count=width * height,
                            offset=header_end + 1).astype(float)
        if len(raw) != width * height:
            raise ValueError("truncated P5 payload")
    else:
        raise ValueError(f"unsupported PGM magic {magic!r}")
    return (raw / maxval * scale).reshape(height, width)
