"""Pose-accuracy benchmark metrics and report aggregation.

Implements the standard model-point metrics: ADD (mean distance between
corresponded posed vertices), ADI (closest-point variant for symmetric
objects), mean 2D projection error, strict correctness thresholds, and the
exact area under the accuracy-versus-threshold curve. `aggregate` turns a
batch of pose records into per-object and averaged numbers plus a plain-text
table where symmetric objects (scored with ADI) carry a "*" suffix.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import Pose6D
from .lift import CameraIntrinsics, project_points
from .mesh import Mesh, mesh_diameter

_ADI_CHUNK = 1024


@dataclass
class EvalRecord:
    """One groundtruth/predicted pose pair for a named object."""

    object_id: str
    groundtruth: Pose6D
    predicted: Pose6D


def _metric_points(gt: Pose6D, pred: Pose6D, mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    if mesh.n_vertices == 0:
        raise ValueError("metrics need a non-empty mesh")
    return gt.apply(mesh.vertices), pred.apply(mesh.vertices)


def add_distance(gt: Pose6D, pred: Pose6D, mesh: Mesh) -> float:
    """Mean Euclidean distance between corresponded posed vertices (meters)."""
    p, q = _metric_points(gt, pred, mesh)
    return float(np.linalg.norm(p - q, axis=1).mean())


def adi_distance(gt: Pose6D, pred: Pose6D, mesh: Mesh) -> float:
    """Mean distance from each groundtruth-posed vertex to its closest
    predicted-posed vertex (meters). Exact all-pairs search, chunked to keep
    the distance matrix bounded; always <= add_distance.
    """
    p, q = _metric_points(gt, pred, mesh)
    mins = np.empty(len(p))
    for start in range(0, len(p), _ADI_CHUNK):
        block = p[start:start + _ADI_CHUNK]
        mins[start:start + _ADI_CHUNK] = cdist(block, q).min(axis=1)
    return float(mins.mean())


def proj2d_error(gt: Pose6D, pred: Pose6D, mesh: Mesh, k: CameraIntrinsics) -> float:
    """Mean pixel distance between projections of the posed vertices."""
    p, q = _metric_points(gt, pred, mesh)
    return float(np.linalg.norm(project_points(k, p) - project_points(k, q), axis=1).mean())


def is_correct_add(distance: float, diameter: float, fraction: float = 0.1) -> bool:
    """Strictly below `fraction` of the object diameter."""
    if diameter <= 0:
        raise ValueError(f"diameter must be positive, got {diameter}")
    return distance < fraction * diameter


def is_correct_proj(error: float, threshold: float = 5.0) -> bool:
    """Strictly below the pixel threshold."""
    return error < threshold


def auc(distances, max_threshold: float = 0.1) -> float:
    """Area under the accuracy-versus-threshold curve, normalized to [0, 1].

    With accuracy(t) = fraction of distances strictly below t integrated over
    t in [0, max_threshold], the exact value is the mean over records of
    max(0, 1 - d / max_threshold).
    """
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise ValueError("auc needs at least one distance")
    if (d < 0).any():
        raise ValueError("distances must be non-negative")
    if max_threshold <= 0:
        raise ValueError(f"max_threshold must be positive, got {max_threshold}")
    return float(np.clip(1.0 - d / max_threshold, 0.0, None).mean())


@dataclass
class ObjectMetrics:
    """Aggregates for one object; `mean_add` is ADI when `symmetric`."""

    object_id: str
    symmetric: bool
    n_records: int
    diameter: float
    mean_add: float
    mean_proj2d: float
    add_accuracy: float
    proj2d_accuracy: float
    auc: float

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "symmetric": self.symmetric,
            "n_records": self.n_records,
            "diameter": self.diameter,
            "mean_add": self.mean_add,
            "mean_proj2d": self.mean_proj2d,
            "add_accuracy": self.add_accuracy,
            "proj2d_accuracy": self.proj2d_accuracy,
            "auc": self.auc,
        }


@dataclass
class MetricsReport:
    """Per-object rows (sorted by id) plus unweighted per-object averages."""

    objects: list[ObjectMetrics]
    add_fraction: float
    proj_threshold: float
    auc_max: float
    add_accuracy: float = field(init=False)
    proj2d_accuracy: float = field(init=False)
    auc: float = field(init=False)
    n_records: int = field(init=False)

    def __post_init__(self):
        if not self.objects:
            raise ValueError("report needs at least one object")
        self.objects = sorted(self.objects, key=lambda o: o.object_id)
        self.add_accuracy = float(np.mean([o.add_accuracy for o in self.objects]))
        self.proj2d_accuracy = float(np.mean([o.proj2d_accuracy for o in self.objects]))
        self.auc = float(np.mean([o.auc for o in self.objects]))
        self.n_records = sum(o.n_records for o in self.objects)

    def to_dict(self) -> dict:
        return {
            "objects": [o.to_dict() for o in self.objects],
            "average": {
                "add_accuracy": self.add_accuracy,
                "proj2d_accuracy": self.proj2d_accuracy,
                "auc": self.auc,
            },
            "thresholds": {
                "add_fraction": self.add_fraction,
                "proj_threshold": self.proj_threshold,
                "auc_max": self.auc_max,
            },
            "n_records": self.n_records,
        }

    def to_text(self) -> str:
        """Aligned table: objects as rows, metrics as columns, symmetric
        objects (scored with ADI) marked with a trailing "*"."""
        header = ["object", "n", "mean dist [m]", "ADD(-S) [%]", "proj2d [%]", "AUC"]
        rows = [header]
        for o in self.objects:
            rows.append([
                o.object_id + ("*" if o.symmetric else ""),
                str(o.n_records),
                f"{o.mean_add:.6f}",
                f"{100.0 * o.add_accuracy:.2f}",
                f"{100.0 * o.proj2d_accuracy:.2f}",
                f"{o.auc:.4f}",
            ])
        rows.append([
            "Average", str(self.n_records), "-",
            f"{100.0 * self.add_accuracy:.2f}",
            f"{100.0 * self.proj2d_accuracy:.2f}",
            f"{self.auc:.4f}",
        ])
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = []
        for idx, row in enumerate(rows):
            cells = [row[0].ljust(widths[0])]
            cells += [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
            if idx == 0:
                lines.append("-" * len(lines[0]))
        lines.append("")
        lines.append(f"thresholds: ADD < {self.add_fraction} x diameter, "
                     f"proj2d < {self.proj_threshold} px, AUC max {self.auc_max} m; "
                     "* = symmetric object, scored with closest-point distance (ADI)")
        return "\n".join(lines) + "\n"


def _subsampled(mesh: Mesh, limit, rng: np.random.Generator) -> Mesh:
    if limit is None or mesh.n_vertices <= limit:
        return mesh
    keep = np.sort(rng.choice(mesh.n_vertices, size=limit, replace=False))
    # metrics never touch connectivity, so an edge-free point cloud suffices
    return Mesh(vertices=mesh.vertices[keep], edges=np.zeros((0, 2), dtype=int))


def aggregate(
    records,
    meshes: dict,
    symmetric: dict | None = None,
    intrinsics=None,
    add_fraction: float = 0.1,
    proj_threshold: float = 5.0,
    auc_max: float = 0.1,
    subsample: int | None = None,
    seed: int = 0,
) -> MetricsReport:
    """Score a batch of records and assemble a MetricsReport.

    `meshes` maps object id to its canonical Mesh; a missing id raises
    KeyError. `symmetric` maps id to a flag selecting ADI over ADD (missing
    ids default to asymmetric). `intrinsics` is required for the projection
    metric: either a single CameraIntrinsics shared by every record or a
    sequence aligned with `records`.

    Diameters come from the full canonical mesh once per object. With
    `subsample`, objects above that vertex count are scored on a seeded
    random vertex subset (rng seeded per object id order) for tractability.
    """
    records = list(records)
    if not records:
        raise ValueError("aggregate needs at least one record")
    if intrinsics is None:
        raise ValueError("aggregate requires camera intrinsics")
    if isinstance(intrinsics, CameraIntrinsics):
        per_record_k = [intrinsics] * len(records)
    else:
        per_record_k = list(intrinsics)
        if len(per_record_k) != len(records):
            raise ValueError(
                f"got {len(per_record_k)} intrinsics for {len(records)} records"
            )
    symmetric = symmetric or {}

    by_object: dict[str, list[tuple[EvalRecord, CameraIntrinsics]]] = {}
    for rec, k in zip(records, per_record_k):
        if rec.object_id not in meshes:
            raise KeyError(f"unknown object id {rec.object_id!r}")
        by_object.setdefault(rec.object_id, []).append((rec, k))

    objects = []
    for obj_index, object_id in enumerate(sorted(by_object)):
        mesh = meshes[object_id]
        diameter = mesh_diameter(mesh)
        is_sym = bool(symmetric.get(object_id, False))
        points = _subsampled(mesh, subsample, np.random.default_rng([seed, obj_index]))
        distance_fn = adi_distance if is_sym else add_distance

        dists, projs = [], []
        for rec, k in by_object[object_id]:
            dists.append(distance_fn(rec.groundtruth, rec.predicted, points))
            projs.append(proj2d_error(rec.groundtruth, rec.predicted, points, k))
        objects.append(ObjectMetrics(
            object_id=object_id,
            symmetric=is_sym,
            n_records=len(dists),
            diameter=diameter,
            mean_add=float(np.mean(dists)),
            mean_proj2d=float(np.mean(projs)),
            add_accuracy=float(np.mean([is_correct_add(d, diameter, add_fraction) for d in dists])),
            proj2d_accuracy=float(np.mean([is_correct_proj(p, proj_threshold) for p in projs])),
            auc=auc(dists, auc_max),
        ))
    return MetricsReport(
        objects=objects,
        add_fraction=add_fraction,
        proj_threshold=proj_threshold,
        auc_max=auc_max,
    )
