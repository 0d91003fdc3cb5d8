"""Geometry and evaluation toolkit for 6D object-pose pipelines.

Mesh I/O and graph utilities, orthogonal Procrustes alignment with
rotation losses, reconstruction training losses, allocentric-to-egocentric
pose lifting, standard pose-accuracy metrics, and a synthetic
self-validation study — all deterministic and seedable.
"""

from .align import (
    pose_loss,
    procrustes_align,
    procrustes_residual,
    symmetry_aware_pose_loss,
)
from .geometry import (
    DegenerateGeometryError,
    Pose6D,
    geodesic_angle,
    identity_rotation,
    is_rotation,
    nearest_rotation,
    random_rotation,
    rotation_about_axis,
    skew,
    validate_rotation,
)
from .lift import (
    CameraIntrinsics,
    decode_heatmap,
    default_reference_distance,
    estimate_distance,
    lift_pose,
    make_centroid_heatmap,
    mask_bbox_diagonal,
    project_point,
    project_points,
    projected_bbox_diagonal,
    ray_from_pixel,
    read_pgm,
    rotation_to_ray,
    write_pgm,
)
from .losses import (
    LossWeights,
    centroid_loss,
    edge_loss,
    laplacian_loss,
    mask_loss,
    mesh_loss,
    multiscale_loss,
    total_loss,
    vertex_loss,
)
from .mesh import (
    NO_SYMMETRY,
    Mesh,
    MeshFormatError,
    SymmetrySpec,
    center_mesh,
    load_mesh,
    load_mesh_file,
    mesh_diameter,
    neighborhood,
    symmetry_rotations,
    transform_mesh,
)
from .metrics import (
    EvalRecord,
    MetricsReport,
    ObjectMetrics,
    add_distance,
    adi_distance,
    aggregate,
    auc,
    is_correct_add,
    is_correct_proj,
    proj2d_error,
)
from .sim import (
    CorrelationStudy,
    NoiseModel,
    StudyBin,
    correlation_study,
    default_noise_sweep,
    simulate_reconstruction,
    standardize,
)

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "CorrelationStudy",
    "DegenerateGeometryError",
    "EvalRecord",
    "LossWeights",
    "Mesh",
    "MeshFormatError",
    "MetricsReport",
    "NO_SYMMETRY",
    "NoiseModel",
    "ObjectMetrics",
    "Pose6D",
    "StudyBin",
    "SymmetrySpec",
    "add_distance",
    "adi_distance",
    "aggregate",
    "auc",
    "center_mesh",
    "centroid_loss",
    "correlation_study",
    "decode_heatmap",
    "default_noise_sweep",
    "default_reference_distance",
    "edge_loss",
    "estimate_distance",
    "geodesic_angle",
    "identity_rotation",
    "is_correct_add",
    "is_correct_proj",
    "is_rotation",
    "laplacian_loss",
    "lift_pose",
    "load_mesh",
    "load_mesh_file",
    "make_centroid_heatmap",
    "mask_bbox_diagonal",
    "mask_loss",
    "mesh_diameter",
    "mesh_loss",
    "multiscale_loss",
    "nearest_rotation",
    "neighborhood",
    "pose_loss",
    "procrustes_align",
    "procrustes_residual",
    "proj2d_error",
    "project_point",
    "project_points",
    "projected_bbox_diagonal",
    "random_rotation",
    "ray_from_pixel",
    "read_pgm",
    "rotation_about_axis",
    "rotation_to_ray",
    "simulate_reconstruction",
    "skew",
    "standardize",
    "symmetry_aware_pose_loss",
    "symmetry_rotations",
    "total_loss",
    "transform_mesh",
    "validate_rotation",
    "vertex_loss",
    "write_pgm",
]
