"""Training-loss family over meshes, masks and centroid heatmaps.

Mesh losses compare a predicted mesh against groundtruth sharing the same
topology: squared vertex error, squared edge-length-squared error over
directed neighbor pairs, and a Laplacian smoothness term on the displacement
field. 2D losses cover silhouette masks (mean binary cross entropy) and
centroid heatmaps (summed squared error), combined across resolution scales
with geometric 1/2^i weights, and finally into a single weighted total.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, SymmetrySpec, symmetry_rotations

BCE_EPS = 1e-7


@dataclass
class LossWeights:
    """Nonnegative weights for the loss family.

    lambda_m / lambda_c scale the mask and centroid terms inside the
    multi-scale loss; lambda_v / lambda_e / lambda_l combine the mesh terms;
    lambda_s / lambda_g / lambda_p combine the scale, mesh-graph and
    alignment losses in the total.
    """

    lambda_m: float = 1.0
    lambda_c: float = 1.0
    lambda_v: float = 1.0
    lambda_e: float = 1.0
    lambda_l: float = 1.0
    lambda_s: float = 1.0
    lambda_g: float = 1.0
    lambda_p: float = 5.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")


def _check_same_topology(predicted: Mesh, groundtruth: Mesh):
    if predicted.n_vertices != groundtruth.n_vertices:
        raise ValueError(
            f"vertex counts differ: {predicted.n_vertices} vs {groundtruth.n_vertices}"
        )
    if not np.array_equal(predicted.edges, groundtruth.edges):
        raise ValueError("meshes have different edge sets")


def _directed_pairs(m: Mesh):
    if not m.edges.size:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    i = np.concatenate([m.edges[:, 0], m.edges[:, 1]])
    k = np.concatenate([m.edges[:, 1], m.edges[:, 0]])
    return i, k


def vertex_loss(predicted: Mesh, groundtruth: Mesh) -> float:
    """Sum over vertices of the squared position error (m^2)."""
    _check_same_topology(predicted, groundtruth)
    diff = predicted.vertices - groundtruth.vertices
    return float((diff ** 2).sum())


def edge_loss(predicted: Mesh, groundtruth: Mesh) -> float:
    """Sum over directed neighbor pairs of (|e_pred|^2 - |e_gt|^2)^2 (m^4).

    Each undirected edge contributes twice, once per direction.
    """
    _check_same_topology(predicted, groundtruth)
    i, k = _directed_pairs(predicted)
    if not i.size:
        return 0.0
    d_pred = ((predicted.vertices[i] - predicted.vertices[k]) ** 2).sum(axis=1)
    d_gt = ((groundtruth.vertices[i] - groundtruth.vertices[k]) ** 2).sum(axis=1)
    return float(((d_pred - d_gt) ** 2).sum())


def laplacian_loss(predicted: Mesh, groundtruth: Mesh) -> float:
    """Smoothness of the displacement field predicted - groundtruth (m^2).

    Each vertex is penalized by the squared deviation of its displacement
    from the mean displacement of its neighbors. Vertices without neighbors
    use a zero neighbor mean, so they contribute their own squared
    displacement.
    """
    _check_same_topology(predicted, groundtruth)
    disp = predicted.vertices - groundtruth.vertices
    n = len(disp)
    neighbor_sum = np.zeros_like(disp)
    counts = np.zeros(n)
    i, k = _directed_pairs(predicted)
    if i.size:
        np.add.at(neighbor_sum, i, disp[k])
        counts = np.bincount(i, minlength=n).astype(float)
    neighbor_mean = np.divide(
        neighbor_sum, counts[:, None], out=np.zeros_like(disp), where=counts[:, None] > 0
    )
    return float(((disp - neighbor_mean) ** 2).sum())


def mesh_loss(
    predicted: Mesh,
    groundtruth: Mesh,
    weights: LossWeights = LossWeights(),
    symmetry: SymmetrySpec = SymmetrySpec(),
) -> float:
    """Weighted vertex + edge + Laplacian loss, minimized over symmetry copies.

    For each rotation in the symmetry group the groundtruth vertices are
    rotated and all three terms evaluated against that copy; the smallest
    combined value is returned.
    """
    _check_same_topology(predicted, groundtruth)
    best = np.inf
    for s in symmetry_rotations(symmetry):
        rotated = Mesh(
            vertices=groundtruth.vertices @ s.T,
            edges=groundtruth.edges,
            faces=groundtruth.faces,
        )
        value = (
            weights.lambda_v * vertex_loss(predicted, rotated)
            + weights.lambda_e * edge_loss(predicted, rotated)
            + weights.lambda_l * laplacian_loss(predicted, rotated)
        )
        best = min(best, value)
    return float(best)


def mask_loss(predicted: np.ndarray, groundtruth: np.ndarray) -> float:
    """Mean per-pixel binary cross entropy between mask grids.

    Predicted probabilities are clamped to [1e-7, 1 - 1e-7] before the log
    so saturated predictions stay finite; groundtruth is expected binary.
    """
    pred = np.asarray(predicted, dtype=float)
    gt = np.asarray(groundtruth, dtype=float)
    if pred.shape != gt.shape:
        raise ValueError(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    p = np.clip(pred, BCE_EPS, 1.0 - BCE_EPS)
    return float(-(gt * np.log(p) + (1.0 - gt) * np.log(1.0 - p)).mean())


def centroid_loss(predicted: np.ndarray, groundtruth: np.ndarray) -> float:
    """Sum over pixels of the squared heatmap difference (no mean prefactor)."""
    pred = np.asarray(predicted, dtype=float)
    gt = np.asarray(groundtruth, dtype=float)
    if pred.shape != gt.shape:
        raise ValueError(f"heatmap shapes differ: {pred.shape} vs {gt.shape}")
    return float(((pred - gt) ** 2).sum())


def multiscale_loss(scales, weights: LossWeights = LossWeights()) -> float:
    """Mask + centroid loss summed over scales with 1/2^i weights.

    `scales` holds ((predicted_mask, groundtruth_mask),
    (predicted_heatmap, groundtruth_heatmap)) pairs ordered from the highest
    resolution (i = 0) downward.
    """
    scales = list(scales)
    if not scales:
        raise ValueError("multiscale_loss needs at least one scale")
    total = 0.0
    for i, ((pred_mask, gt_mask), (pred_heat, gt_heat)) in enumerate(scales):
        per_scale = weights.lambda_m * mask_loss(pred_mask, gt_mask)
        per_scale += weights.lambda_c * centroid_loss(pred_heat, gt_heat)
        total += per_scale / (2.0 ** i)
    return float(total)


def total_loss(ls: float, lg: float, la: float, weights: LossWeights = LossWeights()) -> float:
    """Weighted sum of the scale, mesh-graph and alignment losses."""
    return float(weights.lambda_s * ls + weights.lambda_g * lg + weights.lambda_p * la)
