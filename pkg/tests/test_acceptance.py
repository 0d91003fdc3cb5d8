"""Release acceptance gate.

Each test is one numbered acceptance criterion, checked end to end at its
stated tolerance; `pytest -v tests/test_acceptance.py` prints one pass/fail
line per criterion.
"""

import json
import time

import numpy as np
import pytest

from meshpose import (
    LossWeights,
    Mesh,
    Pose6D,
    add_distance,
    adi_distance,
    auc,
    correlation_study,
    decode_heatmap,
    default_noise_sweep,
    edge_loss,
    geodesic_angle,
    is_correct_add,
    laplacian_loss,
    lift_pose,
    make_centroid_heatmap,
    mesh_diameter,
    multiscale_loss,
    pose_loss,
    procrustes_align,
    projected_bbox_diagonal,
    random_rotation,
    ray_from_pixel,
    rotation_about_axis,
    rotation_to_ray,
    total_loss,
    transform_mesh,
)
from meshpose.cli import main

from conftest import (
    CUBE_OBJ,
    TETRA_OBJ,
    make_cube,
    make_point_cloud,
    make_tetra,
    random_pose,
)
from test_cli import pose_json, write_intrinsics


def test_criterion_1_procrustes_exactness():
    rng = np.random.default_rng(101)
    cloud = rng.normal(size=(200, 3))
    cloud -= cloud.mean(axis=0)
    mirrored = cloud * np.array([1.0, 1.0, -1.0])
    start = time.perf_counter()
    for _ in range(500):
        rotation = random_rotation(rng)
        recovered = procrustes_align(cloud @ rotation.T, cloud)
        assert geodesic_angle(recovered, rotation) < 1e-9
        assert abs(np.linalg.det(recovered) - 1.0) < 1e-9
    for _ in range(100):
        rotation = random_rotation(rng)
        improper = procrustes_align(mirrored @ rotation.T, cloud)
        assert abs(np.linalg.det(improper) - 1.0) < 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 2.0, f"600 alignments took {elapsed:.2f}s, budget 2s"


def test_criterion_2_half_angle_identity():
    rng = np.random.default_rng(102)
    for _ in range(100):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        theta = rng.uniform(1e-4, np.pi - 1e-4)
        rotation = rotation_about_axis(axis, theta)
        assert abs(pose_loss(rotation, np.eye(3)) - theta / 2.0) < 1e-9


def test_criterion_3_metric_oracles():
    rng = np.random.default_rng(103)
    cloud = make_point_cloud(rng, n=30)
    for _ in range(1000):
        gt, pred = random_pose(rng), random_pose(rng)
        assert adi_distance(gt, pred, cloud) <= add_distance(gt, pred, cloud) + 1e-12

    for _ in range(50):
        gt = random_pose(rng)
        offset = rng.normal(scale=0.3, size=3)
        shifted = Pose6D(gt.rotation, gt.translation + offset)
        assert abs(add_distance(gt, shifted, cloud) - np.linalg.norm(offset)) < 1e-12

    square = Mesh(
        vertices=np.array([[1.0, 1, 0], [-1.0, 1, 0], [-1.0, -1, 0], [1.0, -1, 0]]),
        edges=np.array([[0, 1], [1, 2], [2, 3], [0, 3]]),
    )
    gt = Pose6D.identity()
    quarter_turn = Pose6D(rotation_about_axis([0, 0, 1], np.pi / 2))
    diameter = mesh_diameter(square)
    assert adi_distance(gt, quarter_turn, square) < 1e-12
    assert add_distance(gt, quarter_turn, square) > 0.1 * diameter
    assert not is_correct_add(add_distance(gt, quarter_turn, square), diameter)


def test_criterion_4_auc_closed_form():
    rng = np.random.default_rng(104)
    cap = 0.1
    samples = 10_000
    thresholds = (np.arange(samples) + 0.5) / samples * cap
    for _ in range(50):
        distances = rng.uniform(0.0, 0.25, size=rng.integers(1, 60))
        numeric = (distances[None, :] < thresholds[:, None]).mean(axis=1).mean()
        assert abs(auc(distances, cap) - numeric) < 1e-4
    assert auc([0.05], 0.1) == 0.5


def test_criterion_5_lift_roundtrip(intrinsics, cube):
    rng = np.random.default_rng(105)
    diameter = mesh_diameter(cube)
    start = time.perf_counter()
    for _ in range(200):
        pixel = rng.uniform([40.0, 40.0], [600.0, 440.0])
        distance = rng.uniform(4.0, 12.0) * diameter
        allocentric = random_rotation(rng)
        observed = projected_bbox_diagonal(intrinsics, cube, allocentric, distance)
        pose = lift_pose(allocentric, tuple(pixel), observed, intrinsics, cube)
        expected_rotation = rotation_to_ray(ray_from_pixel(intrinsics, pixel)) @ allocentric
        assert geodesic_angle(pose.rotation, expected_rotation) < 1e-6
        recovered = np.linalg.norm(pose.translation)
        assert abs(recovered - distance) / distance <= 0.02
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"200 lifts took {elapsed:.2f}s, budget 5s"


def test_criterion_6_loss_fixtures():
    rng = np.random.default_rng(106)
    tetra = make_tetra()
    noisy = Mesh(
        vertices=tetra.vertices + rng.normal(scale=0.05, size=tetra.vertices.shape),
        edges=tetra.edges,
        faces=tetra.faces,
    )
    baseline = edge_loss(noisy, tetra)
    for _ in range(20):
        pred_pose = random_pose(rng, translation_scale=2.0)
        gt_pose = random_pose(rng, translation_scale=2.0)
        moved = edge_loss(transform_mesh(noisy, pred_pose), transform_mesh(tetra, gt_pose))
        assert abs(moved - baseline) < 1e-9

    cube = make_cube()
    shifted = Mesh(vertices=cube.vertices + [0.4, -0.2, 0.9], edges=cube.edges)
    assert laplacian_loss(shifted, cube) < 1e-12

    def unit_scale():
        gt_mask = np.zeros((4, 4))
        gt_heat = np.zeros((4, 4))
        pred_heat = gt_heat.copy()
        pred_heat[0, 0] = 1.0
        return (gt_mask.copy(), gt_mask), (pred_heat, gt_heat)

    scales = [unit_scale(), unit_scale(), unit_scale()]
    assert abs(multiscale_loss(scales) - 1.75) < 1e-6
    assert multiscale_loss(scales, LossWeights(lambda_m=0.0)) == 1.75

    assert total_loss(1.0, 1.0, 1.0) == 7.0


def test_criterion_7_heatmap_roundtrip():
    rng = np.random.default_rng(107)
    for _ in range(100):
        center = rng.uniform(20.0, 76.0, size=2)
        heatmap = make_centroid_heatmap(center, width=96, height=96, sigma=5.0)
        x, y = decode_heatmap(heatmap)
        assert np.hypot(x - center[0], y - center[1]) < 0.5


def test_criterion_8_self_validation_study():
    start = time.perf_counter()
    study = correlation_study(make_tetra(), 300, default_noise_sweep(0), bins=10)
    elapsed = time.perf_counter() - start
    assert study.vertex_loss_correlation is not None
    assert study.vertex_loss_correlation > 0.9
    means = [b.mean_pose_loss for b in study.vertex_loss_bins]
    assert len(means) == 10
    monotone_pairs = sum(b >= a for a, b in zip(means, means[1:]))
    assert monotone_pairs >= 8
    assert elapsed < 30.0, f"study took {elapsed:.2f}s, budget 30s"


def test_criterion_9_cli_determinism(tmp_path, intrinsics, capsys):
    meshes = tmp_path / "meshes"
    meshes.mkdir()
    (meshes / "tetra.obj").write_text(TETRA_OBJ)
    (meshes / "cube.obj").write_text(CUBE_OBJ)
    rng = np.random.default_rng(109)
    entries = []
    for i, object_id in enumerate(["tetra", "cube", "tetra", "cube"]):
        gt_rotation = random_rotation(rng)
        gt_translation = [0.1 * i, -0.05, 4.0 + 0.2 * i]
        wobble = rotation_about_axis(rng.normal(size=3), 0.03 * i)
        entries.append({
            "id": object_id,
            "gt": pose_json(gt_rotation, gt_translation),
            "pred": pose_json(gt_rotation @ wobble,
                              np.asarray(gt_translation) + 0.01 * i),
        })
    records = tmp_path / "records.jsonl"
    records.write_text("".join(json.dumps(e) + "\n" for e in entries))
    symmetry = tmp_path / "symmetry.json"
    symmetry.write_text(json.dumps({"tetra": True}))
    intrinsics_path = write_intrinsics(tmp_path, intrinsics)

    def evaluate(out_name):
        argv = [
            "evaluate", "--records", str(records), "--meshes", str(meshes),
            "--intrinsics", intrinsics_path, "--symmetry", str(symmetry),
            "--seed", "3", "--out", str(tmp_path / out_name),
        ]
        assert main(argv) == 0

    evaluate("eval_a.json")
    evaluate("eval_b.json")
    capsys.readouterr()
    assert (tmp_path / "eval_a.json").read_bytes() == (tmp_path / "eval_b.json").read_bytes()
    report_text = (tmp_path / "eval_a.txt").read_text()
    assert (tmp_path / "eval_a.txt").read_bytes() == (tmp_path / "eval_b.txt").read_bytes()

    lines = report_text.splitlines()
    assert lines[0].split() == ["object", "n", "mean", "dist", "[m]",
                                "ADD(-S)", "[%]", "proj2d", "[%]", "AUC"]
    assert any(line.startswith("tetra*") for line in lines)
    assert any(line.startswith("cube ") for line in lines)
    assert any(line.startswith("Average") for line in lines)

    def selfcheck(out_name):
        argv = [
            "selfcheck", "--mesh", str(meshes / "tetra.obj"),
            "--trials", "120", "--bins", "6", "--seed", "5",
            "--out", str(tmp_path / out_name),
        ]
        assert main(argv) == 0

    selfcheck("study_a.json")
    selfcheck("study_b.json")
    capsys.readouterr()
    assert (tmp_path / "study_a.json").read_bytes() == (tmp_path / "study_b.json").read_bytes()
    assert (tmp_path / "study_a.csv").read_bytes() == (tmp_path / "study_b.csv").read_bytes()
