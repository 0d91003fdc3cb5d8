"""Orthogonal Procrustes alignment and rotation-difference losses."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meshpose import (
    DegenerateGeometryError,
    SymmetrySpec,
    geodesic_angle,
    is_rotation,
    pose_loss,
    procrustes_align,
    procrustes_residual,
    random_rotation,
    rotation_about_axis,
    symmetry_aware_pose_loss,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def centered_cloud(rng, n=20, spread=1.0):
    points = rng.normal(scale=spread, size=(n, 3))
    return points - points.mean(axis=0)


def summed_residual(reconstructed, canonical, rotation):
    return float(((reconstructed - canonical @ rotation.T) ** 2).sum())


class TestProcrustesAlign:
    def test_identical_sets_give_identity(self, tetra):
        points = tetra.vertices - tetra.vertices.mean(axis=0)
        r = procrustes_align(points, points)
        assert np.allclose(r, np.eye(3), atol=1e-12)

    def test_recovers_quarter_turn(self, rng):
        canonical = centered_cloud(rng)
        r_true = rotation_about_axis([0, 0, 1], np.pi / 2)
        r = procrustes_align(canonical @ r_true.T, canonical)
        assert np.abs(r - r_true).max() < 1e-9

    def test_mirrored_input_stays_proper_and_minimal(self, rng):
        canonical = centered_cloud(rng, n=15)
        mirrored = canonical * np.array([1.0, 1.0, -1.0])
        r = procrustes_align(mirrored, canonical)
        assert is_rotation(r)
        best = summed_residual(mirrored, canonical, r)
        sweep_rng = np.random.default_rng(4242)
        for _ in range(100_000):
            candidate = random_rotation(sweep_rng)
            assert best <= summed_residual(mirrored, canonical, candidate) + 1e-9

    @given(seed=seeds)
    @settings(max_examples=50, deadline=None)
    def test_recovery_exactness(self, seed):
        rng = np.random.default_rng(seed)
        canonical = centered_cloud(rng)
        r_true = random_rotation(rng)
        r = procrustes_align(canonical @ r_true.T, canonical)
        assert geodesic_angle(r, r_true) < 1e-9

    def test_minimality_against_random_sweep(self, rng):
        canonical = centered_cloud(rng)
        noisy = canonical @ random_rotation(rng).T + rng.normal(scale=0.1, size=canonical.shape)
        noisy -= noisy.mean(axis=0)
        r = procrustes_align(noisy, canonical)
        best = summed_residual(noisy, canonical, r)
        for _ in range(10_000):
            assert best <= summed_residual(noisy, canonical, random_rotation(rng)) + 1e-9

    def test_count_mismatch_rejected(self, rng):
        a = centered_cloud(rng, n=10)
        b = centered_cloud(rng, n=11)
        with pytest.raises(ValueError, match="counts differ"):
            procrustes_align(a, b)

    def test_too_few_points_rejected(self):
        pair = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
        with pytest.raises(ValueError, match="at least 3"):
            procrustes_align(pair, pair)

    def test_uncentered_input_rejected(self, rng):
        centered = centered_cloud(rng)
        with pytest.raises(ValueError, match="centered"):
            procrustes_align(centered + [1.0, 0, 0], centered)

    def test_collinear_points_degenerate(self):
        line = np.array([[-1.5, 0, 0], [-0.5, 0, 0], [0.5, 0, 0], [1.5, 0, 0]])
        with pytest.raises(DegenerateGeometryError):
            procrustes_align(line, line)


class TestProcrustesResidual:
    def test_exact_rotated_copy(self, rng):
        canonical = centered_cloud(rng)
        r = random_rotation(rng)
        assert procrustes_residual(canonical @ r.T, canonical, r) < 1e-12

    def test_bounded_by_max_offset(self, rng):
        canonical = centered_cloud(rng)
        r = random_rotation(rng)
        eps = 0.01
        offsets = rng.normal(size=canonical.shape)
        offsets *= eps / np.linalg.norm(offsets, axis=1, keepdims=True)
        assert procrustes_residual(canonical @ r.T + offsets, canonical, r) <= eps + 1e-12

    def test_matches_summation_oracle(self, rng):
        canonical = centered_cloud(rng, n=500)
        r = random_rotation(rng)
        noisy = canonical @ r.T + rng.normal(scale=0.05, size=canonical.shape)
        expected = np.sqrt(
            sum(
                np.linalg.norm(noisy[i] - r @ canonical[i]) ** 2
                for i in range(len(canonical))
            )
            / len(canonical)
        )
        assert procrustes_residual(noisy, canonical, r) == pytest.approx(expected, abs=1e-12)


class TestPoseLoss:
    def test_identical_rotations(self, rng):
        r = random_rotation(rng)
        assert pose_loss(r, r) == pytest.approx(0.0, abs=1e-9)

    def test_third_turn_gives_half_angle(self, rng):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        r = rotation_about_axis(axis, np.pi / 3)
        assert pose_loss(r, np.eye(3)) == pytest.approx(np.pi / 6, abs=1e-9)

    def test_half_turn_hits_upper_bound(self):
        r = rotation_about_axis([1, 0, 0], np.pi)
        assert pose_loss(r, np.eye(3)) == pytest.approx(np.pi / 2, abs=1e-9)

    @given(seed=seeds)
    @settings(max_examples=50)
    def test_equals_half_geodesic_angle(self, seed):
        rng = np.random.default_rng(seed)
        r1, r2 = random_rotation(rng), random_rotation(rng)
        assert pose_loss(r1, r2) == pytest.approx(geodesic_angle(r1, r2) / 2.0, abs=1e-7)

    @given(seed=seeds)
    @settings(max_examples=50)
    def test_symmetric_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        r1, r2 = random_rotation(rng), random_rotation(rng)
        forward, backward = pose_loss(r1, r2), pose_loss(r2, r1)
        assert forward == pytest.approx(backward, abs=1e-12)
        assert 0.0 <= forward <= np.pi / 2

    @given(seed=seeds)
    @settings(max_examples=50)
    def test_left_invariance(self, seed):
        rng = np.random.default_rng(seed)
        q, r1, r2 = (random_rotation(rng) for _ in range(3))
        assert pose_loss(q @ r1, q @ r2) == pytest.approx(pose_loss(r1, r2), abs=1e-9)


class TestSymmetryAwarePoseLoss:
    def test_symmetry_member_scores_zero(self, rng):
        gt = random_rotation(rng)
        est = gt @ rotation_about_axis([0, 0, 1], np.pi)
        assert symmetry_aware_pose_loss(est, gt, SymmetrySpec(order=2)) < 1e-9

    def test_order_1_equals_plain_loss(self, rng):
        est, gt = random_rotation(rng), random_rotation(rng)
        assert symmetry_aware_pose_loss(est, gt, SymmetrySpec()) == pytest.approx(
            pose_loss(est, gt), abs=1e-12
        )

    def test_order_4_matches_enumeration_oracle(self, rng):
        gt = random_rotation(rng)
        est = gt @ rotation_about_axis([0, 0, 1], np.pi / 3)
        candidates = [
            pose_loss(est, gt @ rotation_about_axis([0, 0, 1], j * np.pi / 2))
            for j in range(4)
        ]
        value = symmetry_aware_pose_loss(est, gt, SymmetrySpec(order=4))
        assert value == pytest.approx(min(candidates), abs=1e-12)
        assert value == pytest.approx(np.pi / 12, abs=1e-9)

    def test_continuous_symmetry_near_zero_on_axis_offset(self, rng):
        gt = random_rotation(rng)
        est = gt @ rotation_about_axis([0, 0, 1], 0.7)
        value = symmetry_aware_pose_loss(
            est, gt, SymmetrySpec(continuous=True, samples=36)
        )
        # worst-case gap is half the 10-degree sampling step, halved again
        assert value <= np.pi / 36 / 2 + 1e-9
