"""Shared fixtures and fixture-building helpers for the test suite."""

import numpy as np
import pytest

from meshpose import CameraIntrinsics, Mesh, Pose6D, random_rotation

TETRA_OBJ = """\
# irregular tetrahedron
v 0.0 0.0 0.0
v 1.0 0.0 0.0
v 0.0 1.2 0.0
v 0.0 0.0 0.8
f 1 2 3
f 1 2 4
f 1 3 4
f 2 3 4
"""

CUBE_OBJ = """\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 2 3
f 1 3 4
f 5 7 6
f 5 8 7
f 1 6 2
f 1 5 6
f 3 8 4
f 3 7 8
f 1 4 8
f 1 8 5
f 2 6 7
f 2 7 3
"""

PYRAMID_PLY = """\
ply
format ascii 1.0
comment square pyramid
element vertex 5
property float x
property float y
property float z
element face 4
property list uchar int vertex_indices
end_header
-1 -1 0
1 -1 0
1 1 0
-1 1 0
0 0 1.5
3 0 1 4
3 1 2 4
3 2 3 4
3 3 0 4
"""


def make_tetra() -> Mesh:
    """Irregular tetrahedron with all 6 edges and 4 faces, not centered."""
    vertices = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.2, 0.0],
        [0.0, 0.0, 0.8],
    ])
    faces = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    edges = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
    return Mesh(vertices=vertices, edges=np.array(edges), faces=faces)


def make_cube(side: float = 1.0) -> Mesh:
    """Axis-aligned cube centered at the origin with its 12 side edges."""
    h = side / 2.0
    vertices = np.array([[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)])
    edges = [
        [i, j]
        for i in range(8)
        for j in range(i + 1, 8)
        if np.isclose(np.abs(vertices[i] - vertices[j]).sum(), side)
    ]
    return Mesh(vertices=vertices, edges=np.array(edges))


def make_point_cloud(rng: np.random.Generator, n: int, spread: float = 1.0) -> Mesh:
    """Edge-free mesh of seeded random points centered on their centroid."""
    points = rng.normal(scale=spread, size=(n, 3))
    return Mesh(vertices=points - points.mean(axis=0), edges=np.zeros((0, 2), dtype=int))


def random_pose(rng: np.random.Generator, translation_scale: float = 1.0) -> Pose6D:
    return Pose6D(
        rotation=random_rotation(rng),
        translation=rng.normal(scale=translation_scale, size=3),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def tetra():
    return make_tetra()


@pytest.fixture
def cube():
    return make_cube()


@pytest.fixture
def intrinsics():
    return CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)
