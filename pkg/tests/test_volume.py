import numpy as np
import pytest

from portalseg.geometry import ImageGeometry, Pose
from portalseg.volume import (
    TrackedFrame,
    Volume,
    plane_intersects,
    plane_voxel_coords,
    sample_catmull_rom,
    sample_nearest,
)


def test_volume_coordinate_roundtrip(rng):
    v = Volume(np.zeros((10, 12, 14)), 0.5, origin=[1.0, -2.0, 3.0])
    idx = rng.uniform(0, 9, (30, 3))
    np.testing.assert_allclose(v.world_to_voxel(v.voxel_to_world(idx)), idx, atol=1e-12)


def test_volume_extent():
    v = Volume(np.zeros((10, 20, 30)), 0.5)
    np.testing.assert_allclose(v.extent_mm, [5.0, 10.0, 15.0])


def test_volume_validation():
    with pytest.raises(ValueError):
        Volume(np.zeros((4, 4)), 0.5)
    with pytest.raises(ValueError):
        Volume(np.zeros((4, 4, 4)), 0.0)


def test_catmull_rom_exact_on_grid(rng):
    data = rng.uniform(0, 1, (8, 9, 10))
    idx = np.stack(np.meshgrid(*[np.arange(n) for n in data.shape], indexing="ij"), axis=-1)
    out = sample_catmull_rom(data, idx.astype(np.float64))
    np.testing.assert_allclose(out, data, atol=1e-12)


def test_catmull_rom_reproduces_linear_fields(rng):
    """An interpolating cubic is exact on degree-1 fields (away from borders)."""
    i, j, k = np.meshgrid(*[np.arange(16.0)] * 3, indexing="ij")
    data = 0.1 * i + 0.2 * j - 0.05 * k + 0.3
    pts = rng.uniform(2.0, 13.0, (200, 3))
    expected = 0.1 * pts[:, 0] + 0.2 * pts[:, 1] - 0.05 * pts[:, 2] + 0.3
    np.testing.assert_allclose(sample_catmull_rom(data, pts), expected, atol=1e-10)


def test_catmull_rom_outside_is_zero():
    data = np.ones((5, 5, 5))
    out = sample_catmull_rom(data, np.array([[10.0, 2.0, 2.0], [-1.0, 0.0, 0.0]]))
    np.testing.assert_array_equal(out, [0.0, 0.0])


def test_nearest_rounds_to_closest_voxel():
    data = np.arange(27.0).reshape(3, 3, 3)
    out = sample_nearest(data, np.array([[0.4, 0.6, 1.0], [2.0, 2.0, 2.0]]))
    np.testing.assert_array_equal(out, [data[0, 1, 1], data[2, 2, 2]])


def test_nearest_outside_is_zero():
    data = np.ones((3, 3, 3), dtype=np.uint8)
    out = sample_nearest(data, np.array([[3.0, 0.0, 0.0]]))
    assert out[0] == 0
    assert out.dtype == np.uint8


def test_plane_voxel_coords_axis_aligned():
    v = Volume(np.zeros((16, 16, 16)), 0.5)
    g = ImageGeometry(width=16, height=16, spacing=0.5)
    pose = Pose(np.eye(3), np.array([0.0, 0.0, 2.0]))
    coords = plane_voxel_coords(v, pose, g)
    assert coords.shape == (16, 16, 3)
    np.testing.assert_allclose(coords[3, 5], [5.0, 3.0, 4.0])


def test_plane_intersects():
    v = Volume(np.zeros((16, 16, 16)), 0.5)
    g = ImageGeometry(width=16, height=16, spacing=0.5)
    assert plane_intersects(v, Pose.identity(), g)
    assert not plane_intersects(v, Pose(np.eye(3), np.array([0.0, 0.0, 100.0])), g)


def test_tracked_frame_shape_check():
    g = ImageGeometry(width=8, height=4, spacing=0.5)
    TrackedFrame(np.zeros((4, 8), dtype=np.float32), g, Pose.identity())
    with pytest.raises(ValueError, match="dims"):
        TrackedFrame(np.zeros((8, 4), dtype=np.float32), g, Pose.identity())
