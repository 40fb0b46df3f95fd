import numpy as np
import pytest

from portalseg.geometry import ImageGeometry, Pose
from portalseg.phantom import axial_sweep_trajectory, simulate_sweep, sweep_geometry
from portalseg.reconstruction import (
    Accumulator,
    ReconSpec,
    fill_holes,
    reconstruct,
    splat_frame,
)
from portalseg.volume import TrackedFrame, Volume


def _constant_sweep(value=0.37, dims=(24, 24, 16)):
    v = Volume(np.full(dims, value), 0.5)
    g = sweep_geometry(v)
    poses = axial_sweep_trajectory(v, pitch_mm=0.5)
    # frames store float32, so the reconstructable constant is the f32 value
    return simulate_sweep(v, poses, g, noise_sigma=0.0), float(np.float32(value))


def test_splat_conserves_mass(rng):
    """Total splatted weight equals the in-bounds pixel count."""
    acc = Accumulator.for_grid((40, 40, 20), 0.5, np.zeros(3))
    g = ImageGeometry(width=32, height=32, spacing=0.5)
    rot = Pose.rotation_about([1, 1, 0], 0.3)
    pose = Pose(rot.rotation, np.array([2.0, 2.0, 3.0]))
    frame = TrackedFrame(rng.uniform(0, 1, (32, 32)).astype(np.float32), g, pose)
    skipped = splat_frame(acc, frame)
    total = acc.weight_sum.data.sum()
    assert total == pytest.approx(32 * 32 - skipped, abs=1e-6)


def test_constant_field_reconstruction():
    frames, value = _constant_sweep()
    vol, known, _ = reconstruct(frames, ReconSpec(spacing=0.5, fill_holes=False))
    assert np.abs(vol.data[known.data.astype(bool)] - value).max() < 1e-9


def test_fill_holes_preserves_constant():
    frames, value = _constant_sweep()
    vol, known, report = reconstruct(frames, ReconSpec(spacing=0.5, fill_holes=True))
    filled = known.data.astype(bool)
    assert report.fill.unknown_after < report.fill.unknown_before
    assert np.abs(vol.data[filled] - value).max() < 1e-9


def test_fill_holes_never_touches_known_voxels(rng):
    data = rng.uniform(0, 1, (12, 12, 12))
    known = rng.uniform(size=data.shape) < 0.6
    v = Volume(data * known, 0.5)
    out, out_known, _ = fill_holes(v, v.like(known.astype(np.float64)), max_radius=3)
    np.testing.assert_array_equal(out.data[known], data[known] * 1.0)
    assert out_known.data.astype(bool)[known].all()


def test_fill_holes_requires_known_data():
    v = Volume(np.zeros((8, 8, 8)), 0.5)
    with pytest.raises(ValueError, match="all-unknown"):
        fill_holes(v, v.like(np.zeros((8, 8, 8))), max_radius=2)


def test_reconstruct_empty_sequence_rejected():
    with pytest.raises(ValueError, match="empty"):
        reconstruct([], ReconSpec(spacing=0.5))


def test_frame_order_invariance(rng):
    """Any permutation of the input frames gives a bitwise-identical volume."""
    frames, _ = _constant_sweep()
    for f, img in zip(frames, rng.uniform(0, 1, (len(frames), 24, 24))):
        f.image = img.astype(np.float32)
    spec = ReconSpec(spacing=0.5)
    a, _, _ = reconstruct(list(frames), spec)
    order = rng.permutation(len(frames))
    b, _, _ = reconstruct([frames[i] for i in order], spec)
    assert np.array_equal(a.data, b.data)


def test_explicit_bounds():
    frames, value = _constant_sweep()
    spec = ReconSpec(spacing=0.5, origin=np.zeros(3), dims=(24, 24, 16), fill_holes=False)
    vol, known, _ = reconstruct(frames, spec)
    assert vol.dims == (24, 24, 16)
    assert np.abs(vol.data[known.data.astype(bool)] - value).max() < 1e-9


def test_spec_validation():
    with pytest.raises(ValueError):
        ReconSpec(spacing=0.0)
    with pytest.raises(ValueError, match="together"):
        ReconSpec(spacing=0.5, origin=np.zeros(3))


def test_phantom_sweep_reconstruction_known_fraction(recon):
    _, known, report = recon
    assert known.data.mean() > 0.95
    assert report.frames == 96
