"""Procedural liver-like phantom: a 5-branch portal tree rasterized into
label + intensity volumes, plus a simulated tracked linear-probe sweep.

The phantom replaces a real specimen so every downstream stage has a
ground-truth oracle.  Everything is a pure function of (spec, seed,
trajectory).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.spatial import cKDTree

from .geometry import ImageGeometry, Pose
from .volume import TrackedFrame, Volume, plane_voxel_coords, sample_catmull_rom

BRANCH_NAMES = ("Background", "MPV", "RLPV", "RMPV", "LMPV", "LLPV")


class BranchId(IntEnum):
    Background = 0
    MPV = 1
    RLPV = 2
    RMPV = 3
    LMPV = 4
    LLPV = 5


@dataclass
class Branch:
    branch_id: BranchId
    centerline: np.ndarray  # (n, 3) mm
    radii: np.ndarray  # (n,) mm


@dataclass
class VesselTree:
    branches: list
    parents: dict  # BranchId -> BranchId, MPV maps to itself (root)

    def branch(self, branch_id: BranchId) -> Branch:
        for b in self.branches:
            if b.branch_id == branch_id:
                return b
        raise KeyError(branch_id)


@dataclass
class PhantomSpec:
    dims: tuple = (128, 128, 96)
    spacing: float = 0.5
    seed: int = 0
    parenchyma_mean: float = 0.55
    speckle_sigma: float = 0.15
    lumen_intensity: float = 0.08
    attenuation_per_mm: float = 0.004
    trunk_radius_range: tuple = (2.6, 2.8)
    child_radius_range: tuple = (2.6, 3.0)
    child_length_range: tuple = (26.0, 32.0)

    def __post_init__(self):
        if min(self.dims) < 32:
            raise ValueError("phantom dims must be at least 32 per axis")
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")
        if self.trunk_radius_range[0] <= 2.0 or self.child_radius_range[0] <= 2.0:
            raise ValueError("labeled branches must have radii > 2 mm")

    @property
    def extent_mm(self) -> np.ndarray:
        return np.array(self.dims, dtype=np.float64) * self.spacing


def _curve(start, end, bow, n=24):
    """Quadratic Bezier polyline from start to end, bowed by the bow vector."""
    t = np.linspace(0.0, 1.0, n)[:, None]
    mid = 0.5 * (start + end) + bow
    return (1 - t) ** 2 * start + 2 * t * (1 - t) * mid + t**2 * end


def generate_tree(spec: PhantomSpec) -> VesselTree:
    """Build the 5-branch portal tree; deterministic for a given spec seed.

    The trunk runs along x through the volume middle; the four children
    leave the trunk toward the volume corners in y/z.  All branches keep a
    safety margin of one radius from the volume faces.
    """
    rng = np.random.default_rng([spec.seed, 0x7EEE])
    ex, ey, ez = spec.extent_mm
    max_r = max(spec.trunk_radius_range[1], spec.child_radius_range[1])
    if min(ex, ey, ez) < 8 * max_r:
        raise ValueError("volume too small to fit the requested branch radii")

    trunk_r = rng.uniform(*spec.trunk_radius_range)
    start = np.array([0.12 * ex, 0.52 * ey, 0.50 * ez])
    end = np.array([0.88 * ex, 0.48 * ey, 0.50 * ez])
    bow = np.array([0.0, rng.uniform(-0.04, 0.04) * ey, rng.uniform(-0.05, 0.05) * ez])
    trunk_line = _curve(start, end, bow, n=32)
    trunk = Branch(
        BranchId.MPV, trunk_line, np.linspace(trunk_r, 0.9 * trunk_r, len(trunk_line))
    )

    # children leave the trunk at staggered stations, alternating y/z sides
    stations = np.array([0.22, 0.42, 0.60, 0.80]) + rng.uniform(-0.03, 0.03, 4)
    sides = [(+1, +1), (-1, +1), (+1, -1), (-1, -1)]
    branches = [trunk]
    parents = {BranchId.MPV: BranchId.MPV}
    for child_id, station, (sy, sz) in zip(
        (BranchId.RLPV, BranchId.RMPV, BranchId.LMPV, BranchId.LLPV), stations, sides
    ):
        idx = int(round(station * (len(trunk_line) - 1)))
        root = trunk_line[idx]
        length = rng.uniform(*spec.child_length_range)
        radius = rng.uniform(*spec.child_radius_range)
        direction = np.array(
            [rng.uniform(0.15, 0.4), sy * rng.uniform(0.7, 0.9), sz * rng.uniform(0.35, 0.55)]
        )
        direction /= np.linalg.norm(direction)
        tip = root + direction * length
        margin = radius + 2.0 * spec.spacing
        tip = np.clip(tip, margin, spec.extent_mm - margin)
        bow = rng.uniform(-2.0, 2.0, 3)
        line = _curve(root, tip, bow, n=20)
        branches.append(Branch(child_id, line, np.linspace(radius, 0.85 * radius, len(line))))
        parents[child_id] = BranchId.MPV

    return VesselTree(branches, parents)


def _densify(branch: Branch, step_mm: float = 0.25):
    """Resample a branch centerline at a fixed arc-length step."""
    pts, radii = branch.centerline, branch.radii
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    n = max(int(np.ceil(total / step_mm)) + 1, 2)
    si = np.linspace(0.0, total, n)
    out_pts = np.stack([np.interp(si, s, pts[:, k]) for k in range(3)], axis=1)
    out_r = np.interp(si, s, radii)
    return out_pts, out_r


def rasterize(tree: VesselTree, spec: PhantomSpec):
    """Rasterize the tree into (label, intensity) volumes sharing one grid.

    A voxel takes the branch whose tube surface it penetrates deepest;
    exact ties go to the smaller branch id.  Intensity is dark lumen inside
    vessels, multiplicative speckle parenchyma outside, with exponential
    depth attenuation along the volume y axis.
    """
    nx, ny, nz = spec.dims
    xs = (np.arange(nx) + 0.0) * spec.spacing
    ys = (np.arange(ny) + 0.0) * spec.spacing
    zs = (np.arange(nz) + 0.0) * spec.spacing
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)

    labels = np.zeros(pts.shape[0], dtype=np.uint8)
    best = np.full(pts.shape[0], np.inf)
    for branch in sorted(tree.branches, key=lambda b: int(b.branch_id)):
        line, radii = _densify(branch)
        tree_kd = cKDTree(line)
        dist, nearest = tree_kd.query(pts, workers=1)
        depth = dist - radii[nearest]  # negative inside the capsule
        hit = (depth <= 0.0) & (depth < best - 1e-12)
        labels[hit] = int(branch.branch_id)
        best[hit] = depth[hit]
    label_vol = Volume(labels.reshape(spec.dims), spec.spacing)

    rng = np.random.default_rng([spec.seed, 0x1A7E])
    speckle = np.exp(rng.normal(0.0, spec.speckle_sigma, spec.dims))
    intensity = spec.parenchyma_mean * speckle
    lumen_noise = np.exp(rng.normal(0.0, 0.2, spec.dims))
    lumen = np.clip(spec.lumen_intensity * lumen_noise, 0.0, 0.15)
    vessel = label_vol.data > 0
    intensity[vessel] = lumen[vessel]
    atten = np.exp(-spec.attenuation_per_mm * ys)[None, :, None]
    intensity = np.clip(intensity * atten, 0.0, 1.0).astype(np.float64)
    return label_vol, Volume(intensity, spec.spacing)


def axial_sweep_trajectory(v: Volume, pitch_mm: float) -> list:
    """Parallel axis-aligned slices along z covering the full volume."""
    n = int(np.floor((v.dims[2] - 1) * v.spacing / pitch_mm)) + 1
    poses = []
    for k in range(n):
        t = v.origin + v.orientation @ np.array([0.0, 0.0, k * pitch_mm])
        poses.append(Pose(v.orientation, t))
    return poses


def sweep_geometry(v: Volume) -> ImageGeometry:
    """Frame geometry whose pixel grid matches the volume x/y voxel grid."""
    return ImageGeometry(width=v.dims[0], height=v.dims[1], spacing=v.spacing)


def simulate_sweep(
    v: Volume,
    trajectory: list,
    g: ImageGeometry,
    noise_seed: int = 0,
    noise_sigma: float = 0.02,
    fps: float = 15.0,
) -> list:
    """Sample one frame per pose with cubic interpolation plus per-frame
    multiplicative speckle noise.  Poses entirely outside the volume yield
    a zero frame flagged out_of_volume.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    frames = []
    dims = np.array(v.dims)
    for i, pose in enumerate(trajectory):
        coords = plane_voxel_coords(v, pose, g)
        inside = np.all((coords >= 0) & (coords <= dims - 1), axis=-1)
        if not inside.any():
            img = np.zeros((g.height, g.width), dtype=np.float32)
            frames.append(TrackedFrame(img, g, pose, i / fps, i, out_of_volume=True))
            continue
        img = sample_catmull_rom(v.data, coords)
        if noise_sigma > 0:
            rng = np.random.default_rng([noise_seed, i])
            img = img * np.exp(rng.normal(0.0, noise_sigma, img.shape))
        img = np.clip(img, 0.0, 1.0).astype(np.float32)
        frames.append(TrackedFrame(img, g, pose, i / fps, i))
    return frames
