"""Freehand volume compounding: trilinear splatting of tracked frames,
weighted-average compounding, and growing-kernel Gaussian hole filling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve

from .geometry import pixel_to_world
from .volume import Volume, plane_voxel_coords

MIN_KNOWN_FOR_FILL = 4  # known voxels a kernel must cover before it is used


@dataclass
class ReconSpec:
    spacing: float = 0.5
    origin: np.ndarray = None  # explicit bounds: origin + dims; None = auto
    dims: tuple = None
    fill_holes: bool = True
    max_kernel_radius: int = 3
    pad_voxels: int = 2

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")
        if self.max_kernel_radius < 1:
            raise ValueError("max kernel radius must be >= 1")
        if (self.origin is None) != (self.dims is None):
            raise ValueError("origin and dims must be given together")


@dataclass
class Accumulator:
    value_sum: Volume
    weight_sum: Volume
    skipped_pixels: int = 0

    @staticmethod
    def for_grid(dims, spacing, origin) -> "Accumulator":
        return Accumulator(
            Volume(np.zeros(dims, dtype=np.float64), spacing, origin),
            Volume(np.zeros(dims, dtype=np.float64), spacing, origin),
        )


def auto_bounds(frames, spec: ReconSpec):
    """Axis-aligned box of all frame corners, padded by spec.pad_voxels."""
    corners = []
    for f in frames:
        g = f.geometry
        px = np.array(
            [[0, 0], [g.width - 1, 0], [0, g.height - 1], [g.width - 1, g.height - 1]],
            dtype=np.float64,
        )
        corners.append(pixel_to_world(g, f.pose, px))
    corners = np.concatenate(corners)
    lo = corners.min(axis=0) - spec.pad_voxels * spec.spacing
    hi = corners.max(axis=0) + spec.pad_voxels * spec.spacing
    dims = tuple(np.ceil((hi - lo) / spec.spacing).astype(int) + 1)
    return lo, dims


def splat_frame(acc: Accumulator, frame) -> int:
    """Distribute every pixel into its 8 surrounding voxels with trilinear
    weights.  Returns the number of pixels skipped as out of bounds.
    """
    coords = plane_voxel_coords(acc.value_sum, frame.pose, frame.geometry)
    pts = coords.reshape(-1, 3)
    vals = frame.image.reshape(-1).astype(np.float64)
    dims = np.array(acc.value_sum.dims)

    # only pixels inside the valid continuous domain splat; every corner
    # carrying nonzero weight is then in-grid, so the deposited weight per
    # kept pixel is exactly 1 (mass conservation)
    keep = np.all((pts >= 0) & (pts <= dims - 1), axis=1)
    skipped = int((~keep).sum())
    pts, vals = pts[keep], vals[keep]
    base = np.floor(pts).astype(np.int64)
    frac = pts - base

    vsum = acc.value_sum.data
    wsum = acc.weight_sum.data
    for dx in (0, 1):
        wx = frac[:, 0] if dx else 1.0 - frac[:, 0]
        ix = base[:, 0] + dx
        for dy in (0, 1):
            wy = frac[:, 1] if dy else 1.0 - frac[:, 1]
            iy = base[:, 1] + dy
            for dz in (0, 1):
                wz = frac[:, 2] if dz else 1.0 - frac[:, 2]
                iz = base[:, 2] + dz
                w = wx * wy * wz
                ok = (
                    (ix >= 0) & (ix < dims[0])
                    & (iy >= 0) & (iy < dims[1])
                    & (iz >= 0) & (iz < dims[2])
                )
                np.add.at(vsum, (ix[ok], iy[ok], iz[ok]), w[ok] * vals[ok])
                np.add.at(wsum, (ix[ok], iy[ok], iz[ok]), w[ok])
    acc.skipped_pixels += skipped
    return skipped


def compound(acc: Accumulator):
    """Weighted average where any pixel landed; elsewhere 0 and unknown."""
    w = acc.weight_sum.data
    known = w > 0
    out = np.zeros_like(acc.value_sum.data)
    out[known] = acc.value_sum.data[known] / w[known]
    return acc.value_sum.like(out), acc.value_sum.like(known)


def _ball_kernel(radius: int, sigma: float) -> np.ndarray:
    r = radius
    ax = np.arange(-r, r + 1)
    gx, gy, gz = np.meshgrid(ax, ax, ax, indexing="ij")
    d2 = gx**2 + gy**2 + gz**2
    kern = np.exp(-d2 / (2.0 * sigma**2))
    kern[d2 > r * r] = 0.0
    kern[r, r, r] = 0.0  # the hole itself contributes nothing
    return kern


@dataclass
class FillReport:
    unknown_before: int = 0
    unknown_after: int = 0
    filled_per_radius: dict = field(default_factory=dict)


def fill_holes(v: Volume, mask: Volume, max_radius: int):
    """Fill unknown voxels from known neighbors with a spherical Gaussian
    kernel that grows until it covers at least MIN_KNOWN_FOR_FILL known
    voxels (sigma = radius / 2).  Known voxels are never modified; voxels
    beyond max_radius of any known data stay unknown.
    """
    known = mask.data.astype(bool)
    if not known.any():
        raise ValueError("cannot fill an all-unknown volume")
    src = v.data * known
    out = v.data.copy()
    out_known = known.copy()
    report = FillReport(unknown_before=int((~known).sum()))

    pending = ~known
    for radius in range(1, max_radius + 1):
        if not pending.any():
            break
        sigma = radius / 2.0
        kern = _ball_kernel(radius, sigma)
        counts = convolve(known.astype(np.float64), (kern > 0).astype(np.float64), mode="constant")
        wsum = convolve(known.astype(np.float64), kern, mode="constant")
        vsum = convolve(src, kern, mode="constant")
        enough = counts >= MIN_KNOWN_FOR_FILL
        if radius == max_radius:
            # last chance: accept any kernel that sees at least one known voxel
            enough = counts >= 1
        fill = pending & enough & (wsum > 0)
        out[fill] = vsum[fill] / wsum[fill]
        out_known[fill] = True
        report.filled_per_radius[radius] = int(fill.sum())
        pending = pending & ~fill
    report.unknown_after = int(pending.sum())
    return v.like(out), v.like(out_known), report


@dataclass
class ReconReport:
    frames: int = 0
    skipped_pixels: int = 0
    fill: FillReport = None


def reconstruct(frames, spec: ReconSpec):
    """Full compounding pipeline: splat, weighted-average, optional fill.

    Frames are splatted in (timestamp, index) order so any input permutation
    produces bitwise-identical sums.  Returns (volume, known-mask, report).
    """
    frames = sorted(frames, key=lambda f: (f.timestamp, f.index))
    if not frames:
        raise ValueError("empty frame sequence")
    if spec.origin is not None:
        origin, dims = np.asarray(spec.origin, dtype=np.float64), tuple(spec.dims)
    else:
        origin, dims = auto_bounds(frames, spec)
    acc = Accumulator.for_grid(dims, spec.spacing, origin)
    for f in frames:
        splat_frame(acc, f)
    vol, known = compound(acc)
    if not known.data.any():
        raise ValueError("no pixel landed inside the reconstruction bounds")
    report = ReconReport(frames=len(frames), skipped_pixels=acc.skipped_pixels)
    if spec.fill_holes:
        vol, known, report.fill = fill_holes(vol, known, spec.max_kernel_radius)
    return vol, known, report
