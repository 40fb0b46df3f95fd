"""Regular 3D grids and the resampling kernels shared by every stage.

A Volume is a regular grid with isotropic spacing.  Voxel index (i, j, k)
sits at world position origin + orientation @ (i, j, k) * spacing (mm);
data is indexed data[i, j, k] (x, y, z order).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ImageGeometry, Pose


@dataclass
class Volume:
    data: np.ndarray
    spacing: float
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("volume data must be 3D")
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.orientation = np.asarray(self.orientation, dtype=np.float64).reshape(3, 3)

    @property
    def dims(self) -> tuple:
        return self.data.shape

    @property
    def extent_mm(self) -> np.ndarray:
        return np.array(self.data.shape, dtype=np.float64) * self.spacing

    def world_to_voxel(self, points: np.ndarray) -> np.ndarray:
        """Continuous voxel coordinates of world points (..., 3)."""
        pts = np.asarray(points, dtype=np.float64)
        return (pts - self.origin) @ self.orientation / self.spacing

    def voxel_to_world(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.float64)
        return idx @ self.orientation.T * self.spacing + self.origin

    def like(self, data: np.ndarray) -> "Volume":
        return Volume(data, self.spacing, self.origin.copy(), self.orientation.copy())


@dataclass
class TrackedFrame:
    """One acquired 2D frame: intensities in [0, 1] plus geometry and pose."""

    image: np.ndarray
    geometry: ImageGeometry
    pose: Pose
    timestamp: float = 0.0
    index: int = 0
    out_of_volume: bool = False

    def __post_init__(self):
        if self.image.shape != (self.geometry.height, self.geometry.width):
            raise ValueError("frame image dims do not match geometry")


def _catmull_rom_weights(t: np.ndarray) -> tuple:
    t2 = t * t
    t3 = t2 * t
    w0 = 0.5 * (-t3 + 2.0 * t2 - t)
    w1 = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
    w2 = 0.5 * (-3.0 * t3 + 4.0 * t2 + t)
    w3 = 0.5 * (t3 - t2)
    return w0, w1, w2, w3


def sample_catmull_rom(data: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Cubic Catmull-Rom sampling of a 3D array at continuous voxel coords.

    coords has shape (..., 3) in (x, y, z) index space.  The kernel is
    interpolating, so on-grid coordinates reproduce voxel values exactly.
    Points outside the grid sample as 0; the border is clamp-extended.
    """
    coords = np.asarray(coords, dtype=np.float64)
    shape = coords.shape[:-1]
    pts = coords.reshape(-1, 3)
    dims = np.array(data.shape)
    inside = np.all((pts >= 0) & (pts <= dims - 1), axis=1)

    base = np.floor(pts).astype(np.int64)
    frac = pts - base
    wx = _catmull_rom_weights(frac[:, 0])
    wy = _catmull_rom_weights(frac[:, 1])
    wz = _catmull_rom_weights(frac[:, 2])

    out = np.zeros(pts.shape[0], dtype=np.float64)
    for dx in range(4):
        ix = np.clip(base[:, 0] + dx - 1, 0, dims[0] - 1)
        for dy in range(4):
            iy = np.clip(base[:, 1] + dy - 1, 0, dims[1] - 1)
            wxy = wx[dx] * wy[dy]
            for dz in range(4):
                iz = np.clip(base[:, 2] + dz - 1, 0, dims[2] - 1)
                out += wxy * wz[dz] * data[ix, iy, iz]
    out *= inside
    return out.reshape(shape)


def sample_nearest(data: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Nearest-neighbor sampling; outside the grid returns 0."""
    coords = np.asarray(coords, dtype=np.float64)
    shape = coords.shape[:-1]
    pts = coords.reshape(-1, 3)
    dims = np.array(data.shape)
    inside = np.all((pts >= -0.5) & (pts < dims - 0.5), axis=1)
    idx = np.clip(np.rint(pts).astype(np.int64), 0, dims - 1)
    out = data[idx[:, 0], idx[:, 1], idx[:, 2]].astype(data.dtype)
    out = np.where(inside, out, np.zeros((), dtype=data.dtype))
    return out.reshape(shape)


def plane_voxel_coords(v: Volume, p: Pose, g: ImageGeometry) -> np.ndarray:
    """Continuous voxel coordinates of every pixel of a posed image plane.

    Returns an (height, width, 3) array.
    """
    xs = np.arange(g.width, dtype=np.float64) * g.spacing
    ys = np.arange(g.height, dtype=np.float64) * g.spacing
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    local = np.stack([gx, gy, np.zeros_like(gx)], axis=-1)
    world = p.apply(local)
    return v.world_to_voxel(world)


def plane_intersects(v: Volume, p: Pose, g: ImageGeometry) -> bool:
    coords = plane_voxel_coords(v, p, g)
    dims = np.array(v.dims)
    return bool(np.any(np.all((coords >= 0) & (coords <= dims - 1), axis=-1)))
