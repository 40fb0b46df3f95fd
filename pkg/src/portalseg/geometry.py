"""Rigid-transform algebra and image-plane <-> world mapping.

World units are millimeters everywhere; angles are radians internally and
degrees only at CLI surfaces.  The world frame is right-handed.  An image
plane lives in its pose's local xy-plane: pixel (px, py) maps to the local
point (px * spacing, py * spacing, 0) and then through the pose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ROT_TOL = 1e-9


def _orthonormalize(r: np.ndarray) -> np.ndarray:
    """Project a near-rotation matrix back onto SO(3) (polar decomposition)."""
    u, _, vt = np.linalg.svd(r)
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] *= -1.0
        out = u @ vt
    return out


@dataclass(frozen=True)
class Pose:
    """Rigid transform: x_world = rotation @ x_local + translation (mm)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        err = np.abs(r @ r.T - np.eye(3)).max()
        if err > 1e-6:
            raise ValueError(f"rotation is not orthonormal (max error {err:.3g})")
        if err > _ROT_TOL:
            r = _orthonormalize(r)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        self.rotation.setflags(write=False)
        self.translation.setflags(write=False)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=np.float64).reshape(4, 4)
        return Pose(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        """4x4 row-major homogeneous matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map local points (..., 3) into world coordinates."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    @staticmethod
    def rotation_about(axis: np.ndarray, angle_rad: float) -> "Pose":
        """Rotation by angle_rad about a (not necessarily unit) axis."""
        axis = np.asarray(axis, dtype=np.float64)
        n = np.linalg.norm(axis)
        if n == 0:
            raise ValueError("zero rotation axis")
        x, y, z = axis / n
        c, s = np.cos(angle_rad), np.sin(angle_rad)
        k = np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])
        r = np.eye(3) + s * k + (1 - c) * (k @ k)
        return Pose(r, np.zeros(3))

    @staticmethod
    def translation_of(t: np.ndarray) -> "Pose":
        return Pose(np.eye(3), np.asarray(t, dtype=np.float64))


def compose(a: Pose, b: Pose) -> Pose:
    """Composition: result maps x to a(b(x)).  Rotation re-normalized."""
    r = _orthonormalize(a.rotation @ b.rotation)
    t = a.rotation @ b.translation + a.translation
    return Pose(r, t)


def invert(p: Pose) -> Pose:
    r = p.rotation.T
    return Pose(r, -(r @ p.translation))


@dataclass(frozen=True)
class ImageGeometry:
    """2D ultrasound frame geometry with isotropic pixel spacing (mm/px).

    depth is the imaging depth in mm along the image y axis (probe face at
    y = 0); aspect_ratio is the crop width/height ratio of the usable linear
    footprint.
    """

    width: int
    height: int
    spacing: float
    depth: float = field(default=0.0)
    aspect_ratio: float = field(default=1.0)

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")
        if self.aspect_ratio <= 0:
            raise ValueError("aspect_ratio must be > 0")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dims must be positive")
        depth = self.depth if self.depth > 0 else self.height * self.spacing
        # the usable imaging depth may be cropped below the raw frame height,
        # but can never exceed it by more than one pixel
        if depth > self.height * self.spacing + self.spacing:
            raise ValueError("depth exceeds height * spacing")
        object.__setattr__(self, "depth", depth)


def pixel_to_world(g: ImageGeometry, p: Pose, px) -> np.ndarray:
    """World position (mm) of pixel coordinates (x, y); x runs along width.

    Accepts a single (2,) pixel or an (..., 2) array.  Rejects pixels outside
    [0, width) x [0, height).
    """
    px = np.asarray(px, dtype=np.float64)
    x, y = px[..., 0], px[..., 1]
    if np.any(x < 0) or np.any(x >= g.width) or np.any(y < 0) or np.any(y >= g.height):
        raise ValueError("pixel coordinates out of image bounds")
    local = np.stack([x * g.spacing, y * g.spacing, np.zeros_like(x)], axis=-1)
    return p.apply(local)
