"""Oblique reslicing of labeled volumes and maneuver-based dataset
generation.

Probe maneuvers are expressed in the frame's local axes: x = lateral
(width), y = axial (depth into tissue), z = plane normal (sweep
direction).  Percentage-valued maneuvers are translation amplitudes:
uniform in +-(fraction * volume extent along that axis) / 2.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import ImageGeometry, Pose, compose
from .volume import (
    Volume,
    plane_intersects,
    plane_voxel_coords,
    sample_catmull_rom,
    sample_nearest,
)


@dataclass
class ManeuverRanges:
    rotation_deg: float = 180.0
    tilt_deg: float = 30.0
    rock_deg: float = 12.0
    slide: float = 0.8
    transversal_slide: float = 0.4
    lift: float = 0.15
    brightness: float = 0.3
    contrast: float = 0.3
    hflip_prob: float = 0.5

    def __post_init__(self):
        for name in ("slide", "transversal_slide", "lift", "brightness", "contrast", "hflip_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a fraction in [0, 1]")
        for name in ("rotation_deg", "tilt_deg", "rock_deg"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class AugmentParams:
    rotation_deg: float = 0.0
    tilt_deg: float = 0.0
    rock_deg: float = 0.0
    slide_mm: float = 0.0
    transversal_slide_mm: float = 0.0
    lift_mm: float = 0.0
    brightness: float = 0.0
    contrast: float = 1.0
    hflip: bool = False
    seed: tuple = ()

    def to_dict(self) -> dict:
        return {
            "rotation_deg": self.rotation_deg,
            "tilt_deg": self.tilt_deg,
            "rock_deg": self.rock_deg,
            "slide_mm": self.slide_mm,
            "transversal_slide_mm": self.transversal_slide_mm,
            "lift_mm": self.lift_mm,
            "brightness": self.brightness,
            "contrast": self.contrast,
            "hflip": self.hflip,
            "seed": list(self.seed),
        }

    @staticmethod
    def from_dict(d: dict) -> "AugmentParams":
        d = dict(d)
        d["seed"] = tuple(d.get("seed", ()))
        return AugmentParams(**d)


@dataclass
class SyntheticSample:
    image: np.ndarray
    mask: np.ndarray
    pose: Pose
    params: AugmentParams

    def __post_init__(self):
        if self.image.shape != self.mask.shape:
            raise ValueError("image and mask dims differ")


def sample_plane(v: Volume, labels: Volume, p: Pose, g: ImageGeometry):
    """Oblique slice: cubic Catmull-Rom intensities (clamped to [0, 1]) and
    nearest-neighbor labels.  Out-of-volume pixels are 0 / background.
    """
    if not plane_intersects(v, p, g):
        raise ValueError("slice plane misses the volume entirely")
    coords = plane_voxel_coords(v, p, g)
    image = np.clip(sample_catmull_rom(v.data, coords), 0.0, 1.0).astype(np.float32)
    # the label grid may sit at a different origin than the intensity grid
    mask = sample_nearest(labels.data, plane_voxel_coords(labels, p, g)).astype(np.uint8)
    return image, mask


def draw_maneuver(rng, ranges: ManeuverRanges, base: Pose, extents_mm, pivot_mm=(0.0, 0.0, 0.0)):
    """One uniform independent draw per maneuver inside its range.

    pose = base o translations o rotations, with the rotations pivoting
    about the local point pivot_mm (the crop center, so the imaged
    footprint stays near the volume).  Slide moves along the local z
    (sweep), transversal slide along x, lift along y; their amplitudes
    come from the matching volume extents.
    """
    extents_mm = np.asarray(extents_mm, dtype=np.float64)
    params = AugmentParams(
        rotation_deg=rng.uniform(-ranges.rotation_deg, ranges.rotation_deg),
        tilt_deg=rng.uniform(-ranges.tilt_deg, ranges.tilt_deg),
        rock_deg=rng.uniform(-ranges.rock_deg, ranges.rock_deg),
        transversal_slide_mm=rng.uniform(-0.5, 0.5) * ranges.transversal_slide * extents_mm[0],
        lift_mm=rng.uniform(-0.5, 0.5) * ranges.lift * extents_mm[1],
        slide_mm=rng.uniform(-0.5, 0.5) * ranges.slide * extents_mm[2],
        brightness=rng.uniform(-ranges.brightness, ranges.brightness),
        contrast=1.0 + rng.uniform(-ranges.contrast, ranges.contrast),
        hflip=bool(rng.uniform() < ranges.hflip_prob),
    )
    rot = compose(
        Pose.rotation_about([0, 1, 0], np.deg2rad(params.rock_deg)),
        compose(
            Pose.rotation_about([1, 0, 0], np.deg2rad(params.tilt_deg)),
            Pose.rotation_about([0, 0, 1], np.deg2rad(params.rotation_deg)),
        ),
    )
    pivot = np.asarray(pivot_mm, dtype=np.float64)
    pivoted = compose(Pose.translation_of(pivot), compose(rot, Pose.translation_of(-pivot)))
    trans = Pose.translation_of(
        [params.transversal_slide_mm, params.lift_mm, params.slide_mm]
    )
    pose = compose(base, compose(trans, pivoted))
    return pose, params


def crop_size(g: ImageGeometry) -> tuple:
    """(height, width) in pixels of the linear-footprint central crop."""
    h = int(round(g.depth / g.spacing))
    w = int(round(h * g.aspect_ratio))
    return h, w


def central_crop(image: np.ndarray, mask: np.ndarray, g: ImageGeometry):
    """Crop to the linear US footprint: anchored at the probe face (top),
    centered laterally.  Image and mask get identical offsets.
    """
    h, w = crop_size(g)
    if image.shape[0] < h or image.shape[1] < w:
        raise ValueError("source smaller than crop")
    x0 = (image.shape[1] - w) // 2
    return image[:h, x0 : x0 + w], mask[:h, x0 : x0 + w]


def apply_intensity(image: np.ndarray, brightness: float, contrast: float) -> np.ndarray:
    """Gain-style intensity shift: contrast about 0.5, then brightness."""
    return np.clip((image - 0.5) * contrast + 0.5 + brightness, 0.0, 1.0).astype(np.float32)


def render_mask(labels: Volume, pose: Pose, params: AugmentParams, g: ImageGeometry) -> np.ndarray:
    """Re-derive a sample's mask from its stored pose and params (the
    deterministic label path: nearest-neighbor slice, crop, optional flip).
    """
    coords = plane_voxel_coords(labels, pose, g)
    mask = sample_nearest(labels.data, coords).astype(np.uint8)
    _, mask = central_crop(mask, mask, g)
    if params.hflip:
        mask = mask[:, ::-1]
    return np.ascontiguousarray(mask)


def base_sweep_pose(v: Volume, g: ImageGeometry, z_mm: float) -> Pose:
    """Axis-aligned slice pose with the crop footprint laterally centered."""
    _, w = crop_size(g)
    offset_x = 0.5 * (v.extent_mm[0] - w * g.spacing)
    t = v.origin + v.orientation @ np.array([offset_x, 0.0, z_mm])
    return Pose(v.orientation, t)


def make_sample(
    v: Volume, labels: Volume, ranges: ManeuverRanges, g: ImageGeometry, seed, index: int
) -> SyntheticSample:
    """Deterministically build sample `index` of the dataset stream."""
    rng = np.random.default_rng([seed, index])
    z = rng.uniform(0.2, 0.8) * v.extent_mm[2]
    base = base_sweep_pose(v, g, z)
    h, w = crop_size(g)
    pivot = (0.5 * w * g.spacing, 0.5 * h * g.spacing, 0.0)
    pose, params = draw_maneuver(rng, ranges, base, v.extent_mm, pivot_mm=pivot)
    params.seed = (int(seed), int(index))

    image = np.clip(sample_catmull_rom(v.data, plane_voxel_coords(v, pose, g)), 0.0, 1.0)
    mask = sample_nearest(labels.data, plane_voxel_coords(labels, pose, g)).astype(np.uint8)
    image, mask = central_crop(image, mask, g)
    if params.hflip:
        image, mask = image[:, ::-1], mask[:, ::-1]
    image = apply_intensity(image, params.brightness, params.contrast)
    return SyntheticSample(
        np.ascontiguousarray(image, dtype=np.float32),
        np.ascontiguousarray(mask),
        pose,
        params,
    )


@dataclass
class DatasetStats:
    count: int = 0
    labeled_fraction: float = 0.0
    seconds: float = 0.0
    samples_per_second: float = 0.0


def generate_dataset(v: Volume, labels: Volume, ranges: ManeuverRanges, n: int, seed, g: ImageGeometry):
    """Generate n synthetic samples; deterministic for (seed, n) because each
    sample derives its own RNG stream from (seed, index).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    h, w = crop_size(g)
    if h > g.height or w > g.width:
        raise ValueError("volume slice geometry too small for the crop")
    t0 = time.perf_counter()
    samples = [make_sample(v, labels, ranges, g, seed, i) for i in range(n)]
    dt = time.perf_counter() - t0
    labeled = sum(1 for s in samples if s.mask.any())
    stats = DatasetStats(
        count=n,
        labeled_fraction=labeled / n,
        seconds=dt,
        samples_per_second=n / dt if dt > 0 else float("inf"),
    )
    return samples, stats
