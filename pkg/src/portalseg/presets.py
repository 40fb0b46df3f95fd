"""Named parameter presets.

"desk" is the scaled default that runs in minutes on a laptop CPU;
"paper" pins the full-scale clinical constants (450x188 frames at 0.5 mm,
550x450x150 output volume, 50k samples, 256x112 model input).
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import ImageGeometry
from .phantom import PhantomSpec
from .reslice import ManeuverRanges


@dataclass
class Preset:
    name: str
    phantom: PhantomSpec
    frame_geometry: ImageGeometry
    recon_spacing: float
    ranges: ManeuverRanges
    dataset_size: int
    model_input: tuple  # (height, width)
    base_channels: int
    levels: int


def desk(seed: int = 0) -> Preset:
    return Preset(
        name="desk",
        phantom=PhantomSpec(dims=(128, 128, 96), spacing=0.5, seed=seed),
        frame_geometry=ImageGeometry(
            width=128, height=128, spacing=0.5, depth=48.0, aspect_ratio=0.418
        ),
        recon_spacing=0.5,
        ranges=ManeuverRanges(),
        dataset_size=2000,
        model_input=(96, 40),
        base_channels=16,
        levels=3,
    )


def paper(seed: int = 0) -> Preset:
    return Preset(
        name="paper",
        phantom=PhantomSpec(dims=(550, 450, 150), spacing=0.5, seed=seed),
        frame_geometry=ImageGeometry(
            width=450, height=188, spacing=0.5, depth=90.0, aspect_ratio=0.418
        ),
        recon_spacing=0.5,
        ranges=ManeuverRanges(),
        dataset_size=50000,
        model_input=(256, 112),
        base_channels=16,
        levels=3,
    )


def get(name: str, seed: int = 0) -> Preset:
    if name == "desk":
        return desk(seed)
    if name == "paper":
        return paper(seed)
    raise ValueError(f"unknown preset: {name}")
