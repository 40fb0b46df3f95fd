"""Shared segmenter types: per-pixel 6-class predictions and configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_CLASSES = 6


@dataclass
class Prediction:
    """Per-pixel class probabilities (6, h, w) plus the argmax mask.

    Channel sums are 1 per pixel; argmax ties break toward the lowest
    branch id.
    """

    probabilities: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float32)
        if p.ndim != 3 or p.shape[0] != N_CLASSES:
            raise ValueError("probabilities must have shape (6, h, w)")
        sums = p.sum(axis=0)
        if np.abs(sums - 1.0).max() > 1e-5:
            raise ValueError("probability channels do not sum to 1")
        self.probabilities = p
        if self.mask is None:
            self.mask = p.argmax(axis=0).astype(np.uint8)


def prediction_from_mask(mask: np.ndarray) -> Prediction:
    """One-hot prediction from a hard label mask."""
    probs = np.zeros((N_CLASSES,) + mask.shape, dtype=np.float32)
    for c in range(N_CLASSES):
        probs[c] = mask == c
    return Prediction(probs, mask.astype(np.uint8))


@dataclass
class SegmenterConfig:
    variant: str = "attention_unet"  # brute_force | vesselness | attention_unet
    levels: int = 3
    base_channels: int = 16
    attention: bool = True
    input_size: tuple = (96, 40)  # (height, width)
    learning_rate: float = 5e-5
    batch_size: int = 10
    epochs: int = 20
    dice_weight: float = 1.0
    ce_weight: float = 1.0
    scheduler_period: int = 5  # warm-restart period in epochs
    split_ratio: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.variant not in ("brute_force", "vesselness", "attention_unet"):
            raise ValueError(f"unknown variant {self.variant}")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split ratio must be in (0, 1)")
        if self.levels < 2 or self.base_channels < 1:
            raise ValueError("bad model shape")
        self.input_size = tuple(int(x) for x in self.input_size)

    def to_dict(self) -> dict:
        d = dict(vars(self))
        d["input_size"] = list(self.input_size)
        return d

    @staticmethod
    def from_dict(d: dict) -> "SegmenterConfig":
        return SegmenterConfig(**d)
