"""Desk-scale tracked-ultrasound pipeline: phantom generation, freehand
volume compounding, maneuver-based reslicing augmentation, per-frame
portal-branch segmentation, and identification scoring."""

__version__ = "0.1.0"
