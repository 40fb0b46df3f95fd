from .attention_unet import AttentionUNet
from .base import N_CLASSES, Prediction, SegmenterConfig, prediction_from_mask
from .brute_force import BruteForceIndex, MatchResult, brute_force_match
from .training import (
    TrainReport,
    dice_ce_loss,
    gradient_check,
    load_checkpoint,
    predict,
    predict_resized,
    save_checkpoint,
    split_indices,
    train,
)
from .vesselness import vesselness

__all__ = [
    "AttentionUNet",
    "BruteForceIndex",
    "MatchResult",
    "N_CLASSES",
    "Prediction",
    "SegmenterConfig",
    "TrainReport",
    "brute_force_match",
    "dice_ce_loss",
    "gradient_check",
    "load_checkpoint",
    "predict",
    "predict_resized",
    "prediction_from_mask",
    "save_checkpoint",
    "split_indices",
    "train",
    "vesselness",
]
