"""Training, inference, checkpointing, and the finite-difference gradient
oracle for the trainable segmenter.

Everything is deterministic for a fixed config seed: single-threaded
torch, hash-based train/validation split, and per-epoch RNG derived from
the seed.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from ..evaluation import dice_report
from .attention_unet import AttentionUNet
from .base import N_CLASSES, Prediction, SegmenterConfig

DICE_EPS = 1e-5
CHECKPOINT_MAGIC = b"PSCKPT01"


def _deterministic_torch():
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)


def dice_ce_loss(logits, targets, dice_weight=1.0, ce_weight=1.0):
    """Soft multi-class DICE plus cross-entropy (default 1:1)."""
    ce = F.cross_entropy(logits, targets)
    probs = F.softmax(logits, dim=1)
    onehot = F.one_hot(targets, N_CLASSES).permute(0, 3, 1, 2).to(probs.dtype)
    inter = (probs * onehot).sum(dim=(2, 3))
    sums = probs.sum(dim=(2, 3)) + onehot.sum(dim=(2, 3))
    dice = (2.0 * inter + DICE_EPS) / (sums + DICE_EPS)
    dice_loss = 1.0 - dice.mean()
    return ce_weight * ce + dice_weight * dice_loss


def split_indices(n: int, split_ratio: float):
    """Deterministic 9:1-style split by a hash of the sample index."""
    val_share = max(int(round((1.0 - split_ratio) * 10)), 1)
    val = [i for i in range(n) if zlib.crc32(str(i).encode()) % 10 < val_share]
    train = [i for i in range(n) if i not in set(val)]
    return train, val


def predict(model: AttentionUNet, image: np.ndarray) -> Prediction:
    """Deterministic forward pass; rejects images of the wrong size."""
    if image.shape != model.config.input_size:
        raise ValueError(
            f"image dims {image.shape} do not match model input {model.config.input_size}"
        )
    _deterministic_torch()
    model.eval()
    with torch.inference_mode():
        x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))[None, None]
        probs = F.softmax(model(x), dim=1)[0].numpy()
    return Prediction(probs)


def predict_resized(model: AttentionUNet, image: np.ndarray) -> Prediction:
    """predict() for frames of any size: bilinear resize in, resize the
    probability maps back out, renormalize.
    """
    h, w = model.config.input_size
    if image.shape == (h, w):
        return predict(model, image)
    _deterministic_torch()
    model.eval()
    with torch.inference_mode():
        x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))[None, None]
        small = F.interpolate(x, size=(h, w), mode="bilinear", align_corners=False)
        probs = F.softmax(model(small), dim=1)
        probs = F.interpolate(probs, size=image.shape, mode="bilinear", align_corners=False)
        probs = probs / probs.sum(dim=1, keepdim=True)
    return Prediction(probs[0].numpy())


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_dice: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_dice: float = 0.0
    wall_clock_s: float = 0.0
    aborted: str = ""

    def to_dict(self) -> dict:
        return dict(vars(self))


def _to_tensors(samples, input_size):
    h, w = input_size
    images, masks = [], []
    for s in samples:
        x = torch.from_numpy(np.ascontiguousarray(s.image, dtype=np.float32))[None, None]
        m = torch.from_numpy(np.ascontiguousarray(s.mask, dtype=np.int64))[None, None]
        if s.image.shape != (h, w):
            x = F.interpolate(x, size=(h, w), mode="bilinear", align_corners=False)
            m = F.interpolate(m.float(), size=(h, w), mode="nearest").long()
        images.append(x[0])
        masks.append(m[0, 0])
    return torch.stack(images), torch.stack(masks)


def _validate(model, images, masks, config):
    model.eval()
    losses, preds, gts = [], [], []
    with torch.no_grad():
        for i in range(0, len(images), config.batch_size):
            xb, yb = images[i : i + config.batch_size], masks[i : i + config.batch_size]
            logits = model(xb)
            losses.append(float(dice_ce_loss(logits, yb, config.dice_weight, config.ce_weight)))
            pred = logits.argmax(dim=1).numpy().astype(np.uint8)
            preds.extend(list(pred))
            gts.extend(list(yb.numpy().astype(np.uint8)))
    vdice = dice_report(preds, gts).overall_mean
    return float(np.mean(losses)), vdice


def train(config: SegmenterConfig, samples):
    """Train the attention-gated segmenter with the standard recipe:
    Adam, cosine warm restarts, hash-based split, best-validation
    checkpoint selection.  Returns (model, TrainReport).
    """
    import time

    if len(samples) < 20:
        raise ValueError("dataset must contain at least 20 samples")
    _deterministic_torch()
    torch.manual_seed(config.seed)

    model = AttentionUNet(config)
    train_idx, val_idx = split_indices(len(samples), config.split_ratio)
    tr_images, tr_masks = _to_tensors([samples[i] for i in train_idx], config.input_size)
    va_images, va_masks = _to_tensors([samples[i] for i in val_idx], config.input_size)

    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    sched = torch.optim.lr_scheduler.CosineAnnealingWarmRestarts(
        opt, T_0=config.scheduler_period
    )
    report = TrainReport()
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    rng = np.random.default_rng([config.seed, 0xBA7C])
    t0 = time.perf_counter()

    for epoch in range(config.epochs):
        model.train()
        order = rng.permutation(len(tr_images))
        epoch_losses = []
        for i in range(0, len(order), config.batch_size):
            idx = torch.from_numpy(order[i : i + config.batch_size].copy())
            xb, yb = tr_images[idx], tr_masks[idx]
            opt.zero_grad()
            loss = dice_ce_loss(model(xb), yb, config.dice_weight, config.ce_weight)
            if not torch.isfinite(loss):
                report.aborted = f"non-finite loss at epoch {epoch}"
                report.wall_clock_s = time.perf_counter() - t0
                model.load_state_dict(best_state)
                return model, report
            loss.backward()
            opt.step()
            epoch_losses.append(float(loss.detach()))
        sched.step()

        val_loss, val_dice = _validate(model, va_images, va_masks, config)
        report.train_loss.append(float(np.mean(epoch_losses)))
        report.val_loss.append(val_loss)
        report.val_dice.append(val_dice)
        if val_dice > report.best_val_dice or report.best_epoch < 0:
            report.best_val_dice = val_dice
            report.best_epoch = epoch
            best_state = {k: v.clone() for k, v in model.state_dict().items()}

    model.load_state_dict(best_state)
    report.wall_clock_s = time.perf_counter() - t0
    return model, report


def save_checkpoint(path, model: AttentionUNet):
    """Versioned binary checkpoint: JSON header + little-endian f32 blobs."""
    state = model.state_dict()
    tensors = [
        {"name": k, "shape": list(v.shape), "dtype": "f32"} for k, v in state.items()
    ]
    header = json.dumps(
        {"version": 1, "config": model.config.to_dict(), "tensors": tensors},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(np.uint32(len(header)).tobytes())
        fh.write(header)
        for k, _ in ((t["name"], t) for t in tensors):
            fh.write(state[k].numpy().astype("<f4").tobytes())


def load_checkpoint(path) -> AttentionUNet:
    with open(path, "rb") as fh:
        if fh.read(8) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (hlen,) = np.frombuffer(fh.read(4), dtype=np.uint32)
        header = json.loads(fh.read(int(hlen)).decode("utf-8"))
        if header["version"] != 1:
            raise ValueError(f"unsupported checkpoint version {header['version']}")
        config = SegmenterConfig.from_dict(header["config"])
        model = AttentionUNet(config)
        state = {}
        for t in header["tensors"]:
            n = int(np.prod(t["shape"])) if t["shape"] else 1
            buf = np.frombuffer(fh.read(n * 4), dtype="<f4").reshape(t["shape"])
            state[t["name"]] = torch.from_numpy(buf.copy())
        model.load_state_dict(state)
    return model


def gradient_check(model: AttentionUNet, image: np.ndarray, mask: np.ndarray,
                   h: float = 1e-4, coords_per_tensor: int = 25, seed: int = 0) -> float:
    """Max relative error between autograd and central finite differences
    of the DICE+CE loss, over sampled parameter coordinates.  Run in
    float64 so the differences are resolvable.

    Two precautions make the comparison well posed on a loss that is only
    piecewise smooth (ReLU, max-pool):

    * the parameters are first jittered with small random noise, because
      a freshly constructed model has every bias at exactly zero, which
      parks kinks *on* the evaluation point (dead ReLU windows produce
      preactivations of exactly 0 in the next layer); a central
      difference across such a kink converges to a value autograd can
      never report.  At a generic point every kink sits a finite
      distance away and the comparison is meaningful.
    * each central difference is validated by step doubling: D(s) and
      D(s/2) must agree before the coordinate counts, and the
      Richardson-extrapolated value at the smallest consistent step is
      used.  Coordinates where no step size is self-consistent straddle
      a residual kink and are skipped; the function raises if that
      happens for more than half the sample, so the check keeps teeth.
    """
    if model.parameter_count() > 10_000:
        raise ValueError("gradient check is for small models (<= 10k parameters)")
    _deterministic_torch()
    model = model.double()
    rng = np.random.default_rng(seed)
    with torch.no_grad():
        for p in model.parameters():
            p.add_(torch.from_numpy(rng.normal(0.0, 0.05, p.shape)))
    x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float64))[None, None]
    y = torch.from_numpy(np.ascontiguousarray(mask, dtype=np.int64))[None]

    def loss_fn():
        return dice_ce_loss(model(x), y)

    model.zero_grad()
    loss_fn().backward()
    max_rel = 0.0
    checked = skipped = 0
    for p in model.parameters():
        flat = p.data.view(-1)
        grad = p.grad.view(-1)
        n = flat.numel()
        picks = rng.choice(n, size=min(coords_per_tensor, n), replace=False)
        for i in picks:
            orig = float(flat[i])

            def central(step: float) -> float:
                flat[i] = orig + step
                with torch.no_grad():
                    plus = float(loss_fn())
                flat[i] = orig - step
                with torch.no_grad():
                    minus = float(loss_fn())
                flat[i] = orig
                return (plus - minus) / (2.0 * step)

            fd = None
            for scale in (1.0, 0.25, 0.0625):
                d_h = central(scale * h)
                d_half = central(scale * h / 2.0)
                if abs(d_h - d_half) <= max(1e-9, 1e-5 * abs(d_half)):
                    fd = (4.0 * d_half - d_h) / 3.0  # keep refining downward
            if fd is None:
                skipped += 1  # a kink sits inside every stencil tried
                continue
            ga = float(grad[i])
            rel = abs(ga - fd) / max(abs(ga) + abs(fd), 1e-6)
            max_rel = max(max_rel, rel)
            checked += 1
    if checked < max(10, (checked + skipped) // 2):
        raise RuntimeError("gradient check skipped too many kink coordinates")
    return max_rel
