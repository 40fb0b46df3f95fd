"""Metrics and validation protocols: per-branch DICE, windowed SSIM,
ground-truth projection, centroid identification with a millimeter
tolerance, and throughput measurement.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d, distance_transform_edt

from .geometry import ImageGeometry, Pose, pixel_to_world
from .phantom import BRANCH_NAMES
from .volume import Volume, plane_intersects, plane_voxel_coords, sample_nearest

# reference constants of the standard windowed structural-similarity index
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_SIGMA = 1.5
_SSIM_WIN = 11


def dice(pred_mask: np.ndarray, gt_mask: np.ndarray, branch: int) -> float:
    """Overlap 2|P^G| / (|P|+|G|) of one branch; both empty scores 1.0."""
    if pred_mask.shape != gt_mask.shape:
        raise ValueError("mask dims differ")
    p = pred_mask == branch
    g = gt_mask == branch
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((p & g).sum()) / denom


def _ssim_kernel() -> np.ndarray:
    half = _SSIM_WIN // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * _SSIM_SIGMA**2))
    return k / k.sum()


def _filt(a: np.ndarray) -> np.ndarray:
    """Separable Gaussian window along the last two axes (reflect border)."""
    k = _ssim_kernel()
    out = correlate1d(a, k, axis=-1, mode="reflect")
    return correlate1d(out, k, axis=-2, mode="reflect")


def ssim_map_many(query: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Mean SSIM of one query image against a stack (n, h, w) of images.

    Vectorized over the stack; intensities are assumed in [0, 1]
    (dynamic range 1).
    """
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    q = query.astype(np.float64)
    s = stack.astype(np.float64)
    mu_q = _filt(q)
    var_q = _filt(q * q) - mu_q * mu_q
    mu_s = _filt(s)
    var_s = _filt(s * s) - mu_s * mu_s
    cov = _filt(s * q[None, :, :]) - mu_s * mu_q[None, :, :]
    num = (2.0 * mu_q[None] * mu_s + c1) * (2.0 * cov + c2)
    den = (mu_q[None] * mu_q[None] + mu_s * mu_s + c1) * (var_q[None] + var_s + c2)
    return (num / den).mean(axis=(1, 2))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError("image dims differ")
    return float(ssim_map_many(a, b[None, :, :])[0])


def project_ground_truth(labels: Volume, pose: Pose, g: ImageGeometry) -> np.ndarray:
    """Nearest-neighbor projection of the 3D labels onto a posed frame;
    doubles as the oracle segmenter.
    """
    if not plane_intersects(labels, pose, g):
        raise ValueError("projection plane misses the volume")
    coords = plane_voxel_coords(labels, pose, g)
    return sample_nearest(labels.data, coords).astype(np.uint8)


@dataclass
class DiceReport:
    per_branch_mean: dict = field(default_factory=dict)
    per_branch_std: dict = field(default_factory=dict)
    overall_mean: float = 0.0

    def to_dict(self) -> dict:
        return {
            "per_branch_mean": self.per_branch_mean,
            "per_branch_std": self.per_branch_std,
            "overall_mean": self.overall_mean,
        }

    def to_table(self) -> str:
        names = [n for n in BRANCH_NAMES[1:]] + ["Mean"]
        vals = [self.per_branch_mean.get(n, float("nan")) for n in BRANCH_NAMES[1:]]
        stds = [self.per_branch_std.get(n, float("nan")) for n in BRANCH_NAMES[1:]]
        cells = [f"{v:.2f}+-{s:.2f}" for v, s in zip(vals, stds)] + [f"{self.overall_mean:.2f}"]
        head = "".join(f"{n:>12}" for n in names)
        row = "".join(f"{c:>12}" for c in cells)
        return head + "\n" + row


def dice_report(pred_masks, gt_masks) -> DiceReport:
    """Per-branch DICE mean/std over frames; overall = mean of per-frame
    branch means.
    """
    per_branch = {name: [] for name in BRANCH_NAMES[1:]}
    frame_means = []
    for p, g in zip(pred_masks, gt_masks):
        frame_vals = []
        for b in range(1, 6):
            d = dice(p, g, b)
            per_branch[BRANCH_NAMES[b]].append(d)
            frame_vals.append(d)
        frame_means.append(float(np.mean(frame_vals)))
    return DiceReport(
        per_branch_mean={k: float(np.mean(v)) for k, v in per_branch.items()},
        per_branch_std={k: float(np.std(v)) for k, v in per_branch.items()},
        overall_mean=float(np.mean(frame_means)),
    )


@dataclass
class IdentificationReport:
    tolerance_mm: float
    counts: dict = field(default_factory=dict)  # branch name -> [tp, fp, fn, tn]

    def _totals(self):
        return np.array(list(self.counts.values())).sum(axis=0)

    @property
    def ppv(self) -> float:
        tp, fp, _, _ = self._totals()
        return float(tp / (tp + fp)) if tp + fp else float("nan")

    @property
    def tpr(self) -> float:
        tp, _, fn, _ = self._totals()
        return float(tp / (tp + fn)) if tp + fn else float("nan")

    def branch_ppv(self, name: str) -> float:
        tp, fp, _, _ = self.counts[name]
        return float(tp / (tp + fp)) if tp + fp else float("nan")

    def branch_tpr(self, name: str) -> float:
        tp, _, fn, _ = self.counts[name]
        return float(tp / (tp + fn)) if tp + fn else float("nan")

    def to_dict(self) -> dict:
        return {
            "tolerance_mm": self.tolerance_mm,
            "counts": self.counts,
            "ppv": self.ppv,
            "tpr": self.tpr,
        }

    def to_table(self) -> str:
        lines = [f"{'branch':>8}{'TP':>6}{'FP':>6}{'FN':>6}{'TN':>6}{'PPV':>8}{'TPR':>8}"]
        for name, (tp, fp, fn, tn) in self.counts.items():
            lines.append(
                f"{name:>8}{tp:>6}{fp:>6}{fn:>6}{tn:>6}"
                f"{self.branch_ppv(name):>8.2f}{self.branch_tpr(name):>8.2f}"
            )
        lines.append(f"{'all':>8}{'':>24}{self.ppv:>8.2f}{self.tpr:>8.2f}")
        return "\n".join(lines)


def branch_distance_maps(labels: Volume) -> dict:
    """Euclidean distance (mm) to each branch's voxel set."""
    maps = {}
    for b in range(1, 6):
        region = labels.data == b
        if region.any():
            maps[b] = distance_transform_edt(~region, sampling=labels.spacing)
        else:
            maps[b] = np.full(labels.dims, np.inf)
    return maps


def _distance_to_branch(dist_map: np.ndarray, labels: Volume, world_pt: np.ndarray) -> float:
    vox = labels.world_to_voxel(world_pt)
    dims = np.array(labels.dims)
    clamped = np.clip(np.rint(vox).astype(int), 0, dims - 1)
    d = float(dist_map[tuple(clamped)])
    # points outside the grid pick up the distance to the volume box
    outside = np.maximum(np.maximum(-vox, vox - (dims - 1)), 0.0)
    return d + float(np.linalg.norm(outside) * labels.spacing)


def identify(
    predictions, labels: Volume, g: ImageGeometry, tolerance_mm: float = 5.0
) -> IdentificationReport:
    """Centroid identification game over (argmax mask, pose) pairs.

    Per frame and branch: a predicted region's pixel-mean centroid, mapped
    to world space, is TP when within tolerance of the branch's ground-truth
    voxel set, else FP.  A branch present in the projected ground truth but
    absent from the prediction is FN; absent from both is TN.
    """
    dist_maps = branch_distance_maps(labels)
    counts = {name: [0, 0, 0, 0] for name in BRANCH_NAMES[1:]}
    for mask, pose in predictions:
        gt_mask = project_ground_truth(labels, pose, g)
        for b in range(1, 6):
            name = BRANCH_NAMES[b]
            region = mask == b
            gt_present = bool((gt_mask == b).any())
            if region.any():
                ys, xs = np.nonzero(region)
                centroid_px = np.array([xs.mean(), ys.mean()])
                world = pixel_to_world(g, pose, centroid_px)
                d = _distance_to_branch(dist_maps[b], labels, world)
                if d <= tolerance_mm:
                    counts[name][0] += 1
                else:
                    counts[name][1] += 1
            elif gt_present:
                counts[name][2] += 1
            else:
                counts[name][3] += 1
    return IdentificationReport(tolerance_mm=tolerance_mm, counts=counts)


def identify_points(
    annotations, labels: Volume, tolerance_mm: float = 5.0
) -> IdentificationReport:
    """Surgeon-mode scoring of (branch id, world point) annotations.

    Only TP/FP are counted; recall is undefined because every annotation
    names a target by construction.
    """
    dist_maps = branch_distance_maps(labels)
    counts = {name: [0, 0, 0, 0] for name in BRANCH_NAMES[1:]}
    for b, world_pt in annotations:
        name = BRANCH_NAMES[int(b)]
        d = _distance_to_branch(dist_maps[int(b)], labels, np.asarray(world_pt))
        if d <= tolerance_mm:
            counts[name][0] += 1
        else:
            counts[name][1] += 1
    return IdentificationReport(tolerance_mm=tolerance_mm, counts=counts)


@dataclass
class ThroughputReport:
    frames: int
    duration_s: float
    latencies_s: list = field(default_factory=list)

    @property
    def fps(self) -> float:
        return self.frames / self.duration_s if self.duration_s > 0 else float("inf")

    def to_dict(self) -> dict:
        lat = np.array(self.latencies_s) if self.latencies_s else np.zeros(1)
        return {
            "frames": self.frames,
            "duration_s": self.duration_s,
            "fps": self.fps,
            "latency_mean_s": float(lat.mean()),
            "latency_p95_s": float(np.percentile(lat, 95)),
        }


def benchmark(predict_fn, frames, warmup: int = 1) -> ThroughputReport:
    """Wall-clock throughput of predict_fn over a frame sequence.

    The first `warmup` calls run untimed so one-off allocation and code
    paths do not distort the sustained rate.
    """
    if not frames:
        raise ValueError("no frames to benchmark")
    for f in frames[:warmup]:
        predict_fn(f)
    latencies = []
    t0 = time.perf_counter()
    for f in frames:
        s = time.perf_counter()
        predict_fn(f)
        latencies.append(time.perf_counter() - s)
    total = time.perf_counter() - t0
    return ThroughputReport(frames=len(frames), duration_s=total, latencies_s=latencies)


def report_to_json(report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=1)
