"""Command-line surface: one subcommand per pipeline step plus `serve`.

All randomness flows from a single --seed through named per-stage
sub-streams (phantom/sweep/augment/train), so each stage is independently
reproducible.  Exit codes: 0 success, 2 usage error (argparse), 1 runtime
failure with a one-line message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import zlib
from pathlib import Path

import numpy as np

from . import fileio, presets
from .evaluation import (
    benchmark,
    dice_report,
    identify,
    report_to_json,
)
from .geometry import Pose
from .phantom import (
    BRANCH_NAMES,
    axial_sweep_trajectory,
    generate_tree,
    rasterize,
    simulate_sweep,
    sweep_geometry,
)
from .reconstruction import ReconSpec, reconstruct
from .reslice import base_sweep_pose, central_crop, generate_dataset
from .volume import plane_voxel_coords, sample_catmull_rom


def stage_seed(seed: int, stage: str) -> int:
    """Named sub-stream: a stable derived seed per pipeline stage."""
    rng = np.random.default_rng([seed, zlib.crc32(stage.encode("ascii"))])
    return int(rng.integers(0, 2**31 - 1))


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="master seed for this run")
    p.add_argument("--preset", choices=("desk", "paper"), default="desk")
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file whose keys override matching flags")
    p.add_argument("--threads", type=int, default=1,
                   help="torch thread count for inference (training always pins 1)")


def _apply_config(args: argparse.Namespace):
    if args.config is None:
        return
    with open(args.config, encoding="utf-8") as fh:
        overrides = json.load(fh)
    for key, value in overrides.items():
        if not hasattr(args, key):
            raise ValueError(f"config key {key!r} is not a flag of this subcommand")
        setattr(args, key, value)


def _set_threads(args: argparse.Namespace):
    import torch

    torch.set_num_threads(max(int(args.threads), 1))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="portalseg",
        description="Tracked-ultrasound portal-branch pipeline: phantom, sweep, "
        "reconstruct, augment, train, infer, evaluate, bench, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a labeled vessel phantom")
    p.add_argument("--out", type=Path, default=Path("phantom"))
    _add_common(p)

    p = sub.add_parser("sweep", help="simulate a tracked axial sweep over a volume")
    p.add_argument("--volume", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("sweep.pss"))
    p.add_argument("--pitch", type=float, default=0.5, help="slice pitch in mm")
    p.add_argument("--noise", type=float, default=0.02, help="speckle sigma (0 disables)")
    _add_common(p)

    p = sub.add_parser("reconstruct", help="compound a tracked sweep into a volume")
    p.add_argument("--sequence", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("recon.psv"))
    p.add_argument("--spacing", type=float, default=None,
                   help="output voxel spacing in mm (default: preset spacing)")
    p.add_argument("--no-fill", action="store_true", help="skip hole filling")
    _add_common(p)

    p = sub.add_parser("augment", help="generate the maneuver-resliced dataset")
    p.add_argument("--volume", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("dataset"))
    p.add_argument("--n", type=int, default=None, help="sample count (default: preset)")
    _add_common(p)

    p = sub.add_parser("train", help="train the attention-gated segmenter")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("model.psc"))
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--report", type=Path, default=None, help="write the training report JSON here")
    _add_common(p)

    p = sub.add_parser("infer", help="segment every frame of a tracked sequence")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--sequence", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("masks"))
    _add_common(p)

    p = sub.add_parser("evaluate", help="DICE + identification scoring on a sweep")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--volume", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--sequence", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("evaluation.json"))
    p.add_argument("--tolerance", type=float, default=5.0, help="identification tolerance mm")
    _add_common(p)

    p = sub.add_parser("bench", help="reslice + inference throughput")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--volume", type=Path, required=True)
    p.add_argument("--frames", type=int, default=50)
    _add_common(p)

    p = sub.add_parser("serve", help="local reslice/prediction service")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--volume", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8420)
    _add_common(p)

    return parser


def cmd_phantom(args) -> int:
    preset = presets.get(args.preset, stage_seed(args.seed, "phantom"))
    tree = generate_tree(preset.phantom)
    labels, intensity = rasterize(tree, preset.phantom)
    args.out.mkdir(parents=True, exist_ok=True)
    fileio.write_volume(args.out / "labels.psv", labels)
    fileio.write_volume(args.out / "intensity.psv", intensity)
    manifest = {
        "preset": args.preset,
        "seed": args.seed,
        "dims": list(labels.dims),
        "spacing": labels.spacing,
        "branches": list(BRANCH_NAMES),
    }
    with open(args.out / "phantom.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"phantom written to {args.out} ({labels.dims[0]}x{labels.dims[1]}x{labels.dims[2]})")
    return 0


def cmd_sweep(args) -> int:
    v = fileio.read_volume(args.volume)
    g = sweep_geometry(v)
    trajectory = axial_sweep_trajectory(v, args.pitch)
    frames = simulate_sweep(
        v, trajectory, g, noise_seed=stage_seed(args.seed, "sweep"), noise_sigma=args.noise
    )
    fileio.write_sequence(args.out, frames)
    print(f"{len(frames)} tracked frames written to {args.out}")
    return 0


def cmd_reconstruct(args) -> int:
    frames, _ = fileio.read_sequence(args.sequence)
    preset = presets.get(args.preset, args.seed)
    spacing = args.spacing if args.spacing is not None else preset.recon_spacing
    spec = ReconSpec(spacing=spacing, fill_holes=not args.no_fill)
    volume, known, _report = reconstruct(frames, spec)
    fileio.write_volume(args.out, volume)
    print(
        f"reconstructed {volume.dims[0]}x{volume.dims[1]}x{volume.dims[2]} volume "
        f"({known.data.mean():.1%} known) to {args.out}"
    )
    return 0


def cmd_augment(args) -> int:
    v = fileio.read_volume(args.volume)
    labels = fileio.read_volume(args.labels)
    preset = presets.get(args.preset, args.seed)
    n = args.n if args.n is not None else preset.dataset_size
    seed = stage_seed(args.seed, "augment")
    g = preset.frame_geometry
    samples, stats = generate_dataset(v, labels, preset.ranges, n, seed, g)
    fileio.write_dataset(args.out, samples, preset.ranges, seed, g, stats=stats)
    print(
        f"{n} samples written to {args.out} "
        f"({stats.labeled_fraction:.1%} labeled, {stats.samples_per_second:.0f}/s)"
    )
    return 0


def cmd_train(args) -> int:
    from .segmenters import SegmenterConfig, save_checkpoint, train

    dataset = fileio.read_dataset(args.dataset)
    preset = presets.get(args.preset, args.seed)
    config = SegmenterConfig(
        levels=preset.levels,
        base_channels=preset.base_channels,
        input_size=preset.model_input,
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        seed=stage_seed(args.seed, "train"),
    )
    model, report = train(config, dataset.load_all())
    save_checkpoint(args.out, model)
    if args.report is not None:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report_to_json(report))
            fh.write("\n")
    if report.aborted:
        print(f"training aborted: {report.aborted}", file=sys.stderr)
        return 1
    print(
        f"model saved to {args.out} "
        f"(best val DICE {report.best_val_dice:.3f} at epoch {report.best_epoch}, "
        f"{report.wall_clock_s:.0f}s)"
    )
    return 0


def cmd_infer(args) -> int:
    from .segmenters import load_checkpoint, predict_resized

    _set_threads(args)
    model = load_checkpoint(args.model)
    frames, _ = fileio.read_sequence(args.sequence)
    args.out.mkdir(parents=True, exist_ok=True)
    for f in frames:
        mask = predict_resized(model, f.image.astype(np.float64)).mask
        fileio.write_image(args.out / f"mask_{f.index:06d}.psv", mask)
    print(f"{len(frames)} predicted masks written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    from .evaluation import project_ground_truth
    from .segmenters import load_checkpoint, predict_resized

    _set_threads(args)
    model = load_checkpoint(args.model)
    fileio.read_volume(args.volume)  # fail fast on a bad intensity artifact
    labels = fileio.read_volume(args.labels)
    frames, _ = fileio.read_sequence(args.sequence)
    preds, gts, pairs = [], [], []
    for f in frames:
        if f.out_of_volume:
            continue
        mask = predict_resized(model, f.image.astype(np.float64)).mask
        preds.append(mask)
        gts.append(project_ground_truth(labels, f.pose, f.geometry))
        pairs.append((mask, f.pose))
    dice = dice_report(preds, gts)
    ident = identify(pairs, labels, frames[0].geometry, tolerance_mm=args.tolerance)
    out = {
        "frames": len(preds),
        "dice": dice.to_dict(),
        "identification": ident.to_dict(),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(out, fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(
        f"overall DICE {dice.overall_mean:.3f}, "
        f"PPV {ident.ppv:.3f}, TPR {ident.tpr:.3f} -> {args.out}"
    )
    return 0


def cmd_bench(args) -> int:
    from .segmenters import load_checkpoint, predict_resized

    _set_threads(args)
    model = load_checkpoint(args.model)
    v = fileio.read_volume(args.volume)
    g = presets.get(args.preset, args.seed).frame_geometry
    rng = np.random.default_rng(stage_seed(args.seed, "bench"))
    poses = [
        base_sweep_pose(v, g, float(z))
        for z in rng.uniform(0.2, 0.8, args.frames) * v.extent_mm[2]
    ]

    def reslice_and_predict(pose: Pose):
        coords = plane_voxel_coords(v, pose, g)
        image = np.clip(sample_catmull_rom(v.data, coords), 0.0, 1.0)
        image, _ = central_crop(image, image, g)
        return predict_resized(model, image)

    report = benchmark(reslice_and_predict, poses)
    print(report_to_json(report))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .segmenters import load_checkpoint
    from .server import create_app

    _set_threads(args)
    model = load_checkpoint(args.model)
    v = fileio.read_volume(args.volume)
    labels = fileio.read_volume(args.labels)
    app = create_app(v, labels, model)
    print(f"serving on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "phantom": cmd_phantom,
    "sweep": cmd_sweep,
    "reconstruct": cmd_reconstruct,
    "augment": cmd_augment,
    "train": cmd_train,
    "infer": cmd_infer,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"portalseg {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
