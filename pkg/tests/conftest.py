"""Shared fixtures: one desk-scale phantom pipeline built once per session."""

import numpy as np
import pytest

from portalseg.phantom import (
    PhantomSpec,
    axial_sweep_trajectory,
    generate_tree,
    rasterize,
    simulate_sweep,
    sweep_geometry,
)
from portalseg.presets import desk
from portalseg.reconstruction import ReconSpec, reconstruct
from portalseg.reslice import generate_dataset


@pytest.fixture(scope="session")
def phantom():
    spec = PhantomSpec(seed=0)
    tree = generate_tree(spec)
    labels, intensity = rasterize(tree, spec)
    return tree, labels, intensity


@pytest.fixture(scope="session")
def sweep_frames(phantom):
    _, _, intensity = phantom
    g = sweep_geometry(intensity)
    poses = axial_sweep_trajectory(intensity, pitch_mm=0.5)
    return simulate_sweep(intensity, poses, g, noise_seed=0, noise_sigma=0.02)


@pytest.fixture(scope="session")
def recon(sweep_frames):
    vol, known, report = reconstruct(sweep_frames, ReconSpec(spacing=0.5))
    return vol, known, report


@pytest.fixture(scope="session")
def dataset40(phantom, recon):
    _, labels, _ = phantom
    vol, _, _ = recon
    preset = desk()
    samples, stats = generate_dataset(
        vol, labels, preset.ranges, 40, seed=123, g=preset.frame_geometry
    )
    return samples, stats, preset.frame_geometry


@pytest.fixture(scope="session")
def tiny_model(dataset40):
    from portalseg.segmenters import SegmenterConfig, train

    samples, _, _ = dataset40
    config = SegmenterConfig(
        levels=2, base_channels=4, input_size=(48, 20), epochs=3, seed=5
    )
    model, report = train(config, samples)
    return model, report, config


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
