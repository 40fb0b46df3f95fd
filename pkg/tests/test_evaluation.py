import numpy as np
import pytest

from portalseg.evaluation import (
    IdentificationReport,
    benchmark,
    dice,
    dice_report,
    identify,
    identify_points,
    project_ground_truth,
    report_to_json,
    ssim,
    ssim_map_many,
)
from portalseg.geometry import Pose
from portalseg.phantom import BRANCH_NAMES, axial_sweep_trajectory, sweep_geometry


def test_dice_identity():
    m = np.zeros((8, 8), dtype=np.uint8)
    m[2:5, 2:5] = 1
    assert dice(m, m, 1) == 1.0


def test_dice_disjoint():
    a = np.zeros((8, 8), dtype=np.uint8)
    b = np.zeros((8, 8), dtype=np.uint8)
    a[0, 0] = 1
    b[7, 7] = 1
    assert dice(a, b, 1) == 0.0


def test_dice_two_thirds():
    """|P| = 1, |G| = 2, overlap 1 -> DICE = 2/3."""
    p = np.zeros((4, 4), dtype=np.uint8)
    g = np.zeros((4, 4), dtype=np.uint8)
    p[0, 0] = 1
    g[0, 0] = g[0, 1] = 1
    assert dice(p, g, 1) == pytest.approx(2.0 / 3.0)


def test_dice_both_empty_is_one():
    z = np.zeros((4, 4), dtype=np.uint8)
    assert dice(z, z, 3) == 1.0


def test_dice_symmetry(rng):
    a = (rng.uniform(size=(16, 16)) < 0.3).astype(np.uint8)
    b = (rng.uniform(size=(16, 16)) < 0.3).astype(np.uint8)
    assert dice(a, b, 1) == pytest.approx(dice(b, a, 1), abs=1e-12)


def test_ssim_identity(rng):
    img = rng.uniform(0, 1, (48, 40))
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)


def test_ssim_symmetry(rng):
    a = rng.uniform(0, 1, (48, 40))
    b = rng.uniform(0, 1, (48, 40))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-9)


def test_ssim_decreases_with_noise(rng):
    a = rng.uniform(0.2, 0.8, (48, 40))
    small = ssim(a, np.clip(a + rng.normal(0, 0.02, a.shape), 0, 1))
    large = ssim(a, np.clip(a + rng.normal(0, 0.2, a.shape), 0, 1))
    assert 1.0 > small > large


def test_ssim_map_many_matches_pairwise(rng):
    query = rng.uniform(0, 1, (32, 24))
    stack = rng.uniform(0, 1, (5, 32, 24))
    many = ssim_map_many(query, stack)
    single = np.array([ssim(query, s) for s in stack])
    np.testing.assert_allclose(many, single, atol=1e-12)


def test_dice_report_overall_mean():
    a = np.zeros((8, 8), dtype=np.uint8)
    a[0, 0] = 1
    rep = dice_report([a], [a])
    assert rep.per_branch_mean["MPV"] == 1.0
    assert rep.overall_mean == 1.0  # absent branches score 1 (both empty)
    assert "MPV" in rep.to_table()


def _oracle_predictions(labels, g, n=12):
    poses = axial_sweep_trajectory(labels, pitch_mm=0.5)[20 : 20 + n]
    return [(project_ground_truth(labels, p, g), p) for p in poses]


def test_identification_oracle_is_perfect(phantom):
    _, labels, _ = phantom
    g = sweep_geometry(labels)
    report = identify(_oracle_predictions(labels, g), labels, g, tolerance_mm=5.0)
    assert report.ppv == 1.0
    assert report.tpr == 1.0


def test_identification_shift_breaks_ppv(phantom):
    """A 10 mm in-plane shift pushes every centroid out of tolerance."""
    _, labels, _ = phantom
    g = sweep_geometry(labels)
    preds = []
    for mask, pose in _oracle_predictions(labels, g):
        shifted = Pose(pose.rotation, pose.translation + pose.rotation @ [10.0, 0.0, 0.0])
        preds.append((mask, shifted))
    report = identify(preds, labels, g, tolerance_mm=2.0)
    assert report.ppv < 0.2


def test_identification_tolerance_monotonic(phantom):
    _, labels, _ = phantom
    g = sweep_geometry(labels)
    preds = _oracle_predictions(labels, g)
    tps = []
    for tol in (0.0, 1.0, 2.5, 5.0):
        rep = identify(preds, labels, g, tolerance_mm=tol)
        tps.append(sum(c[0] for c in rep.counts.values()))
    assert tps == sorted(tps)


def test_identify_points_modes(phantom):
    tree, labels, _ = phantom
    on_branch = [(int(b.branch_id), b.centerline[len(b.centerline) // 2]) for b in tree.branches]
    rep = identify_points(on_branch, labels, tolerance_mm=5.0)
    assert rep.ppv == 1.0
    off = [(1, np.array([-100.0, -100.0, -100.0]))]
    rep = identify_points(off, labels, tolerance_mm=5.0)
    assert rep.ppv == 0.0


def test_identification_report_counts_structure():
    rep = IdentificationReport(5.0, {n: [2, 1, 1, 0] for n in BRANCH_NAMES[1:]})
    assert rep.ppv == pytest.approx(2 / 3)
    assert rep.tpr == pytest.approx(2 / 3)
    assert rep.branch_ppv("MPV") == pytest.approx(2 / 3)
    assert "tolerance_mm" in rep.to_dict()
    assert "MPV" in rep.to_table()


def test_benchmark_counts_and_json():
    calls = []
    rep = benchmark(lambda f: calls.append(f), list(range(5)), warmup=1)
    assert rep.frames == 5
    assert len(calls) == 6  # one warm-up call plus the timed five
    assert rep.fps > 0
    assert "fps" in report_to_json(rep)
