import json

import pytest

from portalseg.cli import main, stage_seed


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Micro end-to-end CLI run shared by the tests in this module."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["phantom", "--seed", "7", "--out", str(root / "phantom")]) == 0
    assert main([
        "sweep", "--volume", str(root / "phantom/intensity.psv"),
        "--out", str(root / "sweep.pss"), "--seed", "7",
    ]) == 0
    assert main([
        "reconstruct", "--sequence", str(root / "sweep.pss"),
        "--out", str(root / "recon.psv"),
    ]) == 0
    assert main([
        "augment", "--volume", str(root / "recon.psv"),
        "--labels", str(root / "phantom/labels.psv"),
        "--out", str(root / "dataset"), "--n", "25", "--seed", "7",
    ]) == 0
    assert main([
        "train", "--dataset", str(root / "dataset"), "--out", str(root / "model.psc"),
        "--epochs", "1", "--seed", "7", "--report", str(root / "train.json"),
    ]) == 0
    return root


def test_stage_seed_named_substreams():
    assert stage_seed(0, "phantom") != stage_seed(0, "sweep")
    assert stage_seed(0, "phantom") == stage_seed(0, "phantom")
    assert stage_seed(0, "phantom") != stage_seed(1, "phantom")


def test_pipeline_artifacts(pipeline):
    assert (pipeline / "phantom/labels.psv").exists()
    assert (pipeline / "phantom/phantom.json").exists()
    manifest = json.loads((pipeline / "dataset/manifest.json").read_text())
    assert manifest["count"] == 25
    assert json.loads((pipeline / "train.json").read_text())["best_epoch"] >= 0


def test_infer_and_evaluate(pipeline):
    assert main([
        "infer", "--model", str(pipeline / "model.psc"),
        "--sequence", str(pipeline / "sweep.pss"), "--out", str(pipeline / "masks"),
    ]) == 0
    assert (pipeline / "masks/mask_000000.psv").exists()
    assert main([
        "evaluate", "--model", str(pipeline / "model.psc"),
        "--volume", str(pipeline / "recon.psv"),
        "--labels", str(pipeline / "phantom/labels.psv"),
        "--sequence", str(pipeline / "sweep.pss"),
        "--out", str(pipeline / "eval.json"),
    ]) == 0
    report = json.loads((pipeline / "eval.json").read_text())
    assert set(report) == {"frames", "dice", "identification"}


def test_bench(pipeline, capsys):
    assert main([
        "bench", "--model", str(pipeline / "model.psc"),
        "--volume", str(pipeline / "recon.psv"), "--frames", "3",
    ]) == 0
    assert "fps" in capsys.readouterr().out


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["phantom", "--no-such-flag"])
    assert exc.value.code == 2


def test_runtime_error_exit_1(tmp_path, capsys):
    code = main(["sweep", "--volume", str(tmp_path / "missing.psv")])
    assert code == 1
    assert "missing.psv" in capsys.readouterr().err


def test_bad_file_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.psv"
    bad.write_bytes(b"not a volume at all")
    code = main(["sweep", "--volume", str(bad)])
    assert code == 1
    assert "magic" in capsys.readouterr().err


def test_config_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 21, "seed": 3}))
    assert main(["phantom", "--seed", "3", "--out", str(tmp_path / "ph")]) == 0
    assert main([
        "sweep", "--volume", str(tmp_path / "ph/intensity.psv"),
        "--out", str(tmp_path / "s.pss"), "--seed", "3",
    ]) == 0
    assert main([
        "reconstruct", "--sequence", str(tmp_path / "s.pss"),
        "--out", str(tmp_path / "r.psv"),
    ]) == 0
    assert main([
        "augment", "--volume", str(tmp_path / "r.psv"),
        "--labels", str(tmp_path / "ph/labels.psv"),
        "--out", str(tmp_path / "ds"), "--n", "5", "--config", str(cfg),
    ]) == 0
    manifest = json.loads((tmp_path / "ds/manifest.json").read_text())
    assert manifest["count"] == 21  # config overrode --n


def test_config_unknown_key_exit_1(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus_flag": 1}))
    assert main(["phantom", "--out", str(tmp_path / "p"), "--config", str(cfg)]) == 1
    assert "bogus_flag" in capsys.readouterr().err
