import json

import numpy as np
import pytest

from portalseg import fileio
from portalseg.reslice import ManeuverRanges
from portalseg.volume import Volume


def test_volume_roundtrip_f32(tmp_path, rng):
    v = Volume(rng.uniform(0, 1, (9, 7, 5)), 0.5, origin=[1.0, 2.0, 3.0])
    p1 = tmp_path / "a.psv"
    p2 = tmp_path / "b.psv"
    fileio.write_volume(p1, v)
    w = fileio.read_volume(p1)
    fileio.write_volume(p2, w)
    assert p1.read_bytes() == p2.read_bytes()
    np.testing.assert_allclose(w.data, v.data, atol=1e-7)  # f32 storage
    assert w.spacing == v.spacing
    np.testing.assert_array_equal(w.origin, v.origin)


def test_volume_roundtrip_u8_lossless(tmp_path, rng):
    v = Volume(rng.integers(0, 6, (9, 7, 5)).astype(np.uint8), 0.5)
    fileio.write_volume(tmp_path / "m.psv", v)
    w = fileio.read_volume(tmp_path / "m.psv")
    np.testing.assert_array_equal(w.data, v.data)
    assert w.data.dtype == np.uint8


def test_volume_compressed_roundtrip(tmp_path, rng):
    v = Volume(rng.uniform(0, 1, (12, 10, 8)), 0.5)
    fileio.write_volume(tmp_path / "c.psv", v, compress=True)
    w = fileio.read_volume(tmp_path / "c.psv")
    np.testing.assert_allclose(w.data, v.data, atol=1e-7)


def test_volume_payload_is_x_fastest(tmp_path):
    data = np.arange(8.0).reshape(2, 2, 2)  # value = 4x + 2y + z
    fileio.write_volume(tmp_path / "x.psv", Volume(data, 1.0))
    raw = (tmp_path / "x.psv").read_bytes()
    hlen = int(np.frombuffer(raw[8:12], dtype=np.uint32)[0])
    payload = np.frombuffer(raw[12 + hlen :], dtype="<f4")
    np.testing.assert_array_equal(payload[:2], [0.0, 4.0])  # x varies first


def test_volume_bad_magic(tmp_path):
    (tmp_path / "bad.psv").write_bytes(b"GARBAGE\n" + b"\x00" * 32)
    with pytest.raises(ValueError, match="magic"):
        fileio.read_volume(tmp_path / "bad.psv")


def test_volume_truncated_payload(tmp_path, rng):
    v = Volume(rng.uniform(0, 1, (4, 4, 4)), 0.5)
    p = tmp_path / "t.psv"
    fileio.write_volume(p, v)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError, match="length"):
        fileio.read_volume(p)


def test_image_roundtrip(tmp_path, rng):
    img = rng.uniform(0, 1, (20, 30)).astype(np.float32)
    fileio.write_image(tmp_path / "i.psv", img)
    np.testing.assert_array_equal(fileio.read_image(tmp_path / "i.psv"), img)


def test_sequence_roundtrip(tmp_path, sweep_frames):
    p1 = tmp_path / "a.pss"
    p2 = tmp_path / "b.pss"
    fileio.write_sequence(p1, sweep_frames[:8])
    frames, calibration = fileio.read_sequence(p1)
    fileio.write_sequence(p2, frames, calibration)
    assert p1.read_bytes() == p2.read_bytes()
    assert len(frames) == 8
    for a, b in zip(frames, sweep_frames):
        np.testing.assert_array_equal(a.image, b.image)
        np.testing.assert_allclose(a.pose.matrix(), b.pose.matrix(), atol=1e-12)
        assert a.timestamp == b.timestamp
        assert a.index == b.index


def test_sequence_empty_rejected(tmp_path):
    with pytest.raises(ValueError, match="empty"):
        fileio.write_sequence(tmp_path / "e.pss", [])


def test_sequence_nonmonotonic_offsets_rejected(tmp_path, sweep_frames):
    p = tmp_path / "m.pss"
    fileio.write_sequence(p, sweep_frames[:3])
    raw = bytearray(p.read_bytes())
    hlen = int(np.frombuffer(raw[8:12], dtype=np.uint32)[0])
    header = json.loads(raw[12 : 12 + hlen].decode())
    header["frames"][1]["offset"] = 0
    # rewrite with an identical-length header so the payload still lines up
    new = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    pad = hlen - len(new)
    assert pad >= 0
    new += b" " * pad
    p.write_bytes(bytes(raw[:12]) + new + bytes(raw[12 + hlen :]))
    with pytest.raises(ValueError, match="increasing"):
        fileio.read_sequence(p)


def test_dataset_roundtrip(tmp_path, dataset40):
    samples, stats, g = dataset40
    ranges = ManeuverRanges()
    d1 = tmp_path / "ds1"
    d2 = tmp_path / "ds2"
    fileio.write_dataset(d1, samples[:6], ranges, 123, g, stats=stats)
    on_disk = fileio.read_dataset(d1)
    assert on_disk.count == 6
    loaded = on_disk.load_all()
    fileio.write_dataset(d2, loaded, ranges, 123, g, stats=stats)
    assert (d1 / "manifest.json").read_bytes() == (d2 / "manifest.json").read_bytes()
    for i in range(6):
        assert (d1 / f"sample_{i:06d}_img.psv").read_bytes() == (
            d2 / f"sample_{i:06d}_img.psv"
        ).read_bytes()
        np.testing.assert_array_equal(loaded[i].mask, samples[i].mask)
        np.testing.assert_array_equal(loaded[i].image, samples[i].image)
        np.testing.assert_allclose(
            loaded[i].pose.matrix(), samples[i].pose.matrix(), atol=1e-12
        )


def test_dataset_missing_file_detected(tmp_path, dataset40):
    samples, stats, g = dataset40
    root = tmp_path / "ds"
    fileio.write_dataset(root, samples[:3], ManeuverRanges(), 1, g, stats=stats)
    (root / "sample_000001_mask.psv").unlink()
    with pytest.raises(ValueError, match="missing"):
        fileio.read_dataset(root)


def test_dataset_count_mismatch_detected(tmp_path, dataset40):
    samples, stats, g = dataset40
    root = tmp_path / "ds"
    fileio.write_dataset(root, samples[:3], ManeuverRanges(), 1, g, stats=stats)
    manifest = json.loads((root / "manifest.json").read_text())
    manifest["count"] = 5
    (root / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ValueError, match="count"):
        fileio.read_dataset(root)
