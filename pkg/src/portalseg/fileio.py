"""On-disk formats: volume/image files, tracked-sequence files, dataset
manifests.  All binary payloads are little-endian; JSON is UTF-8 with
sorted keys so every write -> read -> write round trip is byte-identical.

Container layout (volume and sequence files alike):
    8-byte magic, uint32 header length, JSON header, raw payload.
Volume payloads are stored x-fastest.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ImageGeometry, Pose
from .reslice import AugmentParams, ManeuverRanges, SyntheticSample
from .volume import TrackedFrame, Volume

VOLUME_MAGIC = b"PSVOL01\n"
SEQUENCE_MAGIC = b"PSSEQ01\n"

_DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}


def _element_type(data: np.ndarray) -> str:
    if data.dtype == np.uint8:
        return "u8"
    return "f32"


def _dump_header(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _write_container(path, magic: bytes, header: dict, payload: bytes):
    raw = _dump_header(header)
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(np.uint32(len(raw)).tobytes())
        fh.write(raw)
        fh.write(payload)


def _read_container(path, magic: bytes):
    with open(path, "rb") as fh:
        got = fh.read(8)
        if got != magic:
            raise ValueError(f"{path}: bad magic {got!r}")
        (hlen,) = np.frombuffer(fh.read(4), dtype=np.uint32)
        header = json.loads(fh.read(int(hlen)).decode("utf-8"))
        payload = fh.read()
    return header, payload


def write_volume(path, v: Volume, compress: bool = False):
    etype = _element_type(v.data)
    data = np.ascontiguousarray(v.data.transpose(2, 1, 0)).astype(_DTYPES[etype])
    payload = data.tobytes()
    if compress:
        payload = zlib.compress(payload, 6)
    header = {
        "dims": list(v.dims),
        "spacing": v.spacing,
        "origin": list(v.origin),
        "orientation": [list(row) for row in v.orientation],
        "element_type": etype,
        "compressed": compress,
    }
    _write_container(path, VOLUME_MAGIC, header, payload)


def read_volume(path) -> Volume:
    header, payload = _read_container(path, VOLUME_MAGIC)
    dims = tuple(header["dims"])
    dtype = _DTYPES[header["element_type"]]
    if header.get("compressed"):
        payload = zlib.decompress(payload)
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(payload) != expected:
        raise ValueError(f"{path}: payload length {len(payload)} != expected {expected}")
    data = np.frombuffer(payload, dtype=dtype).reshape(dims[::-1]).transpose(2, 1, 0)
    if header["element_type"] == "f32":
        data = data.astype(np.float64)
    else:
        data = data.copy()
    return Volume(
        data,
        float(header["spacing"]),
        np.array(header["origin"]),
        np.array(header["orientation"]),
    )


def write_image(path, image: np.ndarray):
    """2D image/mask file: same container, dims [width, height]."""
    etype = _element_type(image)
    header = {
        "dims": [image.shape[1], image.shape[0]],
        "element_type": etype,
    }
    payload = np.ascontiguousarray(image).astype(_DTYPES[etype]).tobytes()
    _write_container(path, VOLUME_MAGIC, header, payload)


def read_image(path) -> np.ndarray:
    header, payload = _read_container(path, VOLUME_MAGIC)
    w, h = header["dims"]
    dtype = _DTYPES[header["element_type"]]
    img = np.frombuffer(payload, dtype=dtype).reshape(h, w)
    return img.copy()


def _geometry_dict(g: ImageGeometry) -> dict:
    return {
        "width": g.width,
        "height": g.height,
        "spacing": g.spacing,
        "depth": g.depth,
        "aspect_ratio": g.aspect_ratio,
    }


def _geometry_from(d: dict) -> ImageGeometry:
    return ImageGeometry(
        width=int(d["width"]),
        height=int(d["height"]),
        spacing=float(d["spacing"]),
        depth=float(d["depth"]),
        aspect_ratio=float(d["aspect_ratio"]),
    )


def _pose_list(p: Pose):
    return [list(row) for row in p.matrix()]


def write_sequence(path, frames, calibration: Pose = None):
    if not frames:
        raise ValueError("empty frame sequence")
    g = frames[0].geometry
    calibration = calibration or Pose.identity()
    frame_bytes = g.width * g.height * 4
    entries = []
    chunks = []
    offset = 0
    for f in frames:
        entries.append(
            {
                "timestamp": f.timestamp,
                "index": f.index,
                "pose": _pose_list(f.pose),
                "offset": offset,
                "out_of_volume": f.out_of_volume,
            }
        )
        chunks.append(np.ascontiguousarray(f.image).astype("<f4").tobytes())
        offset += frame_bytes
    header = {
        "geometry": _geometry_dict(g),
        "frame_count": len(frames),
        "calibration": _pose_list(calibration),
        "frames": entries,
    }
    _write_container(path, SEQUENCE_MAGIC, header, b"".join(chunks))


def read_sequence(path):
    header, payload = _read_container(path, SEQUENCE_MAGIC)
    g = _geometry_from(header["geometry"])
    frame_bytes = g.width * g.height * 4
    frames = []
    last = -1
    for e in header["frames"]:
        if e["offset"] <= last:
            raise ValueError(f"{path}: frame offsets not strictly increasing")
        last = e["offset"]
        img = np.frombuffer(
            payload, dtype="<f4", count=g.width * g.height, offset=e["offset"]
        ).reshape(g.height, g.width)
        frames.append(
            TrackedFrame(
                img.copy(),
                g,
                Pose.from_matrix(np.array(e["pose"])),
                timestamp=float(e["timestamp"]),
                index=int(e["index"]),
                out_of_volume=bool(e["out_of_volume"]),
            )
        )
    calibration = Pose.from_matrix(np.array(header["calibration"]))
    return frames, calibration


@dataclass
class DatasetOnDisk:
    root: Path
    manifest: dict

    @property
    def count(self) -> int:
        return self.manifest["count"]

    @property
    def geometry(self) -> ImageGeometry:
        return _geometry_from(self.manifest["geometry"])

    def load_sample(self, i: int) -> SyntheticSample:
        entry = self.manifest["samples"][i]
        image = read_image(self.root / entry["image"])
        mask = read_image(self.root / entry["mask"])
        return SyntheticSample(
            image.astype(np.float32),
            mask,
            Pose.from_matrix(np.array(entry["pose"])),
            AugmentParams.from_dict(entry["params"]),
        )

    def load_all(self):
        return [self.load_sample(i) for i in range(self.count)]


def write_dataset(root, samples, ranges: ManeuverRanges, seed, g: ImageGeometry, stats=None):
    """Dataset directory: manifest.json plus one image/mask file pair per
    sample.  Deterministic for fixed inputs.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, s in enumerate(samples):
        img_name = f"sample_{i:06d}_img.psv"
        mask_name = f"sample_{i:06d}_mask.psv"
        write_image(root / img_name, s.image)
        write_image(root / mask_name, s.mask)
        entries.append(
            {
                "image": img_name,
                "mask": mask_name,
                "pose": _pose_list(s.pose),
                "params": s.params.to_dict(),
            }
        )
    manifest = {
        "seed": seed,
        "ranges": vars(ranges),
        "count": len(samples),
        "geometry": _geometry_dict(g),
        "samples": entries,
    }
    if stats is not None:
        # timing stays out of the manifest so reruns are byte-identical
        manifest["stats"] = {"labeled_fraction": stats.labeled_fraction}
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return DatasetOnDisk(root, manifest)


def read_dataset(root) -> DatasetOnDisk:
    root = Path(root)
    with open(root / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest["count"] != len(manifest["samples"]):
        raise ValueError("manifest count does not match sample list")
    for entry in manifest["samples"]:
        for key in ("image", "mask"):
            if not (root / entry[key]).exists():
                raise ValueError(f"missing dataset file: {entry[key]}")
    return DatasetOnDisk(root, manifest)
