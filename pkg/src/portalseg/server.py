"""Local reslice/prediction service behind the probe console.

Endpoints:
    GET  /meta     volume dims/spacing, frame size, the 6 label names.
    POST /reslice  JSON {"pose": 4x4 row-major} -> one binary frame.
    WS   /stream   bidirectional: JSON pose updates in, frames out at
                   <= 50 ms cadence; bursts coalesce to the newest pose.

Binary frame layout (little-endian):
    16-byte header: magic "PSFR", uint32 width, uint32 height,
    uint32 flags (bit 0 = out-of-volume, bits 1+ = frame id);
    then float32 image (h*w), uint8 predicted mask (h*w),
    uint8 ground-truth mask (h*w), all row-major.

On the stream each binary frame is preceded by a JSON text message
{"id", "pose"} echoing the pose the frame was rendered at, so the client
can match frames to its own state.  The loaded artifacts are never
mutated; a lock serializes model inference.
"""

from __future__ import annotations

import asyncio
import struct
import threading

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response

from .evaluation import project_ground_truth
from .geometry import ImageGeometry, Pose
from .phantom import BRANCH_NAMES, sweep_geometry
from .segmenters import predict_resized
from .volume import Volume, plane_intersects, plane_voxel_coords, sample_catmull_rom

FRAME_MAGIC = b"PSFR"
STREAM_PERIOD_S = 0.05  # one frame per pose update, at most every 50 ms
FLAG_OUT_OF_VOLUME = 0x1


def parse_pose(body) -> Pose:
    """Pose from a request body; raises ValueError with a usable message."""
    if not isinstance(body, dict) or "pose" not in body:
        raise ValueError('expected a JSON object with a "pose" key')
    mat = np.asarray(body["pose"], dtype=np.float64)
    if mat.shape != (4, 4):
        raise ValueError(f"pose must be a 4x4 matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("pose contains non-finite values")
    if not np.allclose(mat[3], [0.0, 0.0, 0.0, 1.0]):
        raise ValueError("pose bottom row must be [0, 0, 0, 1]")
    return Pose.from_matrix(mat)


def pack_frame(image, pred_mask, gt_mask, frame_id: int, out_of_volume: bool) -> bytes:
    h, w = image.shape
    flags = (frame_id << 1) | (FLAG_OUT_OF_VOLUME if out_of_volume else 0)
    header = struct.pack("<4sIII", FRAME_MAGIC, w, h, flags)
    return (
        header
        + np.ascontiguousarray(image, dtype="<f4").tobytes()
        + np.ascontiguousarray(pred_mask, dtype=np.uint8).tobytes()
        + np.ascontiguousarray(gt_mask, dtype=np.uint8).tobytes()
    )


class ResliceService:
    """Shared read-only artifacts plus the frame-rendering path."""

    def __init__(self, volume: Volume, labels: Volume, model, geometry: ImageGeometry = None):
        self.volume = volume
        self.labels = labels
        self.model = model
        self.geometry = geometry or sweep_geometry(volume)
        self._lock = threading.Lock()

    def render(self, pose: Pose, frame_id: int) -> bytes:
        g = self.geometry
        if not plane_intersects(self.volume, pose, g):
            zeros_f = np.zeros((g.height, g.width), dtype=np.float32)
            zeros_u = np.zeros((g.height, g.width), dtype=np.uint8)
            return pack_frame(zeros_f, zeros_u, zeros_u, frame_id, out_of_volume=True)
        coords = plane_voxel_coords(self.volume, pose, g)
        image = np.clip(sample_catmull_rom(self.volume.data, coords), 0.0, 1.0)
        gt = project_ground_truth(self.labels, pose, g)
        with self._lock:
            pred = predict_resized(self.model, image).mask
        return pack_frame(image, pred, gt, frame_id, out_of_volume=False)

    def meta(self) -> dict:
        return {
            "dims": list(self.volume.dims),
            "spacing": self.volume.spacing,
            "origin": [float(x) for x in self.volume.origin],
            "frame": {"width": self.geometry.width, "height": self.geometry.height},
            "labels": list(BRANCH_NAMES),
        }


def create_app(volume: Volume, labels: Volume, model, geometry: ImageGeometry = None) -> FastAPI:
    service = ResliceService(volume, labels, model, geometry)
    app = FastAPI(title="portalseg reslice service")
    app.state.service = service

    @app.get("/meta")
    def meta():
        return service.meta()

    @app.post("/reslice")
    async def reslice(request_body: dict):
        try:
            pose = parse_pose(request_body)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        payload = await asyncio.to_thread(service.render, pose, 0)
        return Response(content=payload, media_type="application/octet-stream")

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        latest: list = [None]  # newest pose wins; older bursts are dropped
        new_pose = asyncio.Event()

        async def reader():
            while True:
                body = await ws.receive_json()
                try:
                    latest[0] = parse_pose(body)
                except ValueError as exc:
                    await ws.send_json({"error": str(exc)})
                    continue
                new_pose.set()

        read_task = asyncio.create_task(reader())
        frame_id = 1
        try:
            while True:
                wait_task = asyncio.create_task(new_pose.wait())
                done, _ = await asyncio.wait(
                    {wait_task, read_task}, return_when=asyncio.FIRST_COMPLETED
                )
                if read_task in done:  # client went away while we were idle
                    wait_task.cancel()
                    break
                new_pose.clear()
                pose = latest[0]
                payload = await asyncio.to_thread(service.render, pose, frame_id)
                await ws.send_json(
                    {"id": frame_id, "pose": [list(row) for row in pose.matrix()]}
                )
                await ws.send_bytes(payload)
                frame_id += 1
                await asyncio.sleep(STREAM_PERIOD_S)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            read_task.cancel()

    return app
