/**
 * Wire types of the reslice service: the /meta JSON document, pose JSON
 * messages, and the binary frame payload
 * (16-byte header: magic "PSFR", u32 width, u32 height, u32 flags;
 * then f32 image, u8 predicted mask, u8 ground-truth mask, row-major).
 * All integers are little-endian.
 */

export const FRAME_MAGIC = "PSFR";
export const FLAG_OUT_OF_VOLUME = 0x1;

/** Row-major 4x4 homogeneous matrix, as sent to and echoed by the server. */
export type PoseMatrix = number[][];

export interface ServiceMeta {
  dims: [number, number, number];
  spacing: number;
  origin: [number, number, number];
  frame: { width: number; height: number };
  labels: string[];
}

export interface Frame {
  id: number;
  outOfVolume: boolean;
  width: number;
  height: number;
  image: Float32Array;
  pred: Uint8Array;
  gt: Uint8Array;
}

export class ProtocolError extends Error {}

export function parseMeta(doc: unknown): ServiceMeta {
  const m = doc as Partial<ServiceMeta>;
  if (
    !m ||
    !Array.isArray(m.dims) ||
    m.dims.length !== 3 ||
    typeof m.spacing !== "number" ||
    !Array.isArray(m.origin) ||
    m.origin.length !== 3 ||
    !m.frame ||
    typeof m.frame.width !== "number" ||
    typeof m.frame.height !== "number" ||
    !Array.isArray(m.labels) ||
    m.labels.length !== 6
  ) {
    throw new ProtocolError("malformed /meta document");
  }
  return m as ServiceMeta;
}

export function poseMessage(pose: PoseMatrix): string {
  return JSON.stringify({ pose });
}

/**
 * Parse one binary frame payload, validating the header against the
 * served frame geometry so a desynchronized stream surfaces as an error
 * instead of a garbled image.
 */
export function parseFrame(payload: ArrayBuffer, meta: ServiceMeta): Frame {
  if (payload.byteLength < 16) {
    throw new ProtocolError(`frame payload too short (${payload.byteLength} bytes)`);
  }
  const view = new DataView(payload);
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== FRAME_MAGIC) {
    throw new ProtocolError(`bad frame magic "${magic}"`);
  }
  const width = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const flags = view.getUint32(12, true);
  if (width !== meta.frame.width || height !== meta.frame.height) {
    throw new ProtocolError(
      `frame is ${width}x${height} but /meta promised ` +
        `${meta.frame.width}x${meta.frame.height}`,
    );
  }
  const n = width * height;
  if (payload.byteLength !== 16 + 6 * n) {
    throw new ProtocolError(
      `frame payload is ${payload.byteLength} bytes, expected ${16 + 6 * n}`,
    );
  }
  return {
    id: flags >>> 1,
    outOfVolume: (flags & FLAG_OUT_OF_VOLUME) !== 0,
    width,
    height,
    image: new Float32Array(payload, 16, n),
    pred: new Uint8Array(payload, 16 + 4 * n, n),
    gt: new Uint8Array(payload, 16 + 5 * n, n),
  };
}
