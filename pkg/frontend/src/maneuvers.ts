/**
 * Probe-maneuver vocabulary over rigid poses.
 *
 * A pose is a row-major 4x4 homogeneous matrix mapping frame-local
 * millimeters to world millimeters.  Local axes: x = lateral (width),
 * y = axial (depth into tissue), z = plane normal (sweep direction).
 * Maneuvers compose on the right, so they act in the probe's own frame:
 * tilt rotates about local x, rock about local y, rotate about local z;
 * slide translates along local z, transversal slide along x, lift along y.
 */

import type { PoseMatrix, ServiceMeta } from "./protocol.js";

export type ManeuverKind =
  | "tilt"
  | "rock"
  | "rotate"
  | "slide"
  | "transversalSlide"
  | "lift";

export interface Maneuver {
  kind: ManeuverKind;
  /** degrees for the rotational maneuvers, millimeters for translations */
  amount: number;
}

export function identityPose(): PoseMatrix {
  return [
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 1, 0],
    [0, 0, 0, 1],
  ];
}

export function matMul(a: PoseMatrix, b: PoseMatrix): PoseMatrix {
  const out = identityPose();
  for (let i = 0; i < 4; i++) {
    for (let j = 0; j < 4; j++) {
      let s = 0;
      for (let k = 0; k < 4; k++) s += a[i][k] * b[k][j];
      out[i][j] = s;
    }
  }
  return out;
}

function rotationAboutAxis(axis: 0 | 1 | 2, deg: number): PoseMatrix {
  const a = (deg * Math.PI) / 180;
  const c = Math.cos(a);
  const s = Math.sin(a);
  const m = identityPose();
  const [u, v] = axis === 0 ? [1, 2] : axis === 1 ? [2, 0] : [0, 1];
  m[u][u] = c;
  m[u][v] = -s;
  m[v][u] = s;
  m[v][v] = c;
  return m;
}

function translationOf(t: [number, number, number]): PoseMatrix {
  const m = identityPose();
  m[0][3] = t[0];
  m[1][3] = t[1];
  m[2][3] = t[2];
  return m;
}

const ROTATION_AXIS: Record<string, 0 | 1 | 2> = { tilt: 0, rock: 1, rotate: 2 };
const TRANSLATION_AXIS: Record<string, 0 | 1 | 2> = {
  transversalSlide: 0,
  lift: 1,
  slide: 2,
};

export function applyManeuver(pose: PoseMatrix, m: Maneuver): PoseMatrix {
  if (m.kind in ROTATION_AXIS) {
    return matMul(pose, rotationAboutAxis(ROTATION_AXIS[m.kind], m.amount));
  }
  const t: [number, number, number] = [0, 0, 0];
  t[TRANSLATION_AXIS[m.kind]] = m.amount;
  return matMul(pose, translationOf(t));
}

/** Rotation angle in degrees between two poses (from the trace of Ra'Rb). */
export function rotationAngleDeg(a: PoseMatrix, b: PoseMatrix): number {
  let trace = 0;
  for (let i = 0; i < 3; i++) {
    for (let k = 0; k < 3; k++) trace += a[k][i] * b[k][i];
  }
  const c = Math.min(1, Math.max(-1, (trace - 1) / 2));
  return (Math.acos(c) * 180) / Math.PI;
}

/**
 * Default key bindings: each key is one step of the maneuver vocabulary.
 * Rotations step in degrees, translations in millimeters.
 */
export const KEY_BINDINGS: Record<string, Maneuver> = {
  t: { kind: "tilt", amount: 5 },
  g: { kind: "tilt", amount: -5 },
  r: { kind: "rock", amount: 3 },
  f: { kind: "rock", amount: -3 },
  q: { kind: "rotate", amount: 10 },
  e: { kind: "rotate", amount: -10 },
  ArrowUp: { kind: "slide", amount: 1 },
  ArrowDown: { kind: "slide", amount: -1 },
  ArrowRight: { kind: "transversalSlide", amount: 1 },
  ArrowLeft: { kind: "transversalSlide", amount: -1 },
  w: { kind: "lift", amount: -1 },
  s: { kind: "lift", amount: 1 },
};

/**
 * Pose of recorded sweep frame k: the axial sweep is one axis-aligned
 * slice per voxel step along z, starting at the volume origin.
 */
export function snapToSweepFrame(meta: ServiceMeta, k: number): PoseMatrix {
  const steps = meta.dims[2];
  const clamped = Math.min(Math.max(Math.round(k), 0), steps - 1);
  return translationOf([
    meta.origin[0],
    meta.origin[1],
    meta.origin[2] + clamped * meta.spacing,
  ]);
}
