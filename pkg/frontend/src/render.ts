/**
 * Pure pixel compositing: grayscale base image plus branch overlays,
 * returned as an RGBA buffer ready for an ImageData/canvas blit.  No DOM
 * here so the compositing rules are unit-testable.
 */

import { BRANCH_COLORS, DIFF_COLOR } from "./palette.js";
import type { Frame } from "./protocol.js";
import type { OverlayToggles } from "./state.js";

export const OVERLAY_ALPHA = 0.55;

export function compositeFrame(
  frame: Frame,
  overlays: OverlayToggles,
): Uint8ClampedArray<ArrayBuffer> {
  const n = frame.width * frame.height;
  const out = new Uint8ClampedArray(new ArrayBuffer(4 * n));
  for (let i = 0; i < n; i++) {
    const v = Math.round(Math.min(Math.max(frame.image[i], 0), 1) * 255);
    let r = v;
    let g = v;
    let b = v;
    const blend = (c: { r: number; g: number; b: number; a: number }) => {
      if (c.a === 0) return;
      r = Math.round((1 - OVERLAY_ALPHA) * r + OVERLAY_ALPHA * c.r);
      g = Math.round((1 - OVERLAY_ALPHA) * g + OVERLAY_ALPHA * c.g);
      b = Math.round((1 - OVERLAY_ALPHA) * b + OVERLAY_ALPHA * c.b);
    };
    if (overlays.groundTruth) blend(BRANCH_COLORS[frame.gt[i]]);
    if (overlays.prediction) blend(BRANCH_COLORS[frame.pred[i]]);
    if (overlays.difference && frame.pred[i] !== frame.gt[i]) blend(DIFF_COLOR);
    out[4 * i] = r;
    out[4 * i + 1] = g;
    out[4 * i + 2] = b;
    out[4 * i + 3] = 255;
  }
  return out;
}

/** Legend entries: the five branch names with their fixed colors. */
export function legendEntries(labels: string[]): { name: string; css: string }[] {
  return labels.slice(1).map((name, i) => {
    const c = BRANCH_COLORS[i + 1];
    return { name, css: `rgb(${c.r}, ${c.g}, ${c.b})` };
  });
}
