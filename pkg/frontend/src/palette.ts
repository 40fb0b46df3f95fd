/**
 * Fixed branch colors (Okabe-Ito color-blind-safe palette); the
 * background class stays transparent.  Index = branch label value.
 */

export interface Rgba {
  r: number;
  g: number;
  b: number;
  a: number;
}

export const BRANCH_COLORS: Rgba[] = [
  { r: 0, g: 0, b: 0, a: 0 }, // Background: transparent
  { r: 230, g: 159, b: 0, a: 255 }, // orange
  { r: 86, g: 180, b: 233, a: 255 }, // sky blue
  { r: 0, g: 158, b: 115, a: 255 }, // bluish green
  { r: 240, g: 228, b: 66, a: 255 }, // yellow
  { r: 204, g: 121, b: 167, a: 255 }, // reddish purple
];

/** Highlight color of the prediction-vs-ground-truth difference overlay. */
export const DIFF_COLOR: Rgba = { r: 213, g: 94, b: 0, a: 255 }; // vermillion
