/**
 * Client-side per-branch DICE of the displayed frame, so the score shown
 * next to the image always corresponds to the image itself.
 */

export const N_BRANCHES = 6;

/** DICE per label 1..5; a branch absent from both masks scores 1. */
export function diceByBranch(pred: Uint8Array, gt: Uint8Array): number[] {
  if (pred.length !== gt.length) {
    throw new Error("mask lengths differ");
  }
  const inter = new Array(N_BRANCHES).fill(0);
  const predCount = new Array(N_BRANCHES).fill(0);
  const gtCount = new Array(N_BRANCHES).fill(0);
  for (let i = 0; i < pred.length; i++) {
    predCount[pred[i]]++;
    gtCount[gt[i]]++;
    if (pred[i] === gt[i]) inter[pred[i]]++;
  }
  const out: number[] = [];
  for (let b = 1; b < N_BRANCHES; b++) {
    const denom = predCount[b] + gtCount[b];
    out.push(denom === 0 ? 1 : (2 * inter[b]) / denom);
  }
  return out;
}
