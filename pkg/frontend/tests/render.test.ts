import { describe, expect, it } from "vitest";

import { BRANCH_COLORS } from "../src/palette.js";
import { parseFrame } from "../src/protocol.js";
import { compositeFrame, legendEntries, OVERLAY_ALPHA } from "../src/render.js";
import { makeFramePayload, makeMeta } from "./protocol.test.js";

const ALL = { prediction: true, groundTruth: true, difference: true };

function frameWith(pred: number[], gt: number[], image?: number[]) {
  return parseFrame(makeFramePayload({ pred, gt, image }), makeMeta());
}

describe("compositeFrame", () => {
  it("an all-background frame renders as plain grayscale", () => {
    const frame = frameWith(new Array(12).fill(0), new Array(12).fill(0), new Array(12).fill(0.5));
    const rgba = compositeFrame(frame, ALL);
    for (let i = 0; i < 12; i++) {
      expect(rgba[4 * i]).toBe(128);
      expect(rgba[4 * i + 1]).toBe(128);
      expect(rgba[4 * i + 2]).toBe(128);
      expect(rgba[4 * i + 3]).toBe(255);
    }
  });

  it("an oracle frame (pred = gt) leaves the difference overlay empty", () => {
    const mask = [1, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0];
    const frame = frameWith(mask, mask);
    const withDiff = compositeFrame(frame, ALL);
    const withoutDiff = compositeFrame(frame, { ...ALL, difference: false });
    expect(withDiff).toEqual(withoutDiff);
  });

  it("branch colors are applied where predicted", () => {
    const pred = new Array(12).fill(0);
    pred[0] = 3;
    const frame = frameWith(pred, new Array(12).fill(0), new Array(12).fill(0));
    const rgba = compositeFrame(frame, { prediction: true, groundTruth: false, difference: false });
    const c = BRANCH_COLORS[3];
    expect(rgba[0]).toBe(Math.round(OVERLAY_ALPHA * c.r));
    expect(rgba[1]).toBe(Math.round(OVERLAY_ALPHA * c.g));
    expect(rgba[2]).toBe(Math.round(OVERLAY_ALPHA * c.b));
    // neighboring background pixel untouched
    expect(rgba[4]).toBe(0);
  });

  it("disagreeing pixels get the difference highlight", () => {
    const pred = new Array(12).fill(0);
    const gt = new Array(12).fill(0);
    pred[5] = 1;
    const frame = frameWith(pred, gt);
    const diffOn = compositeFrame(frame, { prediction: false, groundTruth: false, difference: true });
    const diffOff = compositeFrame(frame, { prediction: false, groundTruth: false, difference: false });
    expect(diffOn.slice(20, 24)).not.toEqual(diffOff.slice(20, 24));
    expect(diffOn.slice(0, 20)).toEqual(diffOff.slice(0, 20));
  });
});

describe("legendEntries", () => {
  it("lists the five branch names with fixed colors", () => {
    const entries = legendEntries(makeMeta().labels);
    expect(entries.map((e) => e.name)).toEqual(["MPV", "RLPV", "RMPV", "LMPV", "LLPV"]);
    expect(entries[0].css).toBe("rgb(230, 159, 0)");
  });
});
