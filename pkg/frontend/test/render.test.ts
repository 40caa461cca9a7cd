import { describe, expect, it } from "vitest";

import type { Rgb } from "../src/protocol.js";
import { cropView, formatReward, rgbCss, scoreSummary } from "../src/render.js";

function image(width: number, height: number): Rgb[][] {
  // unique per-tile color so misalignment is detectable
  return Array.from({ length: height }, (_, y) =>
    Array.from({ length: width }, (_, x): Rgb => [x, y, (x + y) % 256]),
  );
}

describe("cropView", () => {
  it("returns the identity crop when the window fits exactly", () => {
    const img = image(11, 11);
    expect(cropView(img, [5, 5])).toEqual(img);
  });

  it("is always (2r+1)² regardless of gripper position", () => {
    const img = image(20, 20);
    for (const g of [[0, 0], [19, 19], [10, 3]] as [number, number][]) {
      const crop = cropView(img, g);
      expect(crop).toHaveLength(11);
      for (const row of crop) expect(row).toHaveLength(11);
    }
  });

  it("black-pads tiles hanging over the edge", () => {
    const crop = cropView(image(20, 20), [0, 0]);
    // top-left corner: rows -5..-1 and cols -5..-1 are outside
    expect(crop[0]![0]).toEqual([0, 0, 0]);
    expect(crop[4]![4]).toEqual([0, 0, 0]);
    // the gripper tile itself sits at the window center
    expect(crop[5]![5]).toEqual([0, 0, 0 % 256]);
    expect(crop[5]![6]).toEqual([1, 0, 1]);
    expect(crop[6]![5]).toEqual([0, 1, 1]);
  });

  it("pads the far edges too", () => {
    const crop = cropView(image(20, 20), [19, 19]);
    expect(crop[5]![5]).toEqual([19, 19, 38 % 256]);
    expect(crop[5]![6]).toEqual([0, 0, 0]);
    expect(crop[6]![5]).toEqual([0, 0, 0]);
    expect(crop[10]![10]).toEqual([0, 0, 0]);
  });
});

describe("formatReward", () => {
  it.each([
    [1.91, "1.91"],
    [-0.45, "-0.45"],
    [-0.9, "-0.9"],
    [0.109, "0.109"],
  ])("shows %f exactly as %j", (value, text) => {
    expect(formatReward(value)).toBe(text);
  });
});

describe("scoreSummary", () => {
  it("is all zeros before the first episode", () => {
    expect(scoreSummary([])).toEqual({ episodes: 0, successes: 0, msr: 0 });
  });

  it("counts correct grips only", () => {
    const scores = [
      { taskId: "a", status: "correct", reward: 1.91, steps: 10 },
      { taskId: "b", status: "wrong", reward: -0.45, steps: 50 },
      { taskId: "c", status: "timeout", reward: -0.9, steps: 100 },
      { taskId: "d", status: "correct", reward: 1.73, steps: 30 },
    ];
    expect(scoreSummary(scores)).toEqual({ episodes: 4, successes: 2, msr: 0.5 });
  });
});

describe("rgbCss", () => {
  it("formats a tile color", () => {
    expect(rgbCss([255, 0, 128])).toBe("rgb(255,0,128)");
  });
});
