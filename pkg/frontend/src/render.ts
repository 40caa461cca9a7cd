/** Pure presentation helpers: everything derives from the latest frame. */

import type { Rgb } from "./protocol.js";
import type { EpisodeScore } from "./state.js";

export function rgbCss(rgb: Rgb): string {
  return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}

const BLACK: Rgb = [0, 0, 0];

/**
 * The (2r+1)×(2r+1) crop of the board image centred on the gripper,
 * black-padded where it hangs over the edge — the same window the
 * learning agent sees (r = 5).
 */
export function cropView(image: Rgb[][], gripper: [number, number], radius = 5): Rgb[][] {
  const [gx, gy] = gripper;
  const height = image.length;
  const width = height > 0 ? image[0]!.length : 0;
  const out: Rgb[][] = [];
  for (let dy = -radius; dy <= radius; dy++) {
    const row: Rgb[] = [];
    const y = gy + dy;
    for (let dx = -radius; dx <= radius; dx++) {
      const x = gx + dx;
      if (y < 0 || y >= height || x < 0 || x >= width) {
        row.push(BLACK);
      } else {
        row.push(image[y]![x]!);
      }
    }
    out.push(row);
  }
  return out;
}

/** Terminal reward exactly as the server sent it. */
export function formatReward(reward: number): string {
  return String(reward);
}

export interface ScoreSummary {
  episodes: number;
  successes: number;
  msr: number;
}

export function scoreSummary(scores: EpisodeScore[]): ScoreSummary {
  const successes = scores.filter((s) => s.status === "correct").length;
  return {
    episodes: scores.length,
    successes,
    msr: scores.length === 0 ? 0 : successes / scores.length,
  };
}
