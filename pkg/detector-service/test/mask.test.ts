import { describe, expect, it } from "vitest";

import { maskToDetection } from "../src/mask.js";
import { ModelDetector, demoInfer } from "../src/model.js";

function scoreMap(width: number, height: number, entries: Array<[number, number, number]>) {
  const scores = new Float32Array(width * height);
  for (const [u, v, s] of entries) scores[v * width + u] = s;
  return { scores, width, height };
}

describe("mask post-processing", () => {
  it("computes the centroid, mean depth and mean score of a known mask", () => {
    // Mask: the 2x3 block u in {3,4}, v in {2,3,4}.
    // Precomputed offline: centroid u = 3.5, v = 3.0;
    // mean score = (0.8*3 + 0.9*3) / 6 = 0.85; mean depth = 1.25.
    const entries: Array<[number, number, number]> = [
      [3, 2, 0.8], [4, 2, 0.9],
      [3, 3, 0.8], [4, 3, 0.9],
      [3, 4, 0.8], [4, 4, 0.9],
    ];
    const map = scoreMap(8, 6, entries);
    const depth = new Float32Array(8 * 6).fill(99);
    for (const [u, v] of entries) depth[v * 8 + u] = 1.25;
    const det = maskToDetection({ ...map, depth }, 0.5);
    expect(det.detected).toBe(true);
    expect(det.u).toBeCloseTo(3.5, 12);
    expect(det.v).toBeCloseTo(3.0, 12);
    expect(det.confidence).toBeCloseTo(0.85, 6);
    expect(det.depthM).toBeCloseTo(1.25, 12);
    expect(det.maskSize).toBe(6);
  });

  it("empty mask means no detection", () => {
    const det = maskToDetection(scoreMap(4, 4, []), 0.5);
    expect(det.detected).toBe(false);
    expect(det.confidence).toBe(0);
  });

  it("undersized masks are filtered", () => {
    const det = maskToDetection(scoreMap(4, 4, [[1, 1, 0.99]]), 0.5, 4);
    expect(det.detected).toBe(false);
  });

  it("rejects mismatched dimensions", () => {
    expect(() => maskToDetection({ scores: new Float32Array(5), width: 2, height: 2 })).toThrow();
  });
});

describe("model wrapper", () => {
  const intrinsics = { fx: 100, fy: 100, cx: 150, cy: 150 };

  it("serves detection responses from the demo score-map format", async () => {
    const detector = new ModelDetector(demoInfer, { threshold: 0.5, minMaskPixels: 1 });
    // 3x2 map with two mask pixels at (1,0) and (1,1): centroid (1, 0.5).
    const rgb = "scores:3:2:0,0.9,0,0,0.7,0";
    const resp = await detector.respond({ id: "m1", lang: "x", rgb, depth: null, intrinsics });
    expect(resp.detected).toBe(true);
    if (resp.detected) {
      expect(resp.u).toBeCloseTo(1, 12);
      expect(resp.v).toBeCloseTo(0.5, 12);
      expect(resp.confidence).toBeCloseTo(0.8, 6);
    }
  });

  it("blank input means detected=false", async () => {
    const detector = new ModelDetector(demoInfer, { threshold: 0.5, minMaskPixels: 1 });
    const resp = await detector.respond({
      id: "m2",
      lang: "x",
      rgb: "scores:2:2:0,0,0,0",
      depth: null,
      intrinsics,
    });
    expect(resp.detected).toBe(false);
  });

  it("unparseable image references are a clean non-detection", async () => {
    const detector = new ModelDetector(demoInfer);
    const resp = await detector.respond({
      id: "m3",
      lang: "x",
      rgb: "/no/such/asset.png",
      depth: null,
      intrinsics,
    });
    expect(resp.detected).toBe(false);
    expect(resp.confidence).toBe(0);
  });
});
