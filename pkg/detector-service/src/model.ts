/**
 * Thin wrapper turning a segmentation model into a protocol detector.
 *
 * The model is any module exporting `infer(request) -> ScoreMap | null`
 * (per-pixel scores plus optional aligned depth). The wrapper binarizes
 * the scores, drops masks below a pixel-count floor (undersized masks are
 * treated as no detection, standing in for a model trained to return empty
 * masks on negatives), and reports centroid / mean depth / mean score.
 *
 * A demo model ships for end-to-end runs without model assets: it reads
 * synthetic images of the form `scores:W:H:v0,v1,...` (row-major scores
 * in [0,1]) and ignores the language.
 */
import { pathToFileURL } from "node:url";

import { maskToDetection, ScoreMap } from "./mask.js";
import { DetectionRequest, DetectionResponse } from "./protocol.js";

export interface ModelConfig {
  threshold: number;
  minMaskPixels: number;
}

export type InferFn = (req: DetectionRequest) => Promise<ScoreMap | null> | ScoreMap | null;

export async function loadModel(modulePath: string): Promise<InferFn> {
  let mod: Record<string, unknown>;
  try {
    mod = (await import(pathToFileURL(modulePath).href)) as Record<string, unknown>;
  } catch (e) {
    throw new Error(`cannot load model module ${modulePath}: ${e}`);
  }
  const infer = mod.infer ?? (mod.default as Record<string, unknown> | undefined)?.infer;
  if (typeof infer !== "function") {
    throw new Error(`model module ${modulePath} does not export an infer() function`);
  }
  return infer as InferFn;
}

export function demoInfer(req: DetectionRequest): ScoreMap | null {
  const match = /^scores:(\d+):(\d+):(.*)$/.exec(req.rgb);
  if (!match) return null;
  const width = Number(match[1]);
  const height = Number(match[2]);
  const values = match[3].length ? match[3].split(",").map(Number) : [];
  if (values.length !== width * height || values.some((v) => !Number.isFinite(v))) {
    return null;
  }
  return { scores: values, width, height };
}

export class ModelDetector {
  constructor(
    private infer: InferFn,
    private config: ModelConfig = { threshold: 0.5, minMaskPixels: 4 },
  ) {}

  async respond(req: DetectionRequest): Promise<DetectionResponse> {
    let map: ScoreMap | null;
    try {
      map = await this.infer(req);
    } catch (e) {
      // Per-request inference failure: flagged, not fatal.
      return { id: req.id, detected: false, confidence: 0, error: `inference failed: ${e}` } as DetectionResponse;
    }
    if (map === null) {
      return { id: req.id, detected: false, confidence: 0 };
    }
    const det = maskToDetection(map, this.config.threshold, this.config.minMaskPixels);
    if (!det.detected) {
      return { id: req.id, detected: false, confidence: det.confidence };
    }
    return {
      id: req.id,
      detected: true,
      u: det.u!,
      v: det.v!,
      depth_m: det.depthM!,
      confidence: det.confidence,
    };
  }
}
