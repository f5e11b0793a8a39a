/**
 * Segmentation-mask post-processing: the step between a per-pixel score
 * map and a protocol response. Scores are binarized at a threshold; an
 * empty (or too small) mask means no detection; otherwise the detection
 * carries the mask's centroid pixel, the mean depth over mask pixels, and
 * the mean pixel score as the confidence.
 */

export interface ScoreMap {
  scores: Float32Array | number[];
  width: number;
  height: number;
  /** Depth in meters per pixel, aligned with scores; optional. */
  depth?: Float32Array | number[];
}

export interface MaskDetection {
  detected: boolean;
  u?: number;
  v?: number;
  depthM?: number;
  confidence: number;
  maskSize: number;
}

export function maskToDetection(
  map: ScoreMap,
  threshold = 0.5,
  minMaskPixels = 1,
  fallbackDepthM = 1.0,
): MaskDetection {
  const { scores, width, height } = map;
  if (scores.length !== width * height) {
    throw new Error(`score map of ${scores.length} values does not match ${width}x${height}`);
  }
  let count = 0;
  let sumU = 0;
  let sumV = 0;
  let sumScore = 0;
  let sumDepth = 0;
  for (let v = 0; v < height; v++) {
    for (let u = 0; u < width; u++) {
      const s = scores[v * width + u];
      if (s >= threshold) {
        count += 1;
        sumU += u;
        sumV += v;
        sumScore += s;
        sumDepth += map.depth ? Number(map.depth[v * width + u]) : fallbackDepthM;
      }
    }
  }
  if (count < Math.max(minMaskPixels, 1)) {
    return { detected: false, confidence: 0, maskSize: count };
  }
  return {
    detected: true,
    u: sumU / count,
    v: sumV / count,
    depthM: sumDepth / count,
    confidence: sumScore / count,
    maskSize: count,
  };
}
