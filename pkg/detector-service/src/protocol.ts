/**
 * Wire protocol: UTF-8 JSON, one object per line.
 *
 * Request:  {id, lang, rgb, depth?, intrinsics: {fx, fy, cx, cy}}
 * Response: {id, detected, u?, v?, depth_m?, confidence}
 *
 * Unknown fields are ignored on input and may be emitted (e.g. `error`) as
 * long as the required fields stay valid. Lines above 16 MiB are rejected.
 */
import { z } from "zod";

export const MAX_LINE_BYTES = 16 * 1024 * 1024;

export const intrinsicsSchema = z
  .object({
    fx: z.number().positive(),
    fy: z.number().positive(),
    cx: z.number(),
    cy: z.number(),
  })
  .passthrough();

export const requestSchema = z
  .object({
    id: z.union([z.string(), z.number()]).transform((v) => String(v)),
    lang: z.string().min(1),
    rgb: z.string(),
    depth: z.string().nullish(),
    intrinsics: intrinsicsSchema,
  })
  .passthrough();

export type DetectionRequest = z.infer<typeof requestSchema>;

const detectedResponse = z
  .object({
    id: z.union([z.string(), z.number()]).transform((v) => String(v)),
    detected: z.literal(true),
    u: z.number(),
    v: z.number(),
    depth_m: z.number(),
    confidence: z.number().min(0),
  })
  .passthrough();

const emptyResponse = z
  .object({
    id: z.union([z.string(), z.number()]).transform((v) => String(v)),
    detected: z.literal(false),
    confidence: z.number().min(0),
  })
  .passthrough();

export const responseSchema = z.union([detectedResponse, emptyResponse]);

export type DetectionResponse = z.infer<typeof responseSchema>;

export class ProtocolError extends Error {
  constructor(
    public category: "malformed" | "oversize",
    message: string,
  ) {
    super(`${category}: ${message}`);
  }
}

function parseLine(line: Buffer | string): unknown {
  const byteLength = Buffer.byteLength(typeof line === "string" ? line : line.toString("utf-8"));
  if (byteLength > MAX_LINE_BYTES) {
    throw new ProtocolError("oversize", `line of ${byteLength} bytes exceeds ${MAX_LINE_BYTES}`);
  }
  let data: unknown;
  try {
    data = JSON.parse(typeof line === "string" ? line : line.toString("utf-8"));
  } catch (e) {
    throw new ProtocolError("malformed", `not a JSON line: ${e}`);
  }
  return data;
}

export function parseRequest(line: Buffer | string): DetectionRequest {
  const result = requestSchema.safeParse(parseLine(line));
  if (!result.success) {
    throw new ProtocolError("malformed", result.error.issues.map((i) => i.path.join(".") + ": " + i.message).join("; "));
  }
  return result.data;
}

export function parseResponse(line: Buffer | string): DetectionResponse {
  const result = responseSchema.safeParse(parseLine(line));
  if (!result.success) {
    throw new ProtocolError("malformed", result.error.issues.map((i) => i.path.join(".") + ": " + i.message).join("; "));
  }
  return result.data;
}

export function serializeResponse(resp: DetectionResponse): string {
  const base: Record<string, unknown> = { id: resp.id, detected: resp.detected, confidence: resp.confidence };
  if (resp.detected) {
    base.u = (resp as { u: number }).u;
    base.v = (resp as { v: number }).v;
    base.depth_m = (resp as { depth_m: number }).depth_m;
  }
  for (const [key, value] of Object.entries(resp)) {
    if (!(key in base) && !["u", "v", "depth_m"].includes(key)) base[key] = value;
  }
  return JSON.stringify(base) + "\n";
}

export function serializeRequest(req: DetectionRequest): string {
  return JSON.stringify(req) + "\n";
}

/** Incremental newline splitter enforcing the line-size cap. */
export class LineAccumulator {
  private buffer = Buffer.alloc(0);

  push(chunk: Buffer): Buffer[] {
    this.buffer = Buffer.concat([this.buffer, chunk]);
    if (this.buffer.length > MAX_LINE_BYTES && !this.buffer.includes(0x0a)) {
      this.buffer = Buffer.alloc(0);
      throw new ProtocolError("oversize", "peer sent an overlong line");
    }
    const lines: Buffer[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf(0x0a)) >= 0) {
      lines.push(this.buffer.subarray(0, idx));
      this.buffer = this.buffer.subarray(idx + 1);
    }
    return lines;
  }
}
