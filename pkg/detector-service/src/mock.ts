/**
 * Scriptable detector: answers each request from a script file.
 *
 * Script schema (JSON):
 *   {
 *     "responses": [            // keyed: first entry whose match fields all
 *       {"match": {"lang": "the mug", "rgb": "sim://s/3"},
 *        "reply": {"detected": true, "u": 150, "v": 150, "depth_m": 1.0,
 *                   "confidence": 0.9}}
 *     ],
 *     "sequence": [ {...reply}, ... ],   // ordered: consumed one per request
 *     "fallback": {"detected": false, "confidence": 0.1}
 *   }
 *
 * Lookup order: keyed match, then next sequence entry, then fallback.
 * Replies echo the request id. Deterministic for a given request stream.
 */
import { z } from "zod";

import { DetectionRequest, DetectionResponse, responseSchema } from "./protocol.js";

const replySchema = z.union([
  z
    .object({
      detected: z.literal(true),
      u: z.number(),
      v: z.number(),
      depth_m: z.number(),
      confidence: z.number().min(0),
    })
    .passthrough(),
  z
    .object({
      detected: z.literal(false),
      confidence: z.number().min(0),
    })
    .passthrough(),
]);

const scriptSchema = z.object({
  responses: z
    .array(
      z.object({
        match: z.object({ lang: z.string().optional(), rgb: z.string().optional() }),
        reply: replySchema,
      }),
    )
    .default([]),
  sequence: z.array(replySchema).default([]),
  fallback: replySchema.default({ detected: false, confidence: 0.0 }),
});

export type MockScript = z.infer<typeof scriptSchema>;
type Reply = z.infer<typeof replySchema>;

export function parseScript(text: string): MockScript {
  const parsed = scriptSchema.safeParse(JSON.parse(text));
  if (!parsed.success) {
    throw new Error("invalid mock script: " + parsed.error.issues.map((i) => i.path.join(".") + ": " + i.message).join("; "));
  }
  return parsed.data;
}

export class MockDetector {
  private cursor = 0;

  constructor(private script: MockScript) {}

  respond(req: DetectionRequest): DetectionResponse {
    const reply = this.pick(req);
    const withId = { ...reply, id: req.id };
    return responseSchema.parse(withId);
  }

  private pick(req: DetectionRequest): Reply {
    for (const entry of this.script.responses) {
      const langOk = entry.match.lang === undefined || entry.match.lang === req.lang;
      const rgbOk = entry.match.rgb === undefined || entry.match.rgb === req.rgb;
      if (langOk && rgbOk) return entry.reply;
    }
    if (this.cursor < this.script.sequence.length) {
      return this.script.sequence[this.cursor++];
    }
    return this.script.fallback;
  }
}
