#!/usr/bin/env node
/**
 * detector-service mock  --script script.json [--port N | --stdio]
 * detector-service model --module ./model.js [--threshold 0.5]
 *                        [--min-mask 4] [--port N | --stdio]
 * detector-service model --demo --stdio
 */
import { readFileSync } from "node:fs";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { MockDetector, parseScript } from "./mock.js";
import { ModelDetector, demoInfer, loadModel } from "./model.js";
import { Responder, serveStdio, serveTcp } from "./server.js";

async function serve(responder: Responder, argv: { port?: number; stdio?: boolean }) {
  if (argv.stdio || argv.port === undefined) {
    await serveStdio(responder);
  } else {
    await serveTcp(responder, argv.port);
    await new Promise(() => undefined); // run until killed
  }
}

void yargs(hideBin(process.argv))
  .command(
    "mock",
    "serve scripted responses",
    (y) =>
      y
        .option("script", { type: "string", demandOption: true })
        .option("port", { type: "number" })
        .option("stdio", { type: "boolean", default: false }),
    async (argv) => {
      const script = parseScript(readFileSync(argv.script, "utf-8"));
      const mock = new MockDetector(script);
      await serve((req) => mock.respond(req), argv);
    },
  )
  .command(
    "model",
    "serve a segmentation model",
    (y) =>
      y
        .option("module", { type: "string" })
        .option("demo", { type: "boolean", default: false })
        .option("threshold", { type: "number", default: 0.5 })
        .option("min-mask", { type: "number", default: 4 })
        .option("port", { type: "number" })
        .option("stdio", { type: "boolean", default: false }),
    async (argv) => {
      let infer;
      if (argv.demo) {
        infer = demoInfer;
      } else if (argv.module) {
        infer = await loadModel(argv.module);
      } else {
        throw new Error("model mode needs --module PATH or --demo");
      }
      const detector = new ModelDetector(infer, {
        threshold: argv.threshold,
        minMaskPixels: argv["min-mask"],
      });
      await serve((req) => detector.respond(req), argv);
    },
  )
  .demandCommand(1)
  .strict()
  .parse();
