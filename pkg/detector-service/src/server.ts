/**
 * Serves a detector over the line protocol: a TCP listener or the process
 * stdio pipes. Single connection at a time, sequential request handling,
 * traffic logged to stderr.
 */
import * as net from "node:net";

import {
  DetectionRequest,
  DetectionResponse,
  LineAccumulator,
  ProtocolError,
  parseRequest,
  serializeResponse,
} from "./protocol.js";

export type Responder = (req: DetectionRequest) => Promise<DetectionResponse> | DetectionResponse;

function logLine(message: string) {
  process.stderr.write(`[detector-service] ${message}\n`);
}

/** Handle one raw line; returns the response line to write, if any. */
export async function handleLine(line: Buffer, responder: Responder): Promise<string | null> {
  let req: DetectionRequest;
  try {
    req = parseRequest(line);
  } catch (e) {
    if (e instanceof ProtocolError) {
      // Recoverable only if the line carried a usable id to echo.
      try {
        const data = JSON.parse(line.toString("utf-8")) as Record<string, unknown>;
        const id = data && (typeof data.id === "string" || typeof data.id === "number") ? String(data.id) : null;
        if (id !== null) {
          logLine(`malformed request ${id}: ${e.message}`);
          return serializeResponse({ id, detected: false, confidence: 0, error: e.message } as DetectionResponse);
        }
      } catch {
        // fall through: not even JSON
      }
      logLine(`skipping unrecoverable line: ${e.message}`);
      return null;
    }
    throw e;
  }
  const resp = await responder(req);
  logLine(`request ${req.id} lang=${JSON.stringify(req.lang)} -> detected=${resp.detected}`);
  return serializeResponse(resp);
}

export function serveTcp(responder: Responder, port: number, host = "127.0.0.1"): Promise<net.Server> {
  const server = net.createServer((socket) => {
    const acc = new LineAccumulator();
    let queue: Promise<void> = Promise.resolve();
    socket.on("data", (chunk) => {
      let lines: Buffer[];
      try {
        lines = acc.push(chunk);
      } catch (e) {
        logLine(`dropping oversize input: ${e}`);
        return;
      }
      for (const line of lines) {
        queue = queue.then(async () => {
          const out = await handleLine(line, responder);
          if (out !== null && !socket.destroyed) socket.write(out);
        });
      }
    });
    socket.on("error", (e) => logLine(`socket error: ${e.message}`));
  });
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const addr = server.address() as net.AddressInfo;
      logLine(`listening on tcp:${host}:${addr.port}`);
      resolve(server);
    });
  });
}

export function serveStdio(responder: Responder): Promise<void> {
  const acc = new LineAccumulator();
  let queue: Promise<void> = Promise.resolve();
  return new Promise((resolve) => {
    process.stdin.on("data", (chunk: Buffer) => {
      let lines: Buffer[];
      try {
        lines = acc.push(chunk);
      } catch (e) {
        logLine(`dropping oversize input: ${e}`);
        return;
      }
      for (const line of lines) {
        queue = queue.then(async () => {
          const out = await handleLine(line, responder);
          if (out !== null) process.stdout.write(out);
        });
      }
    });
    process.stdin.on("end", () => {
      void queue.then(() => resolve());
    });
  });
}
