/**
 * Execution worker entry point.
 *
 * Reads one job per line from stdin, runs jobs strictly one at a time in
 * arrival order, and writes one reply line to stdout for every input line —
 * including malformed ones, which get a `runner_failure` reply so a driver
 * is never left waiting. Exits 0 once stdin closes and the queue drains.
 */

import { createInterface } from "node:readline";

import { formatReplyLine, parseJobLine, ProtocolError } from "./protocol.js";
import { runJob } from "./run-job.js";

function writeReply(line: string): void {
  try {
    process.stdout.write(line + "\n");
  } catch {
    process.exit(1); // driver is gone; nothing useful left to do
  }
}

async function handleLine(line: string): Promise<void> {
  if (line.trim() === "") {
    return;
  }
  let reply;
  try {
    reply = await runJob(parseJobLine(line));
  } catch (error) {
    const jobId = error instanceof ProtocolError ? error.jobId : "";
    reply = {
      id: jobId,
      stdout: "",
      stderr: `bad job line: ${(error as Error).message}`,
      status: "runner_failure" as const,
      duration_ms: 0,
    };
  }
  writeReply(formatReplyLine(reply));
}

function main(): void {
  let queue: Promise<void> = Promise.resolve();
  const reader = createInterface({ input: process.stdin, terminal: false });
  reader.on("line", (line) => {
    queue = queue.then(() => handleLine(line));
  });
  reader.on("close", () => {
    void queue.then(() => process.exit(0));
  });
}

main();
