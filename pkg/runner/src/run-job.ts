/**
 * Runs one job: a fresh `python3` subprocess in its own empty scratch
 * directory, fed the program on stdin, killed at the wall-clock timeout,
 * with both output streams captured under a byte cap.
 */

import { spawn } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { type ExecJob, type ExecReply, truncateOutput } from "./protocol.js";

export const PYTHON = process.env.RUNNER_PYTHON ?? "python3";

/**
 * Retains at most `capBytes` of a stream while always consuming it, so a
 * chatty child is never blocked on a full pipe.
 */
class CappedCollector {
  private readonly chunks: Buffer[] = [];
  private retained = 0;
  overflowed = false;

  constructor(private readonly capBytes: number) {}

  push(chunk: Buffer): void {
    if (this.retained >= this.capBytes) {
      this.overflowed = true;
      return;
    }
    const room = this.capBytes - this.retained;
    if (chunk.length > room) {
      this.chunks.push(chunk.subarray(0, room));
      this.retained += room;
      this.overflowed = true;
    } else {
      this.chunks.push(chunk);
      this.retained += chunk.length;
    }
  }

  text(): string {
    return truncateOutput(Buffer.concat(this.chunks), this.capBytes, this.overflowed);
  }
}

export async function runJob(job: ExecJob): Promise<ExecReply> {
  const scratchDir = await mkdtemp(join(tmpdir(), "exec-job-"));
  try {
    return await execute(job, scratchDir);
  } finally {
    await rm(scratchDir, { recursive: true, force: true }).catch(() => {});
  }
}

function execute(job: ExecJob, scratchDir: string): Promise<ExecReply> {
  const started = process.hrtime.bigint();
  const elapsedMs = (): number => Number((process.hrtime.bigint() - started) / 1_000_000n);

  return new Promise((resolve) => {
    const stdout = new CappedCollector(job.maxOutputBytes);
    const stderr = new CappedCollector(job.maxOutputBytes);
    let timedOut = false;
    let settled = false;

    const child = spawn(PYTHON, ["-"], {
      cwd: scratchDir,
      stdio: ["pipe", "pipe", "pipe"],
    });

    const finish = (reply: Omit<ExecReply, "id">): void => {
      if (settled) return;
      settled = true;
      clearTimeout(killTimer);
      resolve({ id: job.id, ...reply });
    };

    const killTimer = setTimeout(() => {
      timedOut = true;
      child.kill("SIGKILL");
    }, job.timeoutMs);

    child.stdout.on("data", (chunk: Buffer) => stdout.push(chunk));
    child.stderr.on("data", (chunk: Buffer) => stderr.push(chunk));

    child.on("error", (error) => {
      finish({
        stdout: "",
        stderr: `could not run ${PYTHON}: ${error.message}`,
        status: "runner_failure",
        duration_ms: elapsedMs(),
      });
    });

    // 'close' fires once the process has exited and both pipes are drained
    child.on("close", (code) => {
      const duration = elapsedMs();
      if (timedOut) {
        finish({
          stdout: stdout.text(),
          stderr: stderr.text(),
          status: "timeout",
          duration_ms: Math.max(duration, job.timeoutMs),
        });
      } else {
        finish({
          stdout: stdout.text(),
          stderr: stderr.text(),
          status: code === 0 ? "ok" : "nonzero_exit",
          duration_ms: duration,
        });
      }
    });

    child.stdin.on("error", () => {
      // the child may exit before reading all of its stdin; 'close' settles it
    });
    child.stdin.end(job.code);
  });
}
