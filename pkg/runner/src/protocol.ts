/**
 * Wire types for the execution job protocol.
 *
 * One JSON object per line: jobs arrive on stdin, replies leave on stdout.
 * A job carries the program text plus a wall-clock timeout and a byte cap on
 * each captured stream; the reply echoes the job id and reports the streams,
 * a status, and the measured duration.
 */

export const TRUNCATION_MARKER = "…[truncated]";
export const DEFAULT_TIMEOUT_MS = 10_000;
export const MAX_TIMEOUT_MS = 120_000;
export const DEFAULT_MAX_OUTPUT_BYTES = 65_536;
export const MIN_OUTPUT_BYTES = 64;
export const MAX_OUTPUT_BYTES = 1 << 20;

export interface ExecJob {
  id: string;
  code: string;
  timeoutMs: number;
  maxOutputBytes: number;
  /** Reserved for future capability drops; accepted and ignored. */
  restricted: boolean;
}

export type ReplyStatus = "ok" | "nonzero_exit" | "timeout" | "runner_failure";

export interface ExecReply {
  id: string;
  stdout: string;
  stderr: string;
  status: ReplyStatus;
  duration_ms: number;
}

/** A job line that does not follow the wire contract. */
export class ProtocolError extends Error {
  /** Job id recovered from the offending line, when there was one. */
  readonly jobId: string;

  constructor(message: string, jobId = "") {
    super(message);
    this.name = "ProtocolError";
    this.jobId = jobId;
  }
}

function asInt(value: unknown, field: string, jobId: string): number {
  if (typeof value !== "number" || !Number.isInteger(value)) {
    throw new ProtocolError(`${field} must be an integer`, jobId);
  }
  return value;
}

export function parseJobLine(line: string): ExecJob {
  let record: unknown;
  try {
    record = JSON.parse(line);
  } catch (error) {
    throw new ProtocolError(`not valid JSON: ${(error as Error).message}`);
  }
  if (typeof record !== "object" || record === null || Array.isArray(record)) {
    throw new ProtocolError("line must hold a JSON object");
  }
  const fields = record as Record<string, unknown>;
  const id = typeof fields.id === "string" ? fields.id : "";
  if (!id) {
    throw new ProtocolError("job id must be a non-empty string");
  }
  if (typeof fields.code !== "string") {
    throw new ProtocolError("job code must be a string", id);
  }
  const timeoutMs =
    fields.timeout_ms === undefined
      ? DEFAULT_TIMEOUT_MS
      : asInt(fields.timeout_ms, "timeout_ms", id);
  if (timeoutMs < 1 || timeoutMs > MAX_TIMEOUT_MS) {
    throw new ProtocolError(`timeout_ms must be within [1, ${MAX_TIMEOUT_MS}]`, id);
  }
  const maxOutputBytes =
    fields.max_output_bytes === undefined
      ? DEFAULT_MAX_OUTPUT_BYTES
      : asInt(fields.max_output_bytes, "max_output_bytes", id);
  if (maxOutputBytes < MIN_OUTPUT_BYTES || maxOutputBytes > MAX_OUTPUT_BYTES) {
    throw new ProtocolError(
      `max_output_bytes must be within [${MIN_OUTPUT_BYTES}, ${MAX_OUTPUT_BYTES}]`,
      id,
    );
  }
  return {
    id,
    code: fields.code,
    timeoutMs,
    maxOutputBytes,
    restricted: Boolean(fields.restricted),
  };
}

export function formatReplyLine(reply: ExecReply): string {
  return JSON.stringify({
    id: reply.id,
    stdout: reply.stdout,
    stderr: reply.stderr,
    status: reply.status,
    duration_ms: reply.duration_ms,
  });
}

const MARKER_BYTES = Buffer.byteLength(TRUNCATION_MARKER, "utf-8");

/**
 * Cut `raw` back to a codepoint boundary at or before `limit` bytes.
 *
 * A byte cut through valid UTF-8 can only leave an incomplete sequence at the
 * very end, so it is enough to drop a trailing lead byte and its
 * continuation bytes.
 */
function utf8Head(raw: Buffer, limit: number): Buffer {
  let end = Math.min(limit, raw.length);
  for (let back = 1; back <= 3 && end - back >= 0; back++) {
    const byte = raw[end - back]!;
    if ((byte & 0b1100_0000) !== 0b1000_0000) {
      // found the lead byte of the final sequence
      const sequenceLength =
        (byte & 0b1000_0000) === 0 ? 1 : (byte & 0b1110_0000) === 0b1100_0000 ? 2 : (byte & 0b1111_0000) === 0b1110_0000 ? 3 : 4;
      if (sequenceLength > back) {
        end -= back; // sequence is cut short: drop it entirely
      }
      break;
    }
  }
  return raw.subarray(0, end);
}

/** Cap captured output at `maxBytes` UTF-8 bytes, marking the cut. */
export function truncateOutput(raw: Buffer, maxBytes: number, overflowed: boolean): string {
  if (!overflowed && raw.length <= maxBytes) {
    return raw.toString("utf-8");
  }
  const keep = Math.max(0, maxBytes - MARKER_BYTES);
  return utf8Head(raw, keep).toString("utf-8") + TRUNCATION_MARKER;
}
