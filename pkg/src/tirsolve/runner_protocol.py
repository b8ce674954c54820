"""Line protocol spoken between the harness and execution workers.

The worker reads one job per line on stdin and writes one reply per line on
stdout, both as UTF-8 JSON objects, and exits when stdin closes.  Jobs carry
the code to run plus a timeout and an output cap; replies echo the job id and
report captured streams, a status and the measured duration.  Output beyond
``max_output_bytes`` is cut and marked with a trailing ``…[truncated]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

TRUNCATION_MARKER = "…[truncated]"
DEFAULT_TIMEOUT_MS = 10_000
MAX_TIMEOUT_MS = 120_000
DEFAULT_MAX_OUTPUT_BYTES = 65_536
MAX_OUTPUT_BYTES = 1 << 20

REPLY_STATUSES = ("ok", "nonzero_exit", "timeout", "runner_failure")


class ProtocolViolation(ValueError):
    """A job or reply line does not follow the wire contract."""


@dataclass(frozen=True)
class ExecJob:
    id: str
    code: str
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES
    restricted: bool = False  # reserved for future capability drops

    def __post_init__(self) -> None:
        if not self.id:
            raise ProtocolViolation("job id must be non-empty")
        if not 1 <= self.timeout_ms <= MAX_TIMEOUT_MS:
            raise ProtocolViolation(f"timeout_ms must be within [1, {MAX_TIMEOUT_MS}]")
        if not 64 <= self.max_output_bytes <= MAX_OUTPUT_BYTES:
            raise ProtocolViolation(
                f"max_output_bytes must be within [64, {MAX_OUTPUT_BYTES}]"
            )


@dataclass(frozen=True)
class ExecReply:
    id: str
    stdout: str
    stderr: str
    status: str
    duration_ms: int

    def __post_init__(self) -> None:
        if self.status not in REPLY_STATUSES:
            raise ProtocolViolation(f"unknown reply status {self.status!r}")


def job_to_line(job: ExecJob) -> str:
    record = {
        "id": job.id,
        "code": job.code,
        "timeout_ms": job.timeout_ms,
        "max_output_bytes": job.max_output_bytes,
        "restricted": job.restricted,
    }
    return json.dumps(record, ensure_ascii=False)


def job_from_line(line: str) -> ExecJob:
    record = _parse_object(line)
    try:
        return ExecJob(
            id=str(record["id"]),
            code=str(record["code"]),
            timeout_ms=int(record.get("timeout_ms", DEFAULT_TIMEOUT_MS)),
            max_output_bytes=int(record.get("max_output_bytes", DEFAULT_MAX_OUTPUT_BYTES)),
            restricted=bool(record.get("restricted", False)),
        )
    except KeyError as exc:
        raise ProtocolViolation(f"job line missing field {exc}") from None


def reply_to_line(reply: ExecReply) -> str:
    record = {
        "id": reply.id,
        "stdout": reply.stdout,
        "stderr": reply.stderr,
        "status": reply.status,
        "duration_ms": reply.duration_ms,
    }
    return json.dumps(record, ensure_ascii=False)


def reply_from_line(line: str) -> ExecReply:
    record = _parse_object(line)
    try:
        return ExecReply(
            id=str(record["id"]),
            stdout=str(record["stdout"]),
            stderr=str(record["stderr"]),
            status=str(record["status"]),
            duration_ms=int(record["duration_ms"]),
        )
    except KeyError as exc:
        raise ProtocolViolation(f"reply line missing field {exc}") from None


def _parse_object(line: str) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolViolation(f"not valid JSON: {exc.msg}") from None
    if not isinstance(record, dict):
        raise ProtocolViolation("line must hold a JSON object")
    return record


def truncate_output(text: str, max_bytes: int) -> str:
    """Cap ``text`` at ``max_bytes`` UTF-8 bytes, marking the cut."""
    raw = text.encode("utf-8")
    if len(raw) <= max_bytes:
        return text
    marker = TRUNCATION_MARKER.encode("utf-8")
    keep = max(0, max_bytes - len(marker))
    head = raw[:keep].decode("utf-8", errors="ignore")
    return head + TRUNCATION_MARKER
