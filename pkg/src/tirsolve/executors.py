"""Code executors behind a single contract: run(code, timeout_ms) -> result.

``StubExecutor`` evaluates code inside this process; it exists so the
pipeline can be exercised end to end without a worker binary.  It honors the
worker's observable contract (captured streams, statuses, truncation, one job
at a time) but provides no real isolation — use a worker for untrusted code.

``WorkerPoolExecutor`` drives a pool of external worker subprocesses over the
line protocol in :mod:`tirsolve.runner_protocol`.
"""
from __future__ import annotations

import contextlib
import ctypes
import io
import os
import queue
import select
import shlex
import subprocess
import sys
import threading
import time
import traceback
import uuid
from dataclasses import dataclass
from typing import Protocol

from .runner_protocol import (
    DEFAULT_MAX_OUTPUT_BYTES,
    DEFAULT_TIMEOUT_MS,
    ExecJob,
    ProtocolViolation,
    job_to_line,
    reply_from_line,
    truncate_output,
)


@dataclass(frozen=True)
class ExecutionResult:
    stdout: str
    stderr: str
    status: str  # ok | nonzero_exit | timeout | runner_failure
    duration_ms: int

    def to_record(self) -> dict:
        return {
            "stdout": self.stdout,
            "stderr": self.stderr,
            "status": self.status,
            "duration_ms": self.duration_ms,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ExecutionResult":
        return cls(
            stdout=str(record["stdout"]),
            stderr=str(record["stderr"]),
            status=str(record["status"]),
            duration_ms=int(record["duration_ms"]),
        )


class Executor(Protocol):
    def run(self, code: str, timeout_ms: int | None = None) -> ExecutionResult: ...


class _StubTimeout(BaseException):
    pass


class StubExecutor:
    """In-process executor: exec() on a helper thread with captured streams.

    A job past its deadline gets :class:`_StubTimeout` raised inside it via
    the interpreter's async-exception hook.  Code blocking inside a single C
    call cannot be interrupted that way; such a job is abandoned on its daemon
    thread and still reported as a timeout.
    """

    def __init__(
        self,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES,
    ) -> None:
        self.timeout_ms = timeout_ms
        self.max_output_bytes = max_output_bytes
        self._one_at_a_time = threading.Lock()

    def run(self, code: str, timeout_ms: int | None = None) -> ExecutionResult:
        effective_timeout = timeout_ms if timeout_ms is not None else self.timeout_ms
        with self._one_at_a_time:
            return self._run(code, effective_timeout)

    def _run(self, code: str, timeout_ms: int) -> ExecutionResult:
        out_buffer = io.StringIO()
        err_buffer = io.StringIO()
        started = time.monotonic()
        outcome = {"status": "ok"}

        def job() -> None:
            try:
                exec(compile(code, "<job>", "exec"), {"__name__": "__main__"})
            except _StubTimeout:
                outcome["status"] = "timeout"
            except SystemExit as exc:
                if exc.code not in (None, 0):
                    err_buffer.write(f"SystemExit: {exc.code}\n")
                    outcome["status"] = "nonzero_exit"
            except BaseException as exc:
                tb = exc.__traceback__
                if tb is not None:
                    tb = tb.tb_next  # drop the exec() frame
                err_buffer.write("".join(traceback.format_exception(type(exc), exc, tb)))
                outcome["status"] = "nonzero_exit"

        worker = threading.Thread(target=job, daemon=True)
        with contextlib.redirect_stdout(out_buffer), contextlib.redirect_stderr(err_buffer):
            worker.start()
            worker.join(timeout_ms / 1000.0)
            if worker.is_alive():
                _async_raise(worker, _StubTimeout)
                worker.join(1.0)
        duration_ms = int((time.monotonic() - started) * 1000)
        status = "timeout" if worker.is_alive() else outcome["status"]
        if status == "timeout":
            duration_ms = max(duration_ms, timeout_ms)
        return ExecutionResult(
            stdout=truncate_output(out_buffer.getvalue(), self.max_output_bytes),
            stderr=truncate_output(err_buffer.getvalue(), self.max_output_bytes),
            status=status,
            duration_ms=duration_ms,
        )


def _async_raise(thread: threading.Thread, exc_type: type[BaseException]) -> None:
    if thread.ident is None:
        return
    ctypes.pythonapi.PyThreadState_SetAsyncExc(
        ctypes.c_long(thread.ident), ctypes.py_object(exc_type)
    )


class _Worker:
    """One worker subprocess plus its buffered stdout reader."""

    def __init__(self, argv: list[str]) -> None:
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=None,
            bufsize=0,
        )
        self._pending = b""

    def request(self, line: str, deadline: float) -> str | None:
        assert self.proc.stdin is not None
        self.proc.stdin.write(line.encode("utf-8") + b"\n")
        self.proc.stdin.flush()
        return self._read_line(deadline)

    def _read_line(self, deadline: float) -> str | None:
        assert self.proc.stdout is not None
        fd = self.proc.stdout.fileno()
        while b"\n" not in self._pending:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.5))
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                return None  # worker closed its stdout
            self._pending += chunk
        line, _, self._pending = self._pending.partition(b"\n")
        return line.decode("utf-8")

    def close(self) -> None:
        with contextlib.suppress(OSError, ValueError):
            if self.proc.stdin:
                self.proc.stdin.close()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.kill()

    def kill(self) -> None:
        with contextlib.suppress(OSError):
            self.proc.kill()
        with contextlib.suppress(Exception):
            self.proc.wait(timeout=5)


class WorkerPoolExecutor:
    """Executes jobs on persistent line-protocol workers, one job per worker
    at a time.  A worker that stops answering is killed, reported as a
    runner_failure, and replaced."""

    # allowance past the job timeout for spawn and reply overhead
    GRACE_S = 10.0

    def __init__(
        self,
        runner_cmd: str,
        pool_size: int = 1,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES,
    ) -> None:
        if pool_size < 1:
            raise ValueError("pool_size must be at least 1")
        self.argv = shlex.split(runner_cmd)
        if not self.argv:
            raise ValueError("runner command must be non-empty")
        self.timeout_ms = timeout_ms
        self.max_output_bytes = max_output_bytes
        self._idle: queue.Queue[_Worker] = queue.Queue()
        self._all: list[_Worker] = []
        self._lock = threading.Lock()
        for _ in range(pool_size):
            self._add_worker()

    def _add_worker(self) -> None:
        worker = _Worker(self.argv)
        with self._lock:
            self._all.append(worker)
        self._idle.put(worker)

    def _retire(self, worker: _Worker) -> None:
        worker.kill()
        with self._lock:
            if worker in self._all:
                self._all.remove(worker)
        self._add_worker()

    def run(self, code: str, timeout_ms: int | None = None) -> ExecutionResult:
        effective_timeout = timeout_ms if timeout_ms is not None else self.timeout_ms
        job = ExecJob(
            id=uuid.uuid4().hex,
            code=code,
            timeout_ms=effective_timeout,
            max_output_bytes=self.max_output_bytes,
        )
        started = time.monotonic()
        deadline = started + effective_timeout / 1000.0 + self.GRACE_S
        worker = self._idle.get()
        broken = False
        try:
            try:
                raw = worker.request(job_to_line(job), deadline)
            except OSError as exc:
                broken = True
                return self._failure(started, f"could not reach worker: {exc}")
            if raw is None:
                broken = True
                return self._failure(started, "worker produced no reply before the deadline")
            try:
                reply = reply_from_line(raw)
            except ProtocolViolation as exc:
                broken = True
                return self._failure(started, f"invalid worker reply: {exc}")
            if reply.id != job.id:
                broken = True
                return self._failure(
                    started, f"worker echoed id {reply.id!r} for job {job.id!r}"
                )
            return ExecutionResult(
                stdout=reply.stdout,
                stderr=reply.stderr,
                status=reply.status,
                duration_ms=reply.duration_ms,
            )
        finally:
            if broken:
                self._retire(worker)
            else:
                self._idle.put(worker)

    @staticmethod
    def _failure(started: float, detail: str) -> ExecutionResult:
        return ExecutionResult(
            stdout="",
            stderr=detail,
            status="runner_failure",
            duration_ms=int((time.monotonic() - started) * 1000),
        )

    def close(self) -> None:
        with self._lock:
            workers = list(self._all)
            self._all.clear()
        for worker in workers:
            worker.close()

    def __enter__(self) -> "WorkerPoolExecutor":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()
