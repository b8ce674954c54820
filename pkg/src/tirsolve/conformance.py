"""Protocol conformance checks for execution workers.

Runs a fixed battery of jobs against a worker command and reports one
pass/fail entry per case: reply echo, clean runs, failing runs, timeout
enforcement, output truncation, cross-job isolation, and clean shutdown on
stdin EOF.  Any executable speaking the line protocol can be checked.
"""
from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass

from .executors import WorkerPoolExecutor
from .runner_protocol import TRUNCATION_MARKER

TIMEOUT_CASE_MS = 500
TIMEOUT_TOLERANCE_MS = 100
TRUNCATION_CAP_BYTES = 4096
BIG_PRINT_BYTES = 10 * 1024 * 1024


@dataclass(frozen=True)
class ConformanceCase:
    name: str
    passed: bool
    detail: str


def run_conformance(runner_cmd: str) -> list[ConformanceCase]:
    cases: list[ConformanceCase] = []

    def check(name: str, condition: bool, detail: str) -> None:
        cases.append(ConformanceCase(name=name, passed=condition, detail=detail))

    pool = WorkerPoolExecutor(runner_cmd, pool_size=1)
    try:
        result = pool.run('print("protocol says hi")', timeout_ms=10_000)
        check(
            "ok_run",
            result.status == "ok" and "protocol says hi" in result.stdout,
            f"status={result.status} stdout={result.stdout[:60]!r}",
        )

        result = pool.run('raise RuntimeError("conformance-boom")', timeout_ms=10_000)
        check(
            "nonzero_exit",
            result.status == "nonzero_exit" and "conformance-boom" in result.stderr,
            f"status={result.status} stderr tail={result.stderr[-120:]!r}",
        )

        result = pool.run("while True: pass", timeout_ms=TIMEOUT_CASE_MS)
        within = (
            TIMEOUT_CASE_MS
            <= result.duration_ms
            <= TIMEOUT_CASE_MS + TIMEOUT_TOLERANCE_MS
        )
        check(
            "timeout",
            result.status == "timeout" and within,
            f"status={result.status} duration_ms={result.duration_ms}",
        )

        big_print = f'print("x" * {BIG_PRINT_BYTES})'
        with_cap = WorkerPoolExecutor(
            runner_cmd, pool_size=1, max_output_bytes=TRUNCATION_CAP_BYTES
        )
        try:
            result = with_cap.run(big_print, timeout_ms=60_000)
            size = len(result.stdout.encode("utf-8"))
            check(
                "truncation",
                result.status == "ok"
                and size <= TRUNCATION_CAP_BYTES
                and result.stdout.endswith(TRUNCATION_MARKER),
                f"status={result.status} stdout_bytes={size}",
            )
        finally:
            with_cap.close()

        # consecutive jobs on the same worker must not share interpreter state
        first = pool.run("conformance_state_probe = 41", timeout_ms=10_000)
        second = pool.run("print(conformance_state_probe)", timeout_ms=10_000)
        check(
            "isolation",
            first.status == "ok"
            and second.status == "nonzero_exit"
            and "NameError" in second.stderr,
            f"first={first.status} second={second.status}",
        )

        result = pool.run('print("echo-checked")', timeout_ms=10_000)
        check(
            "echo",
            result.status == "ok" and "echo-checked" in result.stdout,
            f"status={result.status}",
        )
    finally:
        pool.close()

    cases.append(_check_eof_exit(runner_cmd))
    return cases


def _check_eof_exit(runner_cmd: str) -> ConformanceCase:
    proc = subprocess.Popen(
        shlex.split(runner_cmd),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
    )
    assert proc.stdin is not None
    proc.stdin.close()
    try:
        code = proc.wait(timeout=5)
        return ConformanceCase(
            name="eof_exit",
            passed=code == 0,
            detail=f"exit code {code}",
        )
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.wait()
        return ConformanceCase(
            name="eof_exit", passed=False, detail="worker did not exit within 5 s of EOF"
        )


def format_cases(cases: list[ConformanceCase]) -> str:
    lines = []
    for case in cases:
        flag = "PASS" if case.passed else "FAIL"
        lines.append(f"[{flag}] {case.name}: {case.detail}")
    return "\n".join(lines)
