"""Chat-completion backends: an HTTP client and a deterministic scripted mock.

The HTTP side speaks the common chat-completions contract: POST a message
array plus sampling parameters, read the first choice's message content.
Connection details default to the ``TIR_BACKEND_URL``, ``TIR_BACKEND_KEY``
and ``TIR_MODEL`` environment variables.

The mock replays a script of (match, reply) rules so whole runs are
reproducible offline.  Script format, one record per rule::

    ON <substring> REPLY <<<
    reply text (any number of lines)
    >>>
    ON #<n> REPLY <<<          # matches the n-th request overall
    ...
    >>>
    ON <substring> ERROR <message>   # raises a protocol error

Substring rules match against the content of the last user or tool message,
which is what the agent loop varies turn by turn.
"""
from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .chat import ChatMessage


class BackendError(Exception):
    """Base class for chat backend failures."""


class TransportError(BackendError):
    """The backend could not be reached after the configured retries."""


class ProtocolError(BackendError):
    """The backend answered, but outside the chat-completions contract."""


class MockScriptError(BackendError):
    """A mock script could not be parsed or did not cover a request."""


@dataclass(frozen=True)
class GenerationParams:
    model_name: str = ""
    temperature: float = 0.0
    max_tokens: int = 1024
    seed: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


def _check_messages(messages: Sequence[ChatMessage]) -> None:
    if not messages:
        raise ValueError("message list must be non-empty")
    if messages[-1].role not in ("user", "tool"):
        raise ValueError("last message must have role 'user' or 'tool'")


class Backend(Protocol):
    def chat(self, messages: Sequence[ChatMessage], params: GenerationParams) -> str: ...

    def check(self) -> None: ...


class HttpBackend:
    """Client for a chat-completions endpoint with retry and backoff."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        request_timeout_s: float = 60.0,
        retries: int = 2,
        backoff_s: float = 0.5,
        max_inflight: int = 8,
        session: requests.Session | None = None,
    ) -> None:
        self.base_url = (base_url or os.environ.get("TIR_BACKEND_URL", "")).rstrip("/")
        if not self.base_url:
            raise ValueError("backend URL required (set TIR_BACKEND_URL or pass base_url)")
        self.api_key = api_key if api_key is not None else os.environ.get("TIR_BACKEND_KEY", "")
        self.model = model if model is not None else os.environ.get("TIR_MODEL", "")
        self.request_timeout_s = request_timeout_s
        self.retries = retries
        self.backoff_s = backoff_s
        self._gate = threading.BoundedSemaphore(max_inflight)
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def check(self) -> None:
        """Probe reachability; raises TransportError when the host is down."""
        try:
            self._session.get(
                self.base_url + "/models",
                headers=self._headers(),
                timeout=min(5.0, self.request_timeout_s),
            )
        except requests.RequestException as exc:
            raise TransportError(f"backend unreachable at {self.base_url}: {exc}") from exc

    def chat(self, messages: Sequence[ChatMessage], params: GenerationParams) -> str:
        _check_messages(messages)
        payload: dict[str, object] = {
            "model": params.model_name or self.model,
            "messages": [m.to_record() for m in messages],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        # Hard wall-clock bound: one timeout budget per attempt, sleeps included.
        deadline = time.monotonic() + self.request_timeout_s * (1 + self.retries)
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                with self._gate:
                    response = self._session.post(
                        self.base_url + "/chat/completions",
                        json=payload,
                        headers=self._headers(),
                        timeout=min(self.request_timeout_s, remaining),
                    )
            except requests.RequestException as exc:
                last_exc = exc
                if attempt < self.retries:
                    pause = min(
                        self.backoff_s * (2**attempt),
                        max(0.0, deadline - time.monotonic()),
                    )
                    if pause > 0:
                        time.sleep(pause)
                continue
            if not 200 <= response.status_code < 300:
                raise ProtocolError(
                    f"backend returned HTTP {response.status_code}: {response.text[:500]}"
                )
            try:
                data = response.json()
                return data["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProtocolError(f"malformed completion payload: {exc}") from exc
        raise TransportError(
            f"request failed after {self.retries + 1} attempts: {last_exc}"
        )


@dataclass(frozen=True)
class MockRule:
    match: str
    position: int | None
    reply: str | None
    error: str | None
    line: int


@dataclass(frozen=True)
class MockScript:
    rules: tuple[MockRule, ...]


def load_mock(path: str | Path) -> MockScript:
    """Parse a mock script file; parse errors name the offending line."""
    rules: list[MockRule] = []
    lines = Path(path).read_text("utf-8").split("\n")
    i = 0
    while i < len(lines):
        line = lines[i]
        lineno = i + 1
        i += 1
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if not stripped.startswith("ON "):
            raise MockScriptError(f"{path}:{lineno}: expected 'ON ...', got {stripped!r}")
        if stripped.endswith(" REPLY <<<"):
            match = stripped[3 : -len(" REPLY <<<")].strip()
            body: list[str] = []
            terminated = False
            while i < len(lines):
                if lines[i].strip() == ">>>":
                    terminated = True
                    i += 1
                    break
                body.append(lines[i])
                i += 1
            if not terminated:
                raise MockScriptError(f"{path}:{lineno}: reply block never closed with '>>>'")
            reply, error = "\n".join(body), None
        elif " ERROR " in stripped:
            match, _, error_text = stripped[3:].partition(" ERROR ")
            match = match.strip()
            reply, error = None, error_text.strip()
        else:
            raise MockScriptError(
                f"{path}:{lineno}: rule must end with ' REPLY <<<' or contain ' ERROR '"
            )
        if not match:
            raise MockScriptError(f"{path}:{lineno}: empty match expression")
        position: int | None = None
        if match.startswith("#"):
            if not match[1:].isdigit() or int(match[1:]) < 1:
                raise MockScriptError(
                    f"{path}:{lineno}: position rule must be #<positive integer>"
                )
            position = int(match[1:])
        rules.append(MockRule(match=match, position=position, reply=reply, error=error, line=lineno))
    return MockScript(rules=tuple(rules))


class MockBackend:
    """Deterministic scripted backend; every request must match exactly one rule."""

    def __init__(self, script: MockScript) -> None:
        self._script = script
        self._lock = threading.Lock()
        self._requests_seen = 0

    def check(self) -> None:
        return None

    def chat(self, messages: Sequence[ChatMessage], params: GenerationParams) -> str:
        _check_messages(messages)
        with self._lock:
            self._requests_seen += 1
            position = self._requests_seen
        target = next(
            m.content for m in reversed(messages) if m.role in ("user", "tool")
        )
        matched = [
            rule
            for rule in self._script.rules
            if (rule.position == position)
            or (rule.position is None and rule.match in target)
        ]
        if not matched:
            raise MockScriptError(
                f"no mock rule matches request #{position} (last message starts {target[:120]!r})"
            )
        if len(matched) > 1:
            raise MockScriptError(
                f"request #{position} matches several mock rules: "
                f"lines {matched[0].line} and {matched[1].line}"
            )
        rule = matched[0]
        if rule.error is not None:
            raise ProtocolError(rule.error)
        assert rule.reply is not None
        return rule.reply
