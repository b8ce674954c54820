"""One reasoning agent: chat, run the produced code, feed results back.

Depth is the maximum number of assistant turns; each turn may execute at most
one code job, so depth also bounds the number of executions.  An agent stops
as soon as a boxed answer is found, preferring answers printed by executed
code over answers stated in prose.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .backend import Backend, GenerationParams, ProtocolError, TransportError
from .chat import ChatMessage
from .corpus import Problem, validate_answer
from .executors import ExecutionResult, Executor

if TYPE_CHECKING:
    from .harness import RunConfig

STDERR_FEEDBACK_LIMIT = 2000
STDOUT_FEEDBACK_LIMIT = 4000

STATUSES = ("answered", "depth_exhausted", "backend_error", "aborted")

NO_PROGRESS_FEEDBACK = (
    "no code block or boxed answer found; continue solving and give the final "
    "integer answer within \\boxed{}"
)


@dataclass
class AgentTrace:
    agent_id: int
    messages: list[ChatMessage] = field(default_factory=list)
    executions: list[ExecutionResult] = field(default_factory=list)
    final_answer: int | None = None
    status: str = "aborted"
    turns_used: int = 0

    def to_record(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "status": self.status,
            "final_answer": self.final_answer,
            "turns_used": self.turns_used,
            "messages": [m.to_record() for m in self.messages],
            "executions": [e.to_record() for e in self.executions],
        }

    @classmethod
    def from_record(cls, record: dict) -> "AgentTrace":
        return cls(
            agent_id=int(record["agent_id"]),
            messages=[ChatMessage.from_record(m) for m in record["messages"]],
            executions=[ExecutionResult.from_record(e) for e in record["executions"]],
            final_answer=record["final_answer"],
            status=str(record["status"]),
            turns_used=int(record["turns_used"]),
        )


def extract_code_blocks(text: str) -> list[str]:
    """Contents of all fenced code blocks, in order.

    A fence is ``\\`\\`\\``` with an optional language tag running to the end
    of its line.  An unterminated final fence yields the remaining text as one
    block.  Whitespace-only blocks are dropped.
    """
    blocks: list[str] = []
    position = 0
    while True:
        opening = text.find("```", position)
        if opening < 0:
            break
        tag_end = text.find("\n", opening + 3)
        if tag_end < 0:
            break  # fence opened at end of text: nothing follows
        body_start = tag_end + 1
        closing = text.find("```", body_start)
        if closing < 0:
            blocks.append(text[body_start:])
            break
        blocks.append(text[body_start:closing])
        position = closing + 3
    return [block for block in blocks if block.strip()]


def extract_boxed_answer(text: str) -> int | None:
    """Integer inside the last ``\\boxed{...}``, None when absent or non-integer.

    The content may use Bangla numerals and may contain whitespace or comma
    separators; anything else makes the extraction fail.
    """
    content: str | None = None
    position = 0
    while True:
        start = text.find("\\boxed{", position)
        if start < 0:
            break
        cursor = start + len("\\boxed{")
        depth = 1
        while cursor < len(text) and depth:
            if text[cursor] == "{":
                depth += 1
            elif text[cursor] == "}":
                depth -= 1
            cursor += 1
        if depth:
            break  # unbalanced braces: ignore this occurrence
        content = text[start + len("\\boxed{") : cursor - 1]
        position = cursor
    if content is None:
        return None
    cleaned = "".join(ch for ch in content if not ch.isspace() and ch != ",")
    return validate_answer(cleaned)


def _clip(text: str, limit: int) -> str:
    if len(text) <= limit:
        return text
    return text[:limit] + "…[truncated]"


def _ok_feedback(result: ExecutionResult) -> str:
    parts = [
        f"execution status: ok ({result.duration_ms} ms)",
        "stdout:",
        _clip(result.stdout, STDOUT_FEEDBACK_LIMIT),
    ]
    if result.stderr.strip():
        parts += ["stderr:", _clip(result.stderr, STDERR_FEEDBACK_LIMIT)]
    return "\n".join(parts)


def _failure_feedback(result: ExecutionResult) -> str:
    summary = _clip(
        result.stderr.strip() or result.stdout.strip() or result.status,
        STDERR_FEEDBACK_LIMIT,
    )
    return f"execution failed ({result.status}): {summary}; please fix and retry"


def run_agent(
    problem: Problem,
    rendered: list[ChatMessage],
    config: "RunConfig",
    backend: Backend,
    executor: Executor,
    agent_id: int = 0,
) -> AgentTrace:
    """Run the generate-execute loop for one agent until an answer or depth D.

    Backend transport and protocol errors end the agent with status
    ``backend_error`` and keep the partial trace.  When a seed is configured,
    each agent derives its own by adding its agent_id.
    """
    params = GenerationParams(
        model_name=config.model_name,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        seed=None if config.seed is None else config.seed + agent_id,
    )
    depth = config.depth_d
    timeout_ms = config.timeout_ms
    execute_all = config.execute_all_blocks

    messages = list(rendered)
    executions: list[ExecutionResult] = []
    final_answer: int | None = None
    status = "depth_exhausted"
    turns = 0

    for _ in range(depth):
        try:
            reply = backend.chat(messages, params)
        except (TransportError, ProtocolError):
            status = "backend_error"
            break
        turns += 1
        messages.append(ChatMessage("assistant", reply))
        blocks = extract_code_blocks(reply)
        if blocks:
            code = "\n\n".join(blocks) if execute_all else blocks[-1]
            result = executor.run(code, timeout_ms)
            executions.append(result)
            if result.status == "ok":
                messages.append(ChatMessage("tool", _ok_feedback(result)))
                answer = extract_boxed_answer(result.stdout)
                if answer is None:
                    answer = extract_boxed_answer(reply)
                if answer is not None:
                    final_answer = answer
                    status = "answered"
                    break
            else:
                messages.append(ChatMessage("tool", _failure_feedback(result)))
        else:
            answer = extract_boxed_answer(reply)
            if answer is not None:
                final_answer = answer
                status = "answered"
                break
            messages.append(ChatMessage("tool", NO_PROGRESS_FEEDBACK))

    return AgentTrace(
        agent_id=agent_id,
        messages=messages,
        executions=executions,
        final_answer=final_answer,
        status=status,
        turns_used=turns,
    )


def recover_answer(trace: AgentTrace) -> int | None:
    """Re-derive the final answer from a recorded trace.

    Applies the same precedence the loop used on its last turn: stdout of the
    last execution when it succeeded, otherwise the last assistant message.
    """
    assistant = [m for m in trace.messages if m.role == "assistant"]
    if not assistant:
        return None
    last_reply = assistant[-1]
    if extract_code_blocks(last_reply.content) and trace.executions:
        last_execution = trace.executions[-1]
        if last_execution.status == "ok":
            answer = extract_boxed_answer(last_execution.stdout)
            if answer is not None:
                return answer
    return extract_boxed_answer(last_reply.content)
