"""Self-consistency: majority vote over the final answers of many agents."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .agent import AgentTrace


@dataclass(frozen=True)
class ConsensusResult:
    problem_id: str
    tally: dict[int, int] = field(default_factory=dict)
    elected: int | None = None
    valid_votes: int = 0
    total_agents: int = 0


def vote(traces: Sequence[AgentTrace], problem_id: str = "") -> ConsensusResult:
    """Elect the most common final answer.

    Only agents that finished with status ``answered`` vote; the rest abstain.
    Ties are broken toward the answer whose first vote appears earliest in
    trace order.  With no valid votes the election is empty.
    """
    tally: dict[int, int] = {}
    first_vote: dict[int, int] = {}
    for index, trace in enumerate(traces):
        if trace.status != "answered" or trace.final_answer is None:
            continue
        answer = trace.final_answer
        tally[answer] = tally.get(answer, 0) + 1
        first_vote.setdefault(answer, index)
    elected: int | None = None
    if tally:
        elected = min(tally, key=lambda answer: (-tally[answer], first_vote[answer]))
    return ConsensusResult(
        problem_id=problem_id,
        tally=tally,
        elected=elected,
        valid_votes=sum(tally.values()),
        total_agents=len(traces),
    )
