"""Chat message primitives shared by prompt building and backends."""
from __future__ import annotations

from dataclasses import dataclass

ROLES = ("system", "user", "assistant", "tool")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown chat role {self.role!r}")

    def to_record(self) -> dict:
        return {"role": self.role, "content": self.content}

    @classmethod
    def from_record(cls, record: dict) -> "ChatMessage":
        return cls(role=str(record["role"]), content=str(record["content"]))
