"""Problem corpus: loading, saving, answer validation, augmentation prompts.

A corpus file is UTF-8 text with one JSON object per line.  Known fields are
``id``, ``statement_bn``, ``statement_en``, ``answer``, ``category``,
``keywords`` and ``solution_tir``; unknown fields are kept verbatim so that a
load/save round trip is byte-identical for files this module wrote.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .chat import ChatMessage


class CorpusError(ValueError):
    """Malformed corpus file or invalid problem record."""


class Category(str, Enum):
    NUMBER_THEORY = "NumberTheory"
    GEOMETRY = "Geometry"
    COMBINATORICS = "Combinatorics"
    FUNCTIONAL_EQUATION = "FunctionalEquation"
    ALGEBRA = "Algebra"
    OTHER = "Other"


# Bangla digits occupy the contiguous block U+09E6..U+09EF.
_BANGLA_DIGITS = {0x09E6 + i: ord("0") + i for i in range(10)}

_INT_RE = re.compile(r"[0-9]+")


def normalize_numerals(text: str) -> str:
    """Rewrite Bangla digits as the corresponding ASCII digits."""
    return text.translate(_BANGLA_DIGITS)


def validate_answer(text: str) -> int | None:
    """Parse ``text`` as a non-negative base-10 integer.

    Bangla numerals are accepted and surrounding whitespace is ignored.
    Anything else (negative, fractional, symbolic, empty) yields ``None``.
    """
    normalized = normalize_numerals(text).strip()
    if not _INT_RE.fullmatch(normalized):
        return None
    return int(normalized)


_KNOWN_FIELDS = (
    "id",
    "statement_bn",
    "statement_en",
    "answer",
    "category",
    "keywords",
    "solution_tir",
)


@dataclass(frozen=True)
class Problem:
    id: str
    statement_bn: str = ""
    statement_en: str | None = None
    answer: int | None = None
    category: Category | None = None
    keywords: tuple[str, ...] = ()
    solution_tir: str | None = None
    extra: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id or not isinstance(self.id, str):
            raise CorpusError("problem id must be a non-empty string")
        if self.answer is not None:
            if isinstance(self.answer, bool) or not isinstance(self.answer, int):
                raise CorpusError(f"problem {self.id}: answer must be an integer")
            if self.answer < 0:
                raise CorpusError(f"problem {self.id}: answer must be non-negative")
        if not self.statement_bn and not self.statement_en:
            raise CorpusError(f"problem {self.id}: at least one statement is required")

    def statement(self, language: str) -> str | None:
        """Return the statement in ``language`` ("bn" or "en"), None if absent."""
        if language == "bn":
            return self.statement_bn or None
        if language == "en":
            return self.statement_en or None
        raise ValueError(f"unknown language {language!r}")

    def to_record(self) -> dict:
        record: dict[str, object] = {"id": self.id, "statement_bn": self.statement_bn}
        if self.statement_en is not None:
            record["statement_en"] = self.statement_en
        if self.answer is not None:
            record["answer"] = self.answer
        if self.category is not None:
            record["category"] = self.category.value
        if self.keywords:
            record["keywords"] = list(self.keywords)
        if self.solution_tir is not None:
            record["solution_tir"] = self.solution_tir
        record.update(self.extra)
        return record


def problem_from_record(record: Mapping[str, object], where: str = "record") -> Problem:
    if not isinstance(record, Mapping):
        raise CorpusError(f"{where}: expected an object")
    try:
        problem_id = record["id"]
    except KeyError:
        raise CorpusError(f"{where}: missing required field 'id'") from None
    if not isinstance(problem_id, str):
        raise CorpusError(f"{where}: field 'id' must be a string")

    def _opt_str(name: str) -> str | None:
        value = record.get(name)
        if value is None:
            return None
        if not isinstance(value, str):
            raise CorpusError(f"{where}: field {name!r} must be a string")
        return value

    answer = record.get("answer")
    if answer is not None and (isinstance(answer, bool) or not isinstance(answer, int)):
        raise CorpusError(f"{where}: field 'answer' must be an integer")

    category = None
    raw_category = record.get("category")
    if raw_category is not None:
        try:
            category = Category(raw_category)
        except ValueError:
            names = ", ".join(c.value for c in Category)
            raise CorpusError(
                f"{where}: unknown category {raw_category!r} (expected one of {names})"
            ) from None

    keywords: tuple[str, ...] = ()
    raw_keywords = record.get("keywords")
    if raw_keywords is not None:
        if not isinstance(raw_keywords, list) or any(
            not isinstance(k, str) for k in raw_keywords
        ):
            raise CorpusError(f"{where}: field 'keywords' must be a list of strings")
        keywords = tuple(raw_keywords)

    extra = {k: v for k, v in record.items() if k not in _KNOWN_FIELDS}
    try:
        return Problem(
            id=problem_id,
            statement_bn=_opt_str("statement_bn") or "",
            statement_en=_opt_str("statement_en"),
            answer=answer,
            category=category,
            keywords=keywords,
            solution_tir=_opt_str("solution_tir"),
            extra=extra,
        )
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class Corpus:
    problems: tuple[Problem, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for problem in self.problems:
            if problem.id in seen:
                raise CorpusError(f"duplicate problem id {problem.id!r}")
            seen.add(problem.id)

    def __len__(self) -> int:
        return len(self.problems)

    def __iter__(self) -> Iterator[Problem]:
        return iter(self.problems)

    def get(self, problem_id: str) -> Problem | None:
        for problem in self.problems:
            if problem.id == problem_id:
                return problem
        return None

    def ids(self) -> list[str]:
        return [problem.id for problem in self.problems]

    def solutions(self) -> dict[str, str]:
        """Map of problem id to its worked solution, for problems that have one."""
        return {
            p.id: p.solution_tir
            for p in self.problems
            if p.solution_tir is not None and p.solution_tir.strip()
        }

    def to_bytes(self) -> bytes:
        lines = [
            json.dumps(p.to_record(), ensure_ascii=False) + "\n" for p in self.problems
        ]
        return "".join(lines).encode("utf-8")

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def load_corpus(path: str | Path, name: str | None = None) -> Corpus:
    """Load a line-delimited corpus file.

    Raises :class:`CorpusError` naming the offending line for malformed
    records, and naming both lines for duplicate ids.
    """
    path = Path(path)
    problems: list[Problem] = []
    first_line: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{where}: malformed record: {exc.msg}") from None
            problem = problem_from_record(record, where=where)
            if problem.id in first_line:
                raise CorpusError(
                    f"{where}: duplicate id {problem.id!r} "
                    f"(first defined on line {first_line[problem.id]})"
                )
            first_line[problem.id] = lineno
            problems.append(problem)
    return Corpus(problems=tuple(problems), name=name if name is not None else path.stem)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write ``corpus`` in the canonical one-object-per-line form."""
    Path(path).write_bytes(corpus.to_bytes())


AUGMENTATION_TEMPLATE = (
    "Here is a math problem:\n"
    "\n"
    "{problem}\n"
    "\n"
    "Write {k} paraphrased or lightly varied versions of this problem. Every "
    "version must keep the original answer unchanged. Reply with a numbered "
    "list (1. through {k}.), one version per item, and nothing else."
)


def build_augmentation_prompt(problem: Problem, k: int) -> list[ChatMessage]:
    """Chat prompt asking a model for ``k`` answer-preserving problem variants."""
    if k < 1:
        raise ValueError("k must be at least 1")
    statement = problem.statement_bn or (problem.statement_en or "")
    if not statement.strip():
        raise CorpusError(f"problem {problem.id}: empty statement")
    content = AUGMENTATION_TEMPLATE.format(problem=statement, k=k)
    return [ChatMessage("user", content)]


_ITEM_RE = re.compile(r"^\s*\d+[.)]\s*(.*)$")


def parse_augmentation_reply(reply: str, k: int) -> list[str]:
    """Extract up to ``k`` numbered variants from a model reply.

    Accepts both "1." and "1)" numbering; a non-numbered line continues the
    current item.  Items the reply does not contain are never fabricated.
    """
    items: list[list[str]] = []
    for line in reply.splitlines():
        match = _ITEM_RE.match(line)
        if match:
            items.append([match.group(1)])
        elif items and line.strip():
            items[-1].append(line.strip())
    variants = ["\n".join(parts).strip() for parts in items]
    return [v for v in variants if v][:k]
