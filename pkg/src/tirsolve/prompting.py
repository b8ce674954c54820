"""Prompt rendering: templates, category instructions, few-shot assembly.

Prompt wording lives in ``data/templates.txt`` (sections delimited by
``--- <template_id> ---`` headers) so it can be edited without touching code.
Rendering is pure: the same problem, exemplars and config always produce the
same message list.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .chat import ChatMessage
from .corpus import Category, Problem
from .retrieval import Exemplar


class PromptError(ValueError):
    """Prompt cannot be rendered for the requested configuration."""


LANGUAGES = ("bn", "en")
INSTRUCTION_MODES = ("none", "tailored")
SELECTABLE_TEMPLATES = ("base", "advanced", "step_by_step")
MAX_FEW_SHOT = 5

# Closing line of the base template; appended to any template that does not
# already spell out the boxed-answer format.
ANSWER_FORMAT_LINE = "Put your final integer answer within \\boxed{}."


@dataclass(frozen=True)
class PromptConfig:
    problem_language: str = "bn"
    reasoning_language: str = "en"
    translate_first: bool = False
    instruction_mode: str = "none"
    polite: bool = False
    few_shot_count: int = 2
    template_id: str = "base"

    def __post_init__(self) -> None:
        if self.problem_language not in LANGUAGES:
            raise PromptError(f"problem_language must be one of {LANGUAGES}")
        if self.reasoning_language not in LANGUAGES:
            raise PromptError(f"reasoning_language must be one of {LANGUAGES}")
        if self.translate_first and self.problem_language != "bn":
            raise PromptError("translate_first requires a Bangla problem statement")
        if self.instruction_mode not in INSTRUCTION_MODES:
            raise PromptError(f"instruction_mode must be one of {INSTRUCTION_MODES}")
        if not 0 <= self.few_shot_count <= MAX_FEW_SHOT:
            raise PromptError(f"few_shot_count must be between 0 and {MAX_FEW_SHOT}")
        if self.template_id not in SELECTABLE_TEMPLATES:
            raise PromptError(f"template_id must be one of {SELECTABLE_TEMPLATES}")


def parse_templates(text: str) -> dict[str, str]:
    """Parse ``--- id ---`` delimited template sections."""
    templates: dict[str, str] = {}
    current: str | None = None
    lines: list[str] = []

    def flush() -> None:
        if current is not None:
            templates[current] = "\n".join(lines)

    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.startswith("--- ") and line.endswith(" ---") and len(line) > 8:
            flush()
            current = line[4:-4].strip()
            if not current:
                raise PromptError(f"templates line {lineno}: empty template id")
            if current in templates:
                raise PromptError(f"templates line {lineno}: duplicate id {current!r}")
            lines = []
        elif current is None:
            if line.strip():
                raise PromptError(f"templates line {lineno}: text before first header")
        else:
            lines.append(line)
    # a trailing file newline adds one empty element after the final section
    if lines and lines[-1] == "":
        lines.pop()
    flush()
    return templates


def format_templates(templates: Mapping[str, str]) -> str:
    parts = [f"--- {name} ---\n{body}\n" for name, body in templates.items()]
    return "".join(parts)


@lru_cache(maxsize=4)
def _shipped_templates() -> dict[str, str]:
    text = resources.files("tirsolve").joinpath("data", "templates.txt").read_text("utf-8")
    return parse_templates(text)


def load_templates(path: str | Path | None = None) -> dict[str, str]:
    """Templates from ``path``, or the shipped defaults when path is None."""
    if path is None:
        return dict(_shipped_templates())
    return parse_templates(Path(path).read_text("utf-8"))


_CATEGORY_TEMPLATE = {
    Category.NUMBER_THEORY: "tailored_number_theory",
    Category.GEOMETRY: "tailored_geometry",
    Category.COMBINATORICS: "tailored_combinatorics",
    Category.FUNCTIONAL_EQUATION: "tailored_combinatorics",
}


def tailored_instruction(
    category: Category | None,
    templates: Mapping[str, str] | None = None,
) -> str | None:
    """Category-specific system instruction, None when the category has none."""
    name = _CATEGORY_TEMPLATE.get(category) if category is not None else None
    if name is None:
        return None
    templates = templates if templates is not None else _shipped_templates()
    return templates[name]


def _politeify(text: str) -> str:
    # Idempotent: instructions that already open with "Please" stay unchanged.
    if text.startswith("Please"):
        return text
    return "Please " + text


def render_prompt(
    problem: Problem,
    exemplars: Sequence[Exemplar],
    config: PromptConfig,
    templates: Mapping[str, str] | None = None,
) -> list[ChatMessage]:
    """Build the full message list for one problem.

    Layout: an optional system message carrying the tailored category
    instruction, one user/assistant pair per exemplar, then the final user
    message holding the selected template with the statement substituted.
    The final user message always contains the ``\\boxed{`` format instruction.
    """
    templates = templates if templates is not None else _shipped_templates()
    statement_language = config.problem_language
    statement = problem.statement(statement_language)
    if statement is None:
        raise PromptError(
            f"problem {problem.id} has no {statement_language!r} statement"
        )

    messages: list[ChatMessage] = []
    if config.instruction_mode == "tailored":
        instruction = tailored_instruction(problem.category, templates)
        if instruction:
            if config.polite:
                instruction = _politeify(instruction)
            messages.append(ChatMessage("system", instruction))

    for exemplar in exemplars[: config.few_shot_count]:
        exemplar_statement = (
            exemplar.problem.statement(statement_language)
            or exemplar.problem.statement_bn
            or exemplar.problem.statement_en
            or ""
        )
        messages.append(ChatMessage("user", exemplar_statement))
        messages.append(ChatMessage("assistant", exemplar.solution_text))

    template_id = config.template_id
    if (
        template_id == "base"
        and config.problem_language == "bn"
        and config.reasoning_language == "en"
        and not config.translate_first
    ):
        # Bangla problem reasoned about in English: the advanced template is
        # the one written for exactly that mode.
        template_id = "advanced"
    body = templates[template_id]
    if "{problem}" not in body:
        body = body + "\n\n{problem}"
    body = body.replace("{problem}", statement)
    if "\\boxed{" not in body:
        body = body + "\n\n" + ANSWER_FORMAT_LINE
    if config.translate_first:
        body = templates["translation"] + "\n\n" + body
    messages.append(ChatMessage("user", body))
    return messages
