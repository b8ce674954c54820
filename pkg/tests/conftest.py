import sys
from pathlib import Path

import pytest

from tirsolve.corpus import Category, Corpus, Problem

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def make_problem(
    problem_id: str,
    statement_en: str | None = "a problem statement",
    statement_bn: str = "",
    answer: int | None = None,
    category: Category | None = None,
    keywords: tuple[str, ...] = (),
    solution_tir: str | None = None,
) -> Problem:
    return Problem(
        id=problem_id,
        statement_bn=statement_bn,
        statement_en=statement_en,
        answer=answer,
        category=category,
        keywords=keywords,
        solution_tir=solution_tir,
    )


def make_corpus(*problems: Problem) -> Corpus:
    return Corpus(problems=tuple(problems), name="test")
