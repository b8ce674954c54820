"""Keyword search over solved problems, used to pick few-shot exemplars.

Problems are matched by overlapping keywords.  A problem's keywords are its
manually curated list when one exists, otherwise tokens extracted from the
statement after Bangla and English stopword removal.  Candidates are ranked
by the summed inverse document frequency of the shared keywords; a plain
Jaccard score is available as an alternative ranking method.
"""
from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable

from .corpus import Corpus, Problem

MIN_TOKEN_LENGTH = 3

# \w alone drops combining marks, which would shred Bangla words into single
# consonants; the explicit Bangla block keeps vowel signs and conjuncts.
_TOKEN_RE = re.compile(r"[\wঀ-৿]+", re.UNICODE)


def normalize_keyword(word: str) -> str:
    return unicodedata.normalize("NFC", word).strip().lower()


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    words: set[str] = set()
    data = resources.files("tirsolve").joinpath("data")
    for name in ("stopwords_en.txt", "stopwords_bn.txt"):
        for line in data.joinpath(name).read_text("utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(normalize_keyword(line))
    return frozenset(words)


def extract_keywords(text: str, manual: Iterable[str] = ()) -> frozenset[str]:
    """Keyword set for a problem.

    A non-empty ``manual`` list wins outright and is only normalized
    (NFC, trimmed, lowercased).  Otherwise keywords are the statement tokens
    of length >= 3 that are not stopwords.
    """
    manual_set = {normalize_keyword(w) for w in manual}
    manual_set.discard("")
    if manual_set:
        return frozenset(manual_set)
    stop = stopwords()
    tokens = set()
    for token in _TOKEN_RE.findall(text or ""):
        token = normalize_keyword(token)
        if len(token) >= MIN_TOKEN_LENGTH and token not in stop:
            tokens.add(token)
    return frozenset(tokens)


def problem_keywords(problem: Problem) -> frozenset[str]:
    text = " ".join(s for s in (problem.statement_bn, problem.statement_en) if s)
    return extract_keywords(text, problem.keywords)


@dataclass
class KeywordIndex:
    postings: dict[str, set[str]]
    doc_keywords: dict[str, frozenset[str]]
    doc_count: int


def build_index(corpus: Corpus) -> KeywordIndex:
    postings: dict[str, set[str]] = {}
    doc_keywords: dict[str, frozenset[str]] = {}
    for problem in corpus:
        keywords = problem_keywords(problem)
        doc_keywords[problem.id] = keywords
        for word in keywords:
            postings.setdefault(word, set()).add(problem.id)
    return KeywordIndex(postings=postings, doc_keywords=doc_keywords, doc_count=len(corpus))


def idf(index: KeywordIndex, word: str) -> float:
    df = len(index.postings.get(word, ()))
    if df == 0:
        return 0.0
    return math.log(1.0 + index.doc_count / df)


def similar(
    index: KeywordIndex,
    query: Problem,
    k: int,
    method: str = "idf",
) -> list[tuple[str, float]]:
    """Up to ``k`` indexed problems most similar to ``query``.

    The query problem itself is never returned, candidates sharing no keyword
    are omitted, and ties are broken by ascending problem id.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if method not in ("idf", "jaccard"):
        raise ValueError(f"unknown similarity method {method!r}")
    query_keywords = problem_keywords(query)
    candidates: set[str] = set()
    for word in query_keywords:
        candidates.update(index.postings.get(word, ()))
    candidates.discard(query.id)
    scored: list[tuple[str, float]] = []
    for candidate in candidates:
        shared = sorted(query_keywords & index.doc_keywords[candidate])
        if not shared:
            continue
        if method == "idf":
            score = math.fsum(idf(index, word) for word in shared)
        else:
            union = query_keywords | index.doc_keywords[candidate]
            score = len(shared) / len(union)
        if score > 0.0:
            scored.append((candidate, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


@dataclass(frozen=True)
class Exemplar:
    problem: Problem
    solution_text: str

    def __post_init__(self) -> None:
        if not self.solution_text.strip():
            raise ValueError(f"exemplar {self.problem.id}: solution text is empty")


def to_exemplars(
    ranked_ids: Iterable[str],
    corpus: Corpus,
    solutions: dict[str, str],
) -> list[Exemplar]:
    """Build exemplars in rank order, skipping ids that lack a solution."""
    exemplars: list[Exemplar] = []
    for problem_id in ranked_ids:
        solution = solutions.get(problem_id)
        problem = corpus.get(problem_id)
        if problem is None or not solution or not solution.strip():
            continue
        exemplars.append(Exemplar(problem=problem, solution_text=solution))
    return exemplars
