"""Experiment harness: run configuration, sweeps, scoring, persistence.

A run fans each problem out to ``samples_n`` agents (at most ``parallelism``
in flight across the whole run), votes over their final answers, and scores
the elected answer against gold by exact integer match.  Every agent trace is
persisted under ``traces/<run_id>/<problem_id>.log`` as soon as its problem
finishes, so an interrupted run resumes per problem.  The run id is a content
hash of the configuration plus the corpora, which keeps unrelated runs from
sharing trace directories.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .agent import AgentTrace, run_agent
from .backend import Backend
from .chat import ChatMessage
from .consensus import vote
from .corpus import Corpus, Problem, validate_answer
from .executors import Executor
from .prompting import PromptConfig, PromptError, render_prompt
from .retrieval import Exemplar, build_index, similar, to_exemplars

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid configuration, corpus precondition, or score input."""


class RunError(RuntimeError):
    """A run could not proceed."""


@dataclass(frozen=True)
class RunConfig:
    samples_n: int = 1
    depth_d: int = 3
    temperature: float = 0.0
    problem_language: str = "bn"
    reasoning_language: str = "en"
    translate_first: bool = False
    instruction_mode: str = "none"
    polite: bool = False
    few_shot_count: int = 2
    parallelism: int = 1
    timeout_ms: int = 10_000
    fallback_answer: int | None = None
    template_id: str = "base"
    similarity: str = "idf"
    execute_all_blocks: bool = False
    model_name: str = ""
    max_tokens: int = 1024
    seed: int | None = None
    max_output_bytes: int = 65_536
    request_timeout_s: float = 60.0
    retries: int = 2

    def __post_init__(self) -> None:
        if self.samples_n < 1:
            raise ConfigError("samples_n must be at least 1")
        if self.depth_d < 1:
            raise ConfigError("depth_d must be at least 1")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError("temperature must be within [0, 2]")
        if self.timeout_ms < 1:
            raise ConfigError("timeout_ms must be positive")
        if self.fallback_answer is not None and self.fallback_answer < 0:
            raise ConfigError("fallback_answer must be non-negative")
        if self.similarity not in ("idf", "jaccard"):
            raise ConfigError("similarity must be 'idf' or 'jaccard'")
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be positive")
        if self.retries < 0:
            raise ConfigError("retries must be non-negative")
        try:
            self.prompt_config()
        except PromptError as exc:
            raise ConfigError(str(exc)) from None

    def prompt_config(self) -> PromptConfig:
        return PromptConfig(
            problem_language=self.problem_language,
            reasoning_language=self.reasoning_language,
            translate_first=self.translate_first,
            instruction_mode=self.instruction_mode,
            polite=self.polite,
            few_shot_count=self.few_shot_count,
            template_id=self.template_id,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_BOOL_FIELDS = {"translate_first", "polite", "execute_all_blocks"}
_INT_FIELDS = {
    "samples_n",
    "depth_d",
    "few_shot_count",
    "parallelism",
    "timeout_ms",
    "max_tokens",
    "max_output_bytes",
    "retries",
}
_OPTIONAL_INT_FIELDS = {"fallback_answer", "seed"}
_FLOAT_FIELDS = {"temperature", "request_timeout_s"}


def _coerce(name: str, value: object) -> object:
    if name in _BOOL_FIELDS:
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("true", "yes", "1", "on"):
            return True
        if text in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {value!r}")
    if name in _OPTIONAL_INT_FIELDS:
        if value is None or str(value).strip().lower() in ("none", "null", ""):
            return None
        return _as_int(name, value)
    if name in _INT_FIELDS:
        return _as_int(name, value)
    if name in _FLOAT_FIELDS:
        try:
            return float(value)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    return str(value)


def _as_int(name: str, value: object) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    try:
        return int(str(value))
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected an integer, got {value!r}") from None


def config_from_mapping(mapping: Mapping[str, object]) -> RunConfig:
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(mapping) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {name: _coerce(name, value) for name, value in mapping.items()}
    return RunConfig(**kwargs)  # type: ignore[arg-type]


def load_config(path: str | Path) -> RunConfig:
    """Read a run config from a key-value (YAML) file."""
    try:
        data = yaml.safe_load(Path(path).read_text("utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not a valid config file: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping of keys to values")
    return config_from_mapping(data)


def apply_overrides(config: RunConfig, overrides: Sequence[str]) -> RunConfig:
    """Apply ``key=value`` strings on top of an existing config."""
    merged = config.to_dict()
    for item in overrides:
        key, separator, value = item.partition("=")
        if not separator:
            raise ConfigError(f"override {item!r} must look like key=value")
        merged[key.strip()] = value.strip()
    return config_from_mapping(merged)


@dataclass(frozen=True)
class ProblemOutcome:
    problem_id: str
    elected: int | None
    gold: int
    correct: bool

    def to_record(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "elected": self.elected,
            "gold": self.gold,
            "correct": self.correct,
        }


@dataclass
class ScoreReport:
    run_id: str
    config: RunConfig
    per_problem: list[ProblemOutcome]
    correct_count: int
    total: int
    accuracy: float
    wall_time_s: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config.to_dict(),
            "per_problem": [row.to_record() for row in self.per_problem],
            "correct_count": self.correct_count,
            "total": self.total,
            "accuracy": self.accuracy,
            "wall_time_s": self.wall_time_s,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"


def compute_run_id(config: RunConfig, corpus: Corpus, exemplars: Corpus) -> str:
    digest = hashlib.sha256()
    digest.update(json.dumps(config.to_dict(), sort_keys=True).encode("utf-8"))
    digest.update(corpus.digest().encode("ascii"))
    digest.update(exemplars.digest().encode("ascii"))
    return digest.hexdigest()[:12]


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _load_traces(path: Path, expected: int) -> list[AgentTrace] | None:
    """Traces persisted by a previous run, or None when absent/incomplete."""
    if not path.exists():
        return None
    traces: list[AgentTrace] = []
    try:
        for line in path.read_text("utf-8").splitlines():
            if line.strip():
                traces.append(AgentTrace.from_record(json.loads(line)))
    except (ValueError, KeyError, TypeError):
        log.warning("discarding unreadable trace file %s", path)
        return None
    if len(traces) != expected:
        return None
    return traces


def _persist_traces(path: Path, traces: Sequence[AgentTrace]) -> None:
    lines = [json.dumps(t.to_record(), ensure_ascii=False) for t in traces]
    _atomic_write(path, "\n".join(lines) + "\n")


def _gold_map(corpus: Corpus, gold: Mapping[str, int] | None) -> dict[str, int]:
    answers: dict[str, int] = {}
    missing: list[str] = []
    for problem in corpus:
        if gold is not None and problem.id in gold:
            answers[problem.id] = gold[problem.id]
        elif problem.answer is not None:
            answers[problem.id] = problem.answer
        else:
            missing.append(problem.id)
    if missing:
        shown = ", ".join(missing[:5])
        raise ConfigError(
            f"{len(missing)} problem(s) have no gold answer (e.g. {shown}); "
            "supply one in the corpus or via a gold file"
        )
    return answers


def _agent_task(
    problem: Problem,
    rendered: list[ChatMessage],
    config: RunConfig,
    backend: Backend,
    executor: Executor,
    agent_id: int,
) -> tuple[AgentTrace, str | None]:
    try:
        return run_agent(problem, rendered, config, backend, executor, agent_id), None
    except Exception as exc:  # defensive: a failed agent must not sink the run
        log.warning("problem %s agent %d aborted: %s", problem.id, agent_id, exc)
        trace = AgentTrace(
            agent_id=agent_id,
            messages=list(rendered),
            executions=[],
            final_answer=None,
            status="aborted",
            turns_used=0,
        )
        return trace, f"problem {problem.id}: agent {agent_id} aborted: {exc}"


def run(
    corpus: Corpus,
    exemplar_corpus: Corpus,
    config: RunConfig,
    backend: Backend,
    executor: Executor,
    out_dir: str | Path,
    gold: Mapping[str, int] | None = None,
    crash_after: int | None = None,
) -> ScoreReport:
    """Execute the full pipeline over ``corpus`` and write a score report.

    ``crash_after`` aborts the run after that many problems have been
    recorded; it simulates a killed process in resume tests.
    """
    if len(corpus) == 0:
        raise ConfigError("corpus is empty")
    gold_answers = _gold_map(corpus, gold)
    backend.check()  # fail fast before any agent launches

    run_id = compute_run_id(config, corpus, exemplar_corpus)
    out = Path(out_dir)
    traces_dir = out / "traces" / run_id
    run_dir = out / "runs" / run_id
    traces_dir.mkdir(parents=True, exist_ok=True)
    run_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(
        run_dir / "config.json",
        json.dumps(config.to_dict(), ensure_ascii=False, indent=2) + "\n",
    )

    notes: list[str] = []
    solutions = exemplar_corpus.solutions()
    index = None
    if config.few_shot_count > 0:
        if len(exemplar_corpus) == 0 or not solutions:
            notes.append(
                f"few_shot_count={config.few_shot_count} requested but the exemplar "
                "corpus has no usable exemplars; running zero-shot"
            )
        else:
            index = build_index(exemplar_corpus)
    prompt_config = config.prompt_config()

    started = time.monotonic()
    resumed: dict[str, list[AgentTrace]] = {}
    prompts: dict[str, list[ChatMessage]] = {}
    prompt_failures: dict[str, str] = {}
    for problem in corpus:
        previous = _load_traces(traces_dir / f"{problem.id}.log", config.samples_n)
        if previous is not None:
            resumed[problem.id] = previous
            continue
        exemplars: list[Exemplar] = []
        if index is not None:
            ranked = similar(index, problem, config.few_shot_count, config.similarity)
            exemplars = to_exemplars([pid for pid, _ in ranked], exemplar_corpus, solutions)
        try:
            prompts[problem.id] = render_prompt(problem, exemplars, prompt_config)
        except PromptError as exc:
            prompt_failures[problem.id] = str(exc)

    per_problem: list[ProblemOutcome] = []
    correct_count = 0
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        futures: dict[str, list[Future]] = {}
        for problem in corpus:
            if problem.id in resumed or problem.id in prompt_failures:
                continue
            futures[problem.id] = [
                pool.submit(
                    _agent_task, problem, prompts[problem.id], config, backend, executor, i
                )
                for i in range(config.samples_n)
            ]

        for position, problem in enumerate(corpus, start=1):
            gold_answer = gold_answers[problem.id]
            if problem.id in prompt_failures:
                notes.append(f"problem {problem.id}: prompt error: {prompt_failures[problem.id]}")
                traces: list[AgentTrace] = []
            elif problem.id in resumed:
                traces = resumed[problem.id]
            else:
                results = [future.result() for future in futures[problem.id]]
                traces = [trace for trace, _ in results]
                notes.extend(note for _, note in results if note)
                _persist_traces(traces_dir / f"{problem.id}.log", traces)
            consensus = vote(traces, problem_id=problem.id)
            elected = consensus.elected
            prediction = elected
            if prediction is None and config.fallback_answer is not None:
                prediction = config.fallback_answer
                notes.append(f"problem {problem.id}: fallback answer used")
            correct = prediction is not None and prediction == gold_answer
            per_problem.append(
                ProblemOutcome(
                    problem_id=problem.id,
                    elected=elected,
                    gold=gold_answer,
                    correct=correct,
                )
            )
            correct_count += int(correct)
            log.info(
                "problem %s: elected=%s gold=%s %s",
                problem.id,
                elected,
                gold_answer,
                "correct" if correct else "incorrect",
            )
            if crash_after is not None and position >= crash_after:
                pool.shutdown(cancel_futures=True)
                raise RunError(f"simulated crash after {position} problem(s)")

    total = len(per_problem)
    report = ScoreReport(
        run_id=run_id,
        config=config,
        per_problem=per_problem,
        correct_count=correct_count,
        total=total,
        accuracy=correct_count / total if total else 0.0,
        wall_time_s=round(time.monotonic() - started, 3),
        notes=notes,
    )
    _atomic_write(run_dir / "report.json", report.to_json())
    return report


def score(predictions: Mapping[str, int | None], gold: Mapping[str, int]) -> tuple[int, int, float]:
    """Exact-match scoring; missing predictions count as incorrect."""
    unknown = sorted(set(predictions) - set(gold))
    if unknown:
        raise ConfigError(f"predicted ids not present in gold: {', '.join(unknown[:10])}")
    total = len(gold)
    correct = sum(
        1
        for problem_id, answer in gold.items()
        if predictions.get(problem_id) == answer
    )
    return correct, total, correct / total if total else 0.0


def load_answers(path: str | Path) -> dict[str, int]:
    """Read an ``{id, answer}`` JSONL file (gold or predictions)."""
    answers: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{where}: malformed record: {exc.msg}") from None
            if not isinstance(record, dict) or "id" not in record:
                raise ConfigError(f"{where}: expected an object with an 'id' field")
            raw = record.get("answer")
            if raw is None:
                continue
            answer = validate_answer(str(raw))
            if answer is None:
                raise ConfigError(f"{where}: answer {raw!r} is not a non-negative integer")
            answers[str(record["id"])] = answer
    return answers


def read_report(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as handle:
        report = json.load(handle)
    if not isinstance(report, dict):
        raise ConfigError(f"{path}: not a report object")
    return report


def find_reports(root: str | Path) -> list[dict]:
    """All report.json files under ``root``, ordered by path for stability."""
    reports = []
    for path in sorted(Path(root).rglob("report.json")):
        reports.append(read_report(path))
    return reports
