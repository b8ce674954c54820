"""End-to-end acceptance checks.

Each test prints one ``[PASS]``/``[FAIL]`` line (visible even under capture)
so a plain ``pytest tests/test_acceptance.py`` run doubles as a checklist.
The last two checks need the worker package built (``npm run build`` in
``runner/``) and are skipped with a ``[SKIP]`` line when it is absent.
"""
import contextlib
import json
import math
import random
import re
import time

import pytest

from tirsolve.agent import AgentTrace, extract_boxed_answer, extract_code_blocks
from tirsolve.backend import MockBackend, load_mock
from tirsolve.consensus import vote
from tirsolve.corpus import Corpus, Problem, load_corpus
from tirsolve.executors import StubExecutor, WorkerPoolExecutor
from tirsolve.harness import (
    RunError,
    apply_overrides,
    find_reports,
    load_config,
    run,
)
from tirsolve.prompting import (
    format_templates,
    load_templates,
    parse_templates,
    render_prompt,
)
from tirsolve.reports import report_row, report_table
from tirsolve.retrieval import build_index, idf, problem_keywords, similar
from tirsolve.conformance import TIMEOUT_CASE_MS, TIMEOUT_TOLERANCE_MS, run_conformance

from conftest import FIXTURES, REPO_ROOT, make_corpus, make_problem
from extraction_fixtures import FIXTURES as EXTRACTION_FIXTURES

GOLDEN = FIXTURES / "golden"
SWEEP = FIXTURES / "table_sweep"
WORKER_JS = REPO_ROOT / "runner" / "dist" / "worker.js"
WORKER_CMD = f"node {WORKER_JS}"


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def checked(name):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"[FAIL] {name}", flush=True)
            raise
        with capsys.disabled():
            print(f"[PASS] {name}", flush=True)

    return checked


def skip_line(capsys, name, reason):
    with capsys.disabled():
        print(f"[SKIP] {name} ({reason})", flush=True)
    pytest.skip(reason)


def golden_run(out_dir, overrides=(), executor=None, crash_after=None):
    corpus = load_corpus(GOLDEN / "corpus.jsonl")
    exemplars = load_corpus(GOLDEN / "exemplars.jsonl")
    config = apply_overrides(load_config(GOLDEN / "config.yaml"), list(overrides))
    backend = MockBackend(load_mock(GOLDEN / "mock_script.txt"))
    return run(
        corpus=corpus,
        exemplar_corpus=exemplars,
        config=config,
        backend=backend,
        executor=executor if executor is not None else StubExecutor(),
        out_dir=out_dir,
        crash_after=crash_after,
    )


def canonical_report_bytes(report) -> str:
    data = json.loads(report.to_json())
    data["wall_time_s"] = 0.0
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


def test_golden_end_to_end(criterion, tmp_path):
    with criterion("golden end-to-end run: byte-exact report, accuracy 0.7, < 10 s"):
        started = time.perf_counter()
        report = golden_run(tmp_path)
        elapsed = time.perf_counter() - started
        assert report.accuracy == 0.7
        expected = (GOLDEN / "expected_report.json").read_text(encoding="utf-8")
        assert canonical_report_bytes(report) == expected
        # the scripted corpus exercises every agent outcome
        traces_dir = tmp_path / "traces" / report.run_id
        statuses = {}
        for path in traces_dir.glob("*.log"):
            records = [json.loads(line) for line in path.read_text().splitlines()]
            statuses[path.stem] = {r["status"] for r in records}
        assert statuses["golden-p01"] == {"answered"}
        assert statuses["golden-p03"] == {"depth_exhausted"}
        assert statuses["golden-p04"] == {"backend_error"}
        p02 = [
            json.loads(line)
            for line in (traces_dir / "golden-p02.log").read_text().splitlines()
        ]
        assert all(r["status"] == "answered" and r["turns_used"] == 2 for r in p02)
        assert elapsed < 10.0


def test_voting_oracle_equivalence(criterion):
    with criterion("voting equals brute-force plurality on 1000 random multisets, < 5 s"):
        rng = random.Random(20250811)
        started = time.perf_counter()
        for _ in range(1000):
            size = rng.randint(1, 50)
            answers = []
            for agent_id in range(size):
                if rng.random() < 0.15:
                    answers.append(None)  # failed agent: abstains
                else:
                    answers.append(rng.randint(0, 8))
            traces = [
                AgentTrace(
                    agent_id=i,
                    final_answer=a,
                    status="answered" if a is not None else "depth_exhausted",
                )
                for i, a in enumerate(answers)
            ]
            result = vote(traces)
            votes = [a for a in answers if a is not None]
            if not votes:
                assert result.elected is None
                assert result.tally == {}
                continue
            best = max(votes.count(v) for v in set(votes))
            assert result.tally[result.elected] == best
            # documented tie rule: earliest first vote among the leaders wins
            leaders = [v for v in set(votes) if votes.count(v) == best]
            assert result.elected == min(leaders, key=votes.index)
        assert time.perf_counter() - started < 5.0


def reference_rank(corpus: Corpus, query: Problem, k: int) -> list[tuple[str, float]]:
    """Exhaustive score-and-sort over the whole corpus, written independently."""
    index = build_index(corpus)
    query_words = problem_keywords(query)
    rows = []
    for other in corpus:
        if other.id == query.id:
            continue
        shared = sorted(query_words & problem_keywords(other))
        score = math.fsum(idf(index, w) for w in shared)
        if score > 0.0:
            rows.append((other.id, score))
    rows.sort(key=lambda item: (-item[1], item[0]))
    return rows[:k]


def test_retrieval_oracle_equivalence(criterion):
    with criterion("retrieval equals exhaustive score-and-sort on 200 corpora, < 10 s"):
        rng = random.Random(20250812)
        vocabulary = [f"word{i}" for i in range(30)]
        started = time.perf_counter()
        for trial in range(200):
            problems = []
            for i in range(rng.randint(2, 50)):
                keyword_count = rng.randint(0, 10)
                keywords = tuple(rng.sample(vocabulary, keyword_count))
                problems.append(
                    make_problem(f"t{trial}-p{i:02d}", keywords=keywords, answer=1)
                )
            corpus = make_corpus(*problems)
            index = build_index(corpus)
            query = problems[rng.randrange(len(problems))]
            for k in (1, 3, 5):
                assert similar(index, query, k) == reference_rank(corpus, query, k)
        assert time.perf_counter() - started < 10.0


def test_extraction_suite(criterion):
    with criterion(
        f"extraction matches hand labels on all {len(EXTRACTION_FIXTURES)} fixtures"
    ):
        assert len(EXTRACTION_FIXTURES) >= 30
        for name, text, expected_blocks, expected_answer in EXTRACTION_FIXTURES:
            assert extract_code_blocks(text) == expected_blocks, name
            assert extract_boxed_answer(text) == expected_answer, name


def test_determinism_and_parallelism(criterion, tmp_path):
    with criterion("parallelism 1 vs 8 identical; resume-after-kill equals clean run"):
        serial = golden_run(tmp_path / "p1", overrides=["parallelism=1"])
        wide = golden_run(tmp_path / "p8", overrides=["parallelism=8"])
        serial_rows = [o.to_record() for o in serial.per_problem]
        assert serial_rows == [o.to_record() for o in wide.per_problem]

        clean = golden_run(tmp_path / "clean")
        with pytest.raises(RunError):
            golden_run(tmp_path / "resumed", crash_after=4)
        resumed = golden_run(tmp_path / "resumed")
        assert [o.to_record() for o in resumed.per_problem] == [
            o.to_record() for o in clean.per_problem
        ]
        assert resumed.run_id == clean.run_id


def all_prompt_configs():
    from tirsolve.prompting import (
        INSTRUCTION_MODES,
        LANGUAGES,
        MAX_FEW_SHOT,
        SELECTABLE_TEMPLATES,
        PromptConfig,
    )

    configs = []
    for problem_language in LANGUAGES:
        for reasoning_language in LANGUAGES:
            for translate_first in (False, True):
                if translate_first and problem_language != "bn":
                    continue
                for instruction_mode in INSTRUCTION_MODES:
                    for polite in (False, True):
                        for few_shot_count in range(MAX_FEW_SHOT + 1):
                            for template_id in SELECTABLE_TEMPLATES:
                                configs.append(
                                    PromptConfig(
                                        problem_language=problem_language,
                                        reasoning_language=reasoning_language,
                                        translate_first=translate_first,
                                        instruction_mode=instruction_mode,
                                        polite=polite,
                                        few_shot_count=few_shot_count,
                                        template_id=template_id,
                                    )
                                )
    return configs


def test_prompt_conformance(criterion):
    with criterion(
        "every prompt in the full config sweep carries \\boxed{; templates round-trip"
    ):
        problem = make_problem(
            "sweep-q",
            statement_en="How many divisors does 360 have?",
            statement_bn="৩৬০ এর কতটি ভাজক আছে?",
            answer=24,
            category="Number Theory",
        )
        exemplar_problems = [
            make_problem(
                f"ex{i}",
                statement_en=f"Exemplar statement {i}.",
                statement_bn=f"উদাহরণ {i}।",
                answer=i,
                solution_tir=f"```python\nprint({i})\n```\n\\boxed{{{i}}}",
            )
            for i in range(5)
        ]
        from tirsolve.retrieval import Exemplar

        exemplars = [
            Exemplar(problem=p, solution_text=p.solution_tir)
            for p in exemplar_problems
        ]
        configs = all_prompt_configs()
        assert len(configs) == 432
        for config in configs:
            messages = render_prompt(problem, exemplars, config)
            joined = "\n".join(m.content for m in messages)
            assert "\\boxed{" in joined, config

        from importlib import resources

        raw = (
            resources.files("tirsolve").joinpath("data", "templates.txt").read_text("utf-8")
        )
        assert format_templates(parse_templates(raw)) == raw
        assert parse_templates(raw) == load_templates()


def test_table_structure(criterion, tmp_path):
    with criterion("8-row sweep config directory reproduces an 8-row report table"):
        corpus = load_corpus(SWEEP / "corpus.jsonl")
        backend = MockBackend(load_mock(SWEEP / "mock_script.txt"))
        config_paths = sorted(SWEEP.glob("row*.yaml"))
        assert len(config_paths) == 8
        for path in config_paths:
            run(
                corpus=corpus,
                exemplar_corpus=Corpus(),
                config=load_config(path),
                backend=backend,
                executor=StubExecutor(),
                out_dir=tmp_path,
            )
        found = find_reports(tmp_path)
        assert len(found) == 8
        table = report_table(found)
        assert len(table.splitlines()) == 10  # header + rule + 8 rows

        rows = {
            (
                row["model"],
                row["problem_lang"],
                row["samples"],
                row["depth"],
                row["translate_first"],
            )
            for row in map(report_row, found)
        }
        assert rows == {
            ("Qwen2.5-7B-Math-Instruct", "en", "10", "10", "false"),
            ("Qwen2.5-7B-Math-Instruct", "en", "5", "10", "false"),
            ("Qwen2.5-7B-Coder-Instruct", "en", "5", "1", "false"),
            ("Qwen2.5-7B-Instruct", "en", "5", "5", "false"),
            ("Qwen2.5-7B-Instruct", "en", "50", "9", "false"),
            ("Qwen2.5-7B-Instruct", "bn", "50", "9", "false"),
            ("Qwen2.5-7B-Instruct", "bn", "50", "9", "true"),
            ("Qwen2.5-32B-Instruct-AWQ", "bn", "10", "4", "false"),
        }


def test_runner_conformance(criterion, capsys):
    name = "worker conformance: all protocol cases pass, timeout within tolerance, < 30 s"
    if not WORKER_JS.exists():
        skip_line(capsys, name, "runner not built; run `npm run build` in runner/")
    with criterion(name):
        started = time.perf_counter()
        cases = run_conformance(WORKER_CMD)
        elapsed = time.perf_counter() - started
        failures = [c for c in cases if not c.passed]
        assert not failures, [f"{c.name}: {c.detail}" for c in failures]
        names = {c.name for c in cases}
        assert {"ok_run", "nonzero_exit", "timeout", "truncation", "isolation", "echo"} <= names
        timeout_case = next(c for c in cases if c.name == "timeout")
        match = re.search(r"duration_ms=(\d+)", timeout_case.detail)
        assert match is not None, timeout_case.detail
        assert (
            TIMEOUT_CASE_MS
            <= int(match.group(1))
            <= TIMEOUT_CASE_MS + TIMEOUT_TOLERANCE_MS
        )
        assert elapsed < 30.0


def test_golden_with_real_runner(criterion, capsys, tmp_path):
    name = "golden corpus rerun with the real worker reproduces accuracy 0.7"
    if not WORKER_JS.exists():
        skip_line(capsys, name, "runner not built; run `npm run build` in runner/")
    with criterion(name):
        executor = WorkerPoolExecutor(WORKER_CMD, pool_size=4, timeout_ms=8000)
        try:
            report = golden_run(tmp_path, executor=executor)
        finally:
            executor.close()
        assert report.accuracy == 0.7
        expected = (GOLDEN / "expected_report.json").read_text(encoding="utf-8")
        assert canonical_report_bytes(report) == expected
