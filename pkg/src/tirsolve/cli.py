"""Command line interface.

Subcommands: ``run`` (full pipeline over a corpus), ``score`` (exact-match
scoring of a predictions file), ``report`` (aggregate run reports into a
table, CSV, and accuracy figure), ``augment`` (generate paraphrased problem
variants), and ``conformance`` (check a worker executable against the
execution protocol).

Exit codes: 0 on success, 1 on configuration errors, 2 on runtime failures.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness, reports
from .backend import (
    BackendError,
    GenerationParams,
    HttpBackend,
    MockBackend,
    MockScriptError,
    TransportError,
    load_mock,
)
from .conformance import format_cases, run_conformance
from .corpus import (
    Corpus,
    CorpusError,
    Problem,
    build_augmentation_prompt,
    load_corpus,
    parse_augmentation_reply,
    save_corpus,
)
from .executors import StubExecutor, WorkerPoolExecutor

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tirsolve",
        description="Tool-integrated reasoning harness for math word problems.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="run the solving pipeline over a corpus")
    run_cmd.add_argument("--corpus", required=True, help="problem corpus (JSON lines)")
    run_cmd.add_argument("--exemplars", required=True, help="exemplar corpus with solutions")
    run_cmd.add_argument("--config", required=True, help="run config file (key: value)")
    run_cmd.add_argument("--gold", help="gold answers file overriding corpus answers")
    executor_group = run_cmd.add_mutually_exclusive_group()
    executor_group.add_argument("--runner-cmd", help="worker command for code execution")
    executor_group.add_argument(
        "--stub-executor",
        action="store_true",
        help="execute code in-process (default; no isolation)",
    )
    run_cmd.add_argument("--mock-script", help="scripted backend instead of HTTP")
    run_cmd.add_argument("--out", default="out", help="output root (default: ./out)")
    run_cmd.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    run_cmd.set_defaults(func=_cmd_run)

    score_cmd = commands.add_parser("score", help="score a predictions file against gold")
    score_cmd.add_argument("--predictions", required=True)
    score_cmd.add_argument("--gold", required=True)
    score_cmd.set_defaults(func=_cmd_score)

    report_cmd = commands.add_parser("report", help="aggregate run reports into a table")
    report_cmd.add_argument("--runs", required=True, help="directory containing run reports")
    report_cmd.add_argument("--out", help="where to write the table/CSV/figure (default: --runs)")
    report_cmd.set_defaults(func=_cmd_report)

    augment_cmd = commands.add_parser("augment", help="generate paraphrased problem variants")
    augment_cmd.add_argument("--corpus", required=True)
    augment_cmd.add_argument("--k", type=int, default=5, help="variants per problem")
    backend_group = augment_cmd.add_mutually_exclusive_group(required=True)
    backend_group.add_argument("--mock-script", help="scripted backend")
    backend_group.add_argument(
        "--live", action="store_true", help="use the HTTP backend from the environment"
    )
    augment_cmd.add_argument("--out", help="output corpus path")
    augment_cmd.set_defaults(func=_cmd_augment)

    conformance_cmd = commands.add_parser(
        "conformance", help="check a worker executable against the execution protocol"
    )
    conformance_cmd.add_argument("--runner-cmd", required=True)
    conformance_cmd.set_defaults(func=_cmd_conformance)
    return parser


def _make_backend(args: argparse.Namespace, config: harness.RunConfig):
    if getattr(args, "mock_script", None):
        return MockBackend(load_mock(args.mock_script))
    return HttpBackend(
        model=config.model_name or None,
        request_timeout_s=config.request_timeout_s,
        retries=config.retries,
        max_inflight=config.parallelism,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = harness.apply_overrides(harness.load_config(args.config), args.overrides)
    corpus = load_corpus(args.corpus)
    exemplars = load_corpus(args.exemplars)
    gold = harness.load_answers(args.gold) if args.gold else None
    try:
        backend = _make_backend(args, config)
    except ValueError as exc:
        raise harness.ConfigError(str(exc)) from None

    if args.runner_cmd:
        executor = WorkerPoolExecutor(
            args.runner_cmd,
            pool_size=config.parallelism,
            timeout_ms=config.timeout_ms,
            max_output_bytes=config.max_output_bytes,
        )
    else:
        if not args.stub_executor:
            log.info("no --runner-cmd given; using the in-process stub executor")
        executor = StubExecutor(
            timeout_ms=config.timeout_ms, max_output_bytes=config.max_output_bytes
        )
    try:
        report = harness.run(
            corpus, exemplars, config, backend, executor, args.out, gold=gold
        )
    finally:
        if isinstance(executor, WorkerPoolExecutor):
            executor.close()
    print(reports.report_table([report.to_dict()]), end="")
    for note in report.notes:
        print(f"note: {note}")
    print(f"report: {Path(args.out) / 'runs' / report.run_id / 'report.json'}")
    return EXIT_OK


def _cmd_score(args: argparse.Namespace) -> int:
    predictions = harness.load_answers(args.predictions)
    gold = harness.load_answers(args.gold)
    correct, total, accuracy = harness.score(predictions, gold)
    print(f"correct={correct} total={total} accuracy={accuracy:.3f}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    found = harness.find_reports(args.runs)
    if not found:
        raise harness.ConfigError(f"no report.json files under {args.runs}")
    out_dir = args.out or args.runs
    paths = reports.write_report_bundle(found, out_dir)
    print(reports.report_table(found), end="")
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def _cmd_augment(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    if args.k < 1:
        raise harness.ConfigError("--k must be at least 1")
    if args.mock_script:
        backend = MockBackend(load_mock(args.mock_script))
    else:
        try:
            backend = HttpBackend()
        except ValueError as exc:
            raise harness.ConfigError(str(exc)) from None
    params = GenerationParams()
    variants: list[Problem] = []
    for problem in corpus:
        prompt = build_augmentation_prompt(problem, args.k)
        reply = backend.chat(prompt, params)
        for ordinal, text in enumerate(parse_augmentation_reply(reply, args.k), start=1):
            field = "statement_bn" if problem.statement_bn else "statement_en"
            variants.append(
                Problem(
                    id=f"{problem.id}-v{ordinal}",
                    statement_bn=text if field == "statement_bn" else "",
                    statement_en=text if field == "statement_en" else None,
                    answer=problem.answer,
                    category=problem.category,
                    keywords=problem.keywords,
                )
            )
    out_path = args.out or str(Path(args.corpus).with_suffix("")) + "_augmented.jsonl"
    save_corpus(Corpus(problems=tuple(variants), name="augmented"), out_path)
    print(f"wrote {len(variants)} variant(s) to {out_path}")
    return EXIT_OK


def _cmd_conformance(args: argparse.Namespace) -> int:
    try:
        cases = run_conformance(args.runner_cmd)
    except (OSError, ValueError) as exc:
        print(f"could not drive worker: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(format_cases(cases))
    return EXIT_OK if all(case.passed for case in cases) else EXIT_RUNTIME


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (harness.ConfigError, CorpusError, MockScriptError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (harness.RunError, BackendError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
