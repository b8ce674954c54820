"""Tool-integrated reasoning harness for math word problems.

The pipeline: load a problem corpus, retrieve similar solved problems as
few-shot exemplars, render a prompt, let several agents alternate between a
chat model and a code executor until each produces a boxed integer answer,
then elect the majority answer and score it against gold.
"""
from .agent import AgentTrace, extract_boxed_answer, extract_code_blocks, run_agent
from .backend import (
    BackendError,
    GenerationParams,
    HttpBackend,
    MockBackend,
    ProtocolError,
    TransportError,
    load_mock,
)
from .chat import ChatMessage
from .consensus import ConsensusResult, vote
from .corpus import (
    Category,
    Corpus,
    CorpusError,
    Problem,
    build_augmentation_prompt,
    load_corpus,
    normalize_numerals,
    parse_augmentation_reply,
    save_corpus,
    validate_answer,
)
from .executors import ExecutionResult, StubExecutor, WorkerPoolExecutor
from .harness import (
    ConfigError,
    RunConfig,
    RunError,
    ScoreReport,
    load_config,
    run,
    score,
)
from .prompting import PromptConfig, PromptError, load_templates, render_prompt
from .retrieval import (
    Exemplar,
    KeywordIndex,
    build_index,
    extract_keywords,
    similar,
    to_exemplars,
)

__version__ = "0.1.0"

__all__ = [
    "AgentTrace",
    "BackendError",
    "Category",
    "ChatMessage",
    "ConfigError",
    "ConsensusResult",
    "Corpus",
    "CorpusError",
    "ExecutionResult",
    "Exemplar",
    "GenerationParams",
    "HttpBackend",
    "KeywordIndex",
    "MockBackend",
    "Problem",
    "PromptConfig",
    "PromptError",
    "ProtocolError",
    "RunConfig",
    "RunError",
    "ScoreReport",
    "StubExecutor",
    "TransportError",
    "WorkerPoolExecutor",
    "build_augmentation_prompt",
    "build_index",
    "extract_boxed_answer",
    "extract_code_blocks",
    "extract_keywords",
    "load_config",
    "load_corpus",
    "load_mock",
    "load_templates",
    "normalize_numerals",
    "parse_augmentation_reply",
    "render_prompt",
    "run",
    "run_agent",
    "save_corpus",
    "score",
    "similar",
    "to_exemplars",
    "validate_answer",
    "vote",
]
