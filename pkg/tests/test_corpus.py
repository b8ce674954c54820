import json

import pytest
from hypothesis import given, strategies as st

from tirsolve.corpus import (
    AUGMENTATION_TEMPLATE,
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

from conftest import make_corpus, make_problem


class TestValidateAnswer:
    def test_plain_integer(self):
        assert validate_answer("42") == 42

    def test_bangla_numerals(self):
        assert validate_answer("৪২") == 42

    def test_negative_rejected(self):
        assert validate_answer("-5") is None

    def test_surrounding_whitespace(self):
        assert validate_answer("  17  ") == 17

    def test_zero(self):
        assert validate_answer("0") == 0

    @pytest.mark.parametrize("bad", ["", "x", "3.5", "1e3", "12a", "+4"])
    def test_non_integers(self, bad):
        assert validate_answer(bad) is None

    @given(st.integers(min_value=0, max_value=10**9))
    def test_round_trip_on_rendered_integers(self, n):
        assert validate_answer(str(n)) == n

    @given(st.integers(min_value=0, max_value=10**9))
    def test_round_trip_on_bangla_rendering(self, n):
        ascii_to_bangla = {ord("0") + i: 0x09E6 + i for i in range(10)}
        assert validate_answer(str(n).translate(ascii_to_bangla)) == n


def test_normalize_numerals_covers_all_ten_digits():
    bangla = "০১২৩৪৫৬৭৮৯"
    assert normalize_numerals(bangla) == "0123456789"


class TestProblem:
    def test_empty_id_rejected(self):
        with pytest.raises(CorpusError):
            Problem(id="", statement_en="x")

    def test_negative_answer_rejected(self):
        with pytest.raises(CorpusError):
            make_problem("p", answer=-3)

    def test_boolean_answer_rejected(self):
        with pytest.raises(CorpusError):
            make_problem("p", answer=True)

    def test_some_statement_required(self):
        with pytest.raises(CorpusError):
            Problem(id="p", statement_bn="", statement_en=None)

    def test_statement_by_language(self):
        problem = Problem(id="p", statement_bn="বাংলা", statement_en="english")
        assert problem.statement("bn") == "বাংলা"
        assert problem.statement("en") == "english"

    def test_statement_absent_language(self):
        problem = Problem(id="p", statement_bn="বাংলা")
        assert problem.statement("en") is None

    def test_statement_unknown_language(self):
        with pytest.raises(ValueError):
            make_problem("p").statement("fr")


class TestCorpus:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(CorpusError, match="duplicate"):
            make_corpus(make_problem("a"), make_problem("a"))

    def test_get_and_ids(self):
        corpus = make_corpus(make_problem("a"), make_problem("b"))
        assert corpus.ids() == ["a", "b"]
        assert corpus.get("b").id == "b"
        assert corpus.get("zzz") is None

    def test_solutions_skips_blank(self):
        corpus = make_corpus(
            make_problem("a", solution_tir="work shown"),
            make_problem("b", solution_tir="   "),
            make_problem("c"),
        )
        assert corpus.solutions() == {"a": "work shown"}

    def test_digest_changes_with_content(self):
        one = make_corpus(make_problem("a", answer=1))
        two = make_corpus(make_problem("a", answer=2))
        assert one.digest() != two.digest()
        assert one.digest() == make_corpus(make_problem("a", answer=1)).digest()


class TestLoadSave:
    def test_round_trip_is_byte_identical(self, tmp_path):
        original = make_corpus(
            make_problem("p1", statement_bn="কত?", statement_en="how many?", answer=3),
            make_problem("p2", category=Category.GEOMETRY, keywords=("circle",)),
        )
        path = tmp_path / "corpus.jsonl"
        save_corpus(original, path)
        first = path.read_bytes()
        save_corpus(load_corpus(path), path)
        assert path.read_bytes() == first

    def test_golden_fixture_round_trips(self, fixtures_dir, tmp_path):
        source = fixtures_dir / "golden" / "corpus.jsonl"
        loaded = load_corpus(source)
        out = tmp_path / "copy.jsonl"
        save_corpus(loaded, out)
        assert out.read_bytes() == source.read_bytes()

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert len(load_corpus(path)) == 0

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "gaps.jsonl"
        path.write_text('{"id": "a", "statement_en": "x"}\n\n{"id": "b", "statement_en": "y"}\n')
        assert load_corpus(path).ids() == ["a", "b"]

    def test_malformed_record_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "statement_en": "x"}\nnot json\n')
        with pytest.raises(CorpusError, match=r"bad\.jsonl:2"):
            load_corpus(path)

    def test_negative_answer_names_line(self, tmp_path):
        path = tmp_path / "neg.jsonl"
        lines = ['{"id": "p%d", "statement_en": "s", "answer": 1}' % i for i in range(6)]
        lines.append('{"id": "p6", "statement_en": "s", "answer": -3}')
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusError, match=r"neg\.jsonl:7"):
            load_corpus(path)

    def test_duplicate_id_names_both_lines(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        path.write_text(
            '{"id": "a", "statement_en": "x"}\n{"id": "a", "statement_en": "y"}\n'
        )
        with pytest.raises(CorpusError, match=r"dup\.jsonl:2.*line 1"):
            load_corpus(path)

    def test_unknown_category_rejected(self, tmp_path):
        path = tmp_path / "cat.jsonl"
        path.write_text('{"id": "a", "statement_en": "x", "category": "Botany"}\n')
        with pytest.raises(CorpusError, match="Botany"):
            load_corpus(path)

    def test_unknown_fields_preserved(self, tmp_path):
        path = tmp_path / "extra.jsonl"
        record = {"id": "a", "statement_en": "x", "source_round": "nationals"}
        path.write_text(json.dumps(record) + "\n")
        loaded = load_corpus(path)
        assert loaded.get("a").extra == {"source_round": "nationals"}
        out = tmp_path / "copy.jsonl"
        save_corpus(loaded, out)
        assert json.loads(out.read_text())["source_round"] == "nationals"

    def test_keywords_must_be_strings(self, tmp_path):
        path = tmp_path / "kw.jsonl"
        path.write_text('{"id": "a", "statement_en": "x", "keywords": [1, 2]}\n')
        with pytest.raises(CorpusError, match="keywords"):
            load_corpus(path)


class TestAugmentation:
    def test_prompt_contains_statement_and_count(self):
        problem = make_problem("p", statement_en="How many primes below 100?")
        (message,) = build_augmentation_prompt(problem, 5)
        assert message.role == "user"
        assert "How many primes below 100?" in message.content
        assert "5" in message.content

    def test_prompt_prefers_bangla_statement(self):
        problem = Problem(id="p", statement_bn="কতগুলো?", statement_en="how many?")
        (message,) = build_augmentation_prompt(problem, 2)
        assert "কতগুলো?" in message.content

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            build_augmentation_prompt(make_problem("p"), 0)

    def test_whitespace_statement_rejected(self):
        with pytest.raises(CorpusError):
            build_augmentation_prompt(Problem(id="p", statement_bn="   "), 3)

    def test_template_mentions_answer_preservation(self):
        assert "answer unchanged" in AUGMENTATION_TEMPLATE

    def test_parse_numbered_items(self):
        assert parse_augmentation_reply("1. A\n2. B\n3. C", 3) == ["A", "B", "C"]

    def test_parse_paren_numbering(self):
        assert parse_augmentation_reply("1) first\n2) second", 5) == ["first", "second"]

    def test_parse_fewer_than_k(self):
        assert len(parse_augmentation_reply("1. only\n2. two", 5)) == 2

    def test_parse_truncates_to_k(self):
        reply = "\n".join(f"{i}. version {i}" for i in range(1, 8))
        items = parse_augmentation_reply(reply, 5)
        assert len(items) == 5
        assert items[0] == "version 1"
        assert items[-1] == "version 5"

    def test_continuation_lines_join(self):
        reply = "1. first line\nstill the first\n2. second"
        assert parse_augmentation_reply(reply, 3) == [
            "first line\nstill the first",
            "second",
        ]

    def test_never_fabricates(self):
        assert parse_augmentation_reply("no numbering at all", 4) == []

    @given(st.text(max_size=300), st.integers(min_value=1, max_value=10))
    def test_length_never_exceeds_k(self, reply, k):
        assert len(parse_augmentation_reply(reply, k)) <= k
