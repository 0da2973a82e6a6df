import json

import pytest
from hypothesis import given, settings, strategies as st

from mgtdetect.errors import DataError, DegenerateSplit, EmptyDocument
from mgtdetect.ingest import (
    Corpus,
    Document,
    Label,
    SplitSpec,
    load_conllu,
    load_hc3,
    normalize,
    split,
)

from conftest import make_corpus


class TestNormalize:
    def test_nbsp_and_whitespace_collapse(self):
        assert normalize("  a b  ") == "a b"

    def test_identity_on_clean_input(self):
        assert normalize("abc") == "abc"

    def test_empty_after_normalization(self):
        with pytest.raises(EmptyDocument):
            normalize("​ \t")

    def test_zero_width_removed(self):
        assert normalize("a​b") == "ab"

    def test_control_chars_removed(self):
        assert normalize("a\x07b\nc") == "ab c"

    @given(st.text(max_size=120))
    def test_idempotent(self, raw):
        try:
            once = normalize(raw)
        except EmptyDocument:
            return
        assert normalize(once) == once


class TestLoadHc3:
    def test_mapping_rule(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            '{"question":"q","human_answers":["a"],"chatgpt_answers":["b","c"]}\n'
        )
        corpus = load_hc3(path)
        assert len(corpus) == 3
        assert corpus.class_counts == {Label.HUMAN: 1, Label.MACHINE: 2}
        assert [d.id for d in corpus.documents] == ["1-h1", "1-m1", "1-m2"]
        assert corpus.documents[0].source_question == "q"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text("")
        corpus = load_hc3(path)
        assert len(corpus) == 0
        assert corpus.class_counts == {Label.HUMAN: 0, Label.MACHINE: 0}

    def test_no_human_answers(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"question":"q","human_answers":[],"chatgpt_answers":["b"]}\n')
        corpus = load_hc3(path)
        assert corpus.class_counts == {Label.HUMAN: 0, Label.MACHINE: 1}

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            '{"question":"q","human_answers":["a"],"chatgpt_answers":["b"]}\n'
            "{broken\n"
        )
        with pytest.raises(DataError, match="line 2"):
            load_hc3(path)

    def test_missing_field_named(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"question":"q","human_answers":["a"]}\n')
        with pytest.raises(DataError, match="chatgpt_answers"):
            load_hc3(path)

    def test_empty_answers_skipped_not_fatal(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            '{"question":"q","human_answers":["​"],"chatgpt_answers":["ok"]}\n'
        )
        corpus = load_hc3(path)
        assert corpus.class_counts == {Label.HUMAN: 0, Label.MACHINE: 1}

    def test_document_count_identity(self, fixtures_dir):
        corpus = load_hc3(fixtures_dir / "hc3_sample.jsonl")
        with (fixtures_dir / "hc3_sample.jsonl").open() as fh:
            expected = sum(
                len(rec["human_answers"]) + len(rec["chatgpt_answers"])
                for rec in map(json.loads, fh)
            )
        assert len(corpus) == expected


class TestSplit:
    def _corpus(self, n_per_class):
        return make_corpus(
            [f"human text {i}" for i in range(n_per_class)],
            [f"machine text {i}" for i in range(n_per_class)],
        )

    def test_floor_rule_and_stratification(self):
        corpus = self._corpus(50)
        spec = SplitSpec(0.8, 0.1, 0.1, seed=7)
        train, val, test = split(corpus, spec)
        assert (len(train), len(val), len(test)) == (80, 10, 10)
        for part in (train, val, test):
            assert part.class_counts[Label.HUMAN] == part.class_counts[Label.MACHINE]

    def test_deterministic(self):
        corpus = self._corpus(50)
        spec = SplitSpec(0.8, 0.1, 0.1, seed=7)
        a = split(corpus, spec)
        b = split(corpus, spec)
        for pa, pb in zip(a, b):
            assert [d.id for d in pa.documents] == [d.id for d in pb.documents]

    def test_degenerate_split(self):
        corpus = make_corpus(["a b c", "d e"], ["x y", "z w", "v u"])
        with pytest.raises(DegenerateSplit):
            split(corpus, SplitSpec(0.8, 0.1, 0.1, seed=1))

    def test_empty_corpus(self):
        with pytest.raises(DataError):
            split(Corpus(()), SplitSpec(0.8, 0.1, 0.1, seed=1))

    def test_fractions_must_sum_to_one(self):
        with pytest.raises(DataError):
            SplitSpec(0.5, 0.2, 0.2, seed=1)

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.integers(min_value=15, max_value=60),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_partition_property(self, n, seed):
        corpus = self._corpus(n)
        train, val, test = split(corpus, SplitSpec(0.6, 0.2, 0.2, seed=seed))
        ids = [d.id for part in (train, val, test) for d in part.documents]
        assert sorted(ids) == sorted(d.id for d in corpus.documents)
        assert len(set(ids)) == len(ids)


class TestLoadConllu:
    def test_fixture_sentences(self, fixtures_dir):
        sentences = load_conllu(fixtures_dir / "sample.conllu")
        assert len(sentences) == 2
        assert sentences[0].tokens == ("a", "b")
        assert sentences[0].heads == (2, 0)
        # multiword range and empty node are skipped
        assert sentences[1].tokens == ("a", "b", "c")
        assert sentences[1].heads == (3, 3, 0)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.conllu"
        path.write_text("")
        assert load_conllu(path) == []

    def test_underscore_head_errors_with_line(self, tmp_path):
        path = tmp_path / "bad.conllu"
        path.write_text("1\ta\t_\t_\t_\t_\t_\t_\t_\t_\n")
        with pytest.raises(DataError, match="line 1"):
            load_conllu(path)

    def test_document_invariants(self):
        with pytest.raises(DataError):
            Document(id="x", body="ok", label="not-a-label")  # type: ignore[arg-type]
        with pytest.raises(EmptyDocument):
            Document(id="x", body="", label=Label.HUMAN)

    def test_corpus_rejects_duplicate_ids(self):
        d = Document(id="same", body="a", label=Label.HUMAN)
        with pytest.raises(DataError):
            Corpus((d, d))
