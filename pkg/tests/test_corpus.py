"""Ingestion, normalization, filtering, sampling."""

import io
import json
import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_corpus
from slangtriage.corpus import (
    Corpus,
    IngestError,
    Post,
    export_jsonl,
    filter_by_term,
    ingest,
    normalize,
    sample,
)
from slangtriage.matching import MatchPolicy


def jsonl_bytes(records):
    return "\n".join(json.dumps(r, ensure_ascii=False) for r in records).encode("utf-8")


def rec(i, text, **extra):
    return {"id": f"p{i}", "text": text, **extra}


class TestNormalize:
    def test_whitespace_collapse(self):
        assert normalize("two  spaces") == "two spaces"
        assert normalize(" lead and trail \n") == "lead and trail"
        assert normalize("tab\tand nbsp") == "tab and nbsp"

    def test_identity_on_plain(self):
        assert normalize("abc") == "abc"

    def test_unicode_composition(self):
        composed = "café"
        decomposed = unicodedata.normalize("NFD", composed)
        assert composed != decomposed
        assert normalize(composed) == normalize(decomposed)

    def test_case_and_punctuation_preserved(self):
        assert normalize("Hey!! YOU?") == "Hey!! YOU?"

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=60))
    def test_idempotent(self, text):
        assert normalize(normalize(text)) == normalize(text)


class TestIngest:
    def test_three_valid_records(self):
        data = jsonl_bytes([rec(0, "one"), rec(1, "two"), rec(2, "three")])
        corpus = ingest(io.BytesIO(data))
        assert len(corpus) == 3
        assert corpus.ids() == ["p0", "p1", "p2"]
        assert corpus.provenance.warnings == 0

    def test_empty_stream(self):
        corpus = ingest(io.BytesIO(b""))
        assert len(corpus) == 0
        assert corpus.provenance.warnings == 0

    def test_undecodable_lines_skipped_and_counted(self):
        good = json.dumps(rec(0, "fine")).encode()
        bad = b'{"id": "x", "text": "caf\xe9 latte"}'  # latin-1 bytes, not utf-8
        data = b"\n".join([good, bad, bad, json.dumps(rec(1, "also fine")).encode()])
        corpus = ingest(io.BytesIO(data))
        assert len(corpus) == 2
        assert corpus.provenance.warnings == 2

    def test_malformed_json_skipped(self):
        data = b'{"id": "a", "text": "ok"}\nnot json at all\n{"id": "b"}\n'
        corpus = ingest(io.BytesIO(data))
        assert len(corpus) == 1
        assert corpus.provenance.warnings == 2

    def test_duplicate_ids_last_wins_with_warning(self):
        data = jsonl_bytes([rec(0, "first"), rec(1, "other"), {"id": "p0", "text": "second"}])
        corpus = ingest(io.BytesIO(data))
        assert len(corpus) == 2
        assert corpus.get("p0").text == "second"
        assert corpus.ids()[0] == "p0"  # keeps first position
        assert corpus.provenance.warnings == 1

    def test_text_normalized_on_ingest(self):
        data = jsonl_bytes([rec(0, "two  spaces here")])
        corpus = ingest(io.BytesIO(data))
        assert corpus.get("p0").text == "two spaces here"

    def test_whitespace_only_text_rejected(self):
        data = jsonl_bytes([rec(0, "   "), rec(1, "ok")])
        corpus = ingest(io.BytesIO(data))
        assert len(corpus) == 1
        assert corpus.provenance.warnings == 1

    def test_meta_and_fields_carried(self):
        data = jsonl_bytes(
            [{"id": "a", "text": "hi", "created_at": "2022-09-01T00:00:00Z", "source": "s", "meta": {"k": 1}}]
        )
        post = ingest(io.BytesIO(data)).get("a")
        assert post.created_at == "2022-09-01T00:00:00Z"
        assert post.source == "s"
        assert post.meta == {"k": 1}

    def test_csv_format(self):
        data = "id,text,source\na,hello there,tag\nb,more text,\n".encode()
        corpus = ingest(io.BytesIO(data), format="csv", source="fallback")
        assert len(corpus) == 2
        assert corpus.get("a").source == "tag"
        assert corpus.get("b").source == "fallback"

    def test_csv_missing_columns(self):
        with pytest.raises(IngestError):
            ingest(io.BytesIO(b"foo,bar\n1,2\n"), format="csv")

    def test_unknown_format(self):
        with pytest.raises(IngestError):
            ingest(io.BytesIO(b""), format="parquet")

    def test_roundtrip_export_ingest(self):
        posts = [
            Post(id="a", text="café crowd", created_at="2020-01-01", source="x", meta={"n": 2}),
            Post(id="b", text="plain"),
        ]
        corpus = Corpus(posts)
        buf = io.StringIO()
        export_jsonl(corpus, buf)
        back = ingest(io.BytesIO(buf.getvalue().encode("utf-8")))
        assert back.ids() == corpus.ids()
        for post in corpus:
            other = back.get(post.id)
            assert other.text == post.text
            assert other.created_at == post.created_at
            assert other.source == post.source
            assert dict(other.meta) == dict(post.meta)


class TestCorpus:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            Corpus([Post(id="a", text="x"), Post(id="a", text="y")])

    def test_contains_and_get(self):
        corpus = make_corpus(["one", "two"])
        assert "p0" in corpus
        assert corpus.get("p1").text == "two"
        assert corpus.get("nope") is None


class TestFilterByTerm:
    def test_basic_subset(self):
        corpus = make_corpus(["got fenty", "fenty!", "fentyless", "nothing"])
        out = filter_by_term(corpus, "fenty")
        assert out.ids() == ["p0", "p1"]

    def test_idempotent_and_subset(self):
        corpus = make_corpus(["tar heel", "tarmac", "hot tar", "none"])
        once = filter_by_term(corpus, "tar")
        twice = filter_by_term(once, "tar")
        assert once.ids() == twice.ids()
        assert set(once.ids()) <= set(corpus.ids())

    def test_provenance_appended(self):
        corpus = make_corpus(["a lean b"])
        out = filter_by_term(corpus, "lean")
        assert len(out.provenance.filters) == 1
        assert "lean" in out.provenance.filters[0]

    def test_no_matches(self):
        corpus = make_corpus(["nothing here"])
        assert len(filter_by_term(corpus, "fenty")) == 0

    def test_empty_term_rejected(self):
        with pytest.raises(ValueError):
            filter_by_term(make_corpus(["x"]), "  ")

    def test_policy_respected(self):
        corpus = make_corpus(["smacked"])
        assert len(filter_by_term(corpus, "smack")) == 0
        loose = filter_by_term(corpus, "smack", MatchPolicy(word_boundary=False))
        assert len(loose) == 1


class TestSample:
    def test_full_sample_is_permutation(self):
        corpus = make_corpus([f"text {i}" for i in range(20)])
        out = sample(corpus, 20, seed=1)
        assert sorted(out.ids()) == sorted(corpus.ids())

    def test_empty_sample(self):
        assert len(sample(make_corpus(["a", "b"]), 0, seed=1)) == 0

    def test_deterministic(self):
        corpus = make_corpus([f"text {i}" for i in range(100)])
        a = sample(corpus, 10, seed=7)
        b = sample(corpus, 10, seed=7)
        assert a.ids() == b.ids()

    def test_union_with_complement(self):
        corpus = make_corpus([f"text {i}" for i in range(50)])
        picked = sample(corpus, 18, seed=3)
        complement = set(corpus.ids()) - set(picked.ids())
        assert len(picked) + len(complement) == len(corpus)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            sample(make_corpus(["a"]), 2, seed=0)
