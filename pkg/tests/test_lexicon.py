"""Lexicon loading and the binary classification strategy."""

import io
import json
import random

import pytest

from conftest import make_corpus, random_text
from oracles import naive_matched_terms
from slangtriage.corpus import Corpus, Post, normalize
from slangtriage.labels import Label
from slangtriage.lexicon import (
    Lexicon,
    LexiconError,
    classify_corpus,
    example_lexicon,
    load_lexicon,
    make_lexicon,
    match,
    save_lexicon,
)
from slangtriage.matching import MatchPolicy


def lexicon_json(terms, name="test", policy=None):
    doc = {"name": name, "citation": "", "terms": terms}
    if policy:
        doc["policy"] = policy
    return io.BytesIO(json.dumps(doc).encode("utf-8"))


class TestLoad:
    def test_json_two_terms(self):
        lex = load_lexicon(lexicon_json(["fentanyl", "opioid"]))
        assert len(lex) == 2
        assert lex.name == "test"

    def test_case_duplicates_collapse(self):
        lex = load_lexicon(lexicon_json(["Lean", "lean"]))
        assert len(lex) == 1

    def test_case_sensitive_policy_keeps_both(self):
        lex = load_lexicon(lexicon_json(["Lean", "lean"], policy={"case_insensitive": False}))
        assert len(lex) == 2

    def test_plain_text_fallback(self):
        body = b"# demo list\nfentanyl\nopioid\n\nlean\n"
        lex = load_lexicon(io.BytesIO(body), name="from-file")
        assert lex.name == "from-file"
        assert lex.terms == ("fentanyl", "opioid", "lean")

    def test_terms_normalized(self):
        lex = load_lexicon(lexicon_json(["china   white"]))
        assert lex.terms == ("china white",)

    def test_empty_list_rejected(self):
        with pytest.raises(LexiconError):
            load_lexicon(lexicon_json([]))

    def test_malformed_json_rejected(self):
        with pytest.raises(LexiconError):
            load_lexicon(io.BytesIO(b'{"name": "x", "terms": '))

    def test_non_string_terms_rejected(self):
        with pytest.raises(LexiconError):
            load_lexicon(lexicon_json(["ok", 7]))

    def test_synthetic_count_preserved(self):
        rng = random.Random(11)
        terms = [f"term{i}" for i in range(500)]
        duplicated = terms + [t.upper() for t in rng.sample(terms, 120)]
        rng.shuffle(duplicated)
        lex = load_lexicon(lexicon_json(duplicated))
        assert len(lex) == 500

    def test_roundtrip_through_save(self):
        lex = make_lexicon("demo", ["fenty", "china white"], MatchPolicy(word_boundary=False), "cite")
        buf = io.StringIO()
        save_lexicon(lex, buf)
        back = load_lexicon(io.BytesIO(buf.getvalue().encode("utf-8")))
        assert back == lex

    def test_bundled_examples(self):
        broad = example_lexicon("example-broad")
        strict = example_lexicon("example-strict")
        assert "oxy" in broad.terms
        assert "oxy" not in strict.terms
        assert len(broad) >= 8
        with pytest.raises(LexiconError):
            example_lexicon("nope")


class TestMatch:
    def test_explicit_terms(self):
        lex = make_lexicon("demo", ["fentanyl", "opioid"])
        post = Post(id="t1", text="naloxone reverses a fentanyl overdose, an opioid emergency")
        result = match(post, lex)
        assert result.matched_terms == {"fentanyl", "opioid"}
        assert result.label is Label.OPIOID_RELATED

    def test_boundary_blocks_embedded(self):
        lex = make_lexicon("demo", ["lean"])
        assert match(Post(id="x", text="cleaning supplies"), lex).matched_terms == frozenset()

    def test_label_iff_nonempty(self):
        lex = make_lexicon("demo", ["tar"])
        assert match(Post(id="a", text="tar pit"), lex).label is Label.OPIOID_RELATED
        assert match(Post(id="b", text="tart pit"), lex).label is Label.NOT_OPIOID_RELATED

    def test_oracle_equivalence_randomized(self):
        rng = random.Random(5)
        vocab = ["lean", "oxy", "tar", "h", "china white", "fetty", "blues", "smack"]
        for _ in range(300):
            terms = rng.sample(vocab, rng.randint(1, 5))
            lex = make_lexicon("r", terms)
            text = normalize(random_text(rng, extra=rng.sample(vocab, rng.randint(0, 3))))
            post = Post(id="p", text=text)
            assert match(post, lex).matched_terms == naive_matched_terms(text, list(lex.terms), lex.policy)

    def test_whitespace_collapse_invariance(self):
        lex = make_lexicon("demo", ["china white"])
        messy = "selling china    white downtown"
        assert match(Post(id="a", text=normalize(messy)), lex).label is Label.OPIOID_RELATED

    def test_case_mapping_invariance(self):
        lex = make_lexicon("demo", ["fetty"])
        for variant in ["got that fetty", "GOT THAT FETTY", "Got That FeTTy"]:
            assert match(Post(id="a", text=variant), lex).label is Label.OPIOID_RELATED


class TestClassifyCorpus:
    def test_all_positive_baseline_shape(self):
        corpus = make_corpus([f"everyone says smack {i}" for i in range(10)])
        lex = make_lexicon("catch-all", ["smack"])
        preds = classify_corpus(corpus, lex)
        assert len(preds) == 10
        assert all(p.label is Label.OPIOID_RELATED for p in preds)
        assert preds.predictor_id == "catch-all"

    def test_all_negative(self):
        corpus = make_corpus(["nothing topical", "still nothing"])
        lex = make_lexicon("strict", ["carfentanil"])
        preds = classify_corpus(corpus, lex)
        assert all(p.label is Label.NOT_OPIOID_RELATED for p in preds)

    def test_empty_corpus(self):
        preds = classify_corpus(Corpus([]), make_lexicon("x", ["tar"]))
        assert len(preds) == 0

    def test_monotonicity_adding_terms(self):
        rng = random.Random(9)
        corpus = make_corpus([random_text(rng, extra=["oxy"] if i % 3 == 0 else []) for i in range(60)])
        base = make_lexicon("base", ["oxy"])
        wider = base.with_terms(["rain"])
        matched_base = {p.post_id for p in classify_corpus(corpus, base) if p.label is Label.OPIOID_RELATED}
        matched_wider = {p.post_id for p in classify_corpus(corpus, wider) if p.label is Label.OPIOID_RELATED}
        assert matched_base <= matched_wider

    def test_concatenation_equals_per_part(self):
        rng = random.Random(13)
        texts = [random_text(rng, extra=["lean"] if i % 4 == 0 else []) for i in range(40)]
        first = make_corpus(texts[:25], prefix="a")
        second = make_corpus(texts[25:], prefix="b")
        both = Corpus(list(first.posts) + list(second.posts))
        lex = make_lexicon("demo", ["lean"])
        combined = classify_corpus(both, lex).labels()
        split = {**classify_corpus(first, lex).labels(), **classify_corpus(second, lex).labels()}
        assert combined == split
