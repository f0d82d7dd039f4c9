"""Term lexicons and the lexicon-baseline classification strategy.

A lexicon is a named term list plus a match policy. Classifying a corpus
against it yields binary predictions: a post is topical iff at least one term
occurs in it. Published drug-slang lexicons are not redistributed here; two
small illustrative lexicons ship for tests and demos, and real ones load from
user-supplied files.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import IO

from slangtriage.corpus import Corpus, Post, normalize
from slangtriage.labels import Label, Prediction, PredictionSet
from slangtriage.matching import DEFAULT_POLICY, MatchPolicy, MultiPatternMatcher, fold_case


class LexiconError(Exception):
    pass


@dataclass(frozen=True)
class Lexicon:
    """Named, policy-tagged term list. Immutable and shareable."""

    name: str
    terms: tuple[str, ...]
    policy: MatchPolicy = DEFAULT_POLICY
    citation: str = ""

    def __post_init__(self):
        if not self.terms:
            raise LexiconError(f"lexicon {self.name!r} has no terms")
        if any(not t for t in self.terms):
            raise LexiconError(f"lexicon {self.name!r} contains an empty term")

    @cached_property
    def matcher(self) -> MultiPatternMatcher:
        return MultiPatternMatcher(self.terms, self.policy)

    def __len__(self) -> int:
        return len(self.terms)

    def with_terms(self, extra: list[str]) -> "Lexicon":
        return make_lexicon(self.name, list(self.terms) + extra, self.policy, self.citation)


def make_lexicon(
    name: str,
    terms: list[str],
    policy: MatchPolicy = DEFAULT_POLICY,
    citation: str = "",
) -> Lexicon:
    """Build a lexicon with normalized, deduplicated terms (order kept).

    Dedup respects the policy: under case insensitivity, "Lean" and "lean"
    collapse to one entry.
    """
    cleaned: list[str] = []
    seen: set[str] = set()
    for raw in terms:
        term = normalize(raw)
        if not term:
            raise LexiconError(f"lexicon {name!r} contains an empty term")
        key = fold_case(term) if policy.case_insensitive else term
        if key in seen:
            continue
        seen.add(key)
        cleaned.append(term)
    return Lexicon(name=name, terms=tuple(cleaned), policy=policy, citation=citation)


def _policy_from_json(obj: dict) -> MatchPolicy:
    return MatchPolicy(
        case_insensitive=bool(obj.get("case_insensitive", True)),
        word_boundary=bool(obj.get("word_boundary", True)),
        allow_multiword=bool(obj.get("allow_multiword", True)),
    )


def load_lexicon(stream: IO[bytes], name: str = "") -> Lexicon:
    """Read a lexicon file: JSON document, or plain text (one term per line).

    The plain-text fallback applies the default policy; lines starting with
    '#' are comments. ``name`` is used when the file itself carries none
    (plain text, or JSON missing the field) — callers typically pass the
    filename stem.
    """
    data = stream.read()
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise LexiconError(f"lexicon file is not valid UTF-8: {exc.reason}") from exc

    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LexiconError(f"malformed lexicon JSON: {exc}") from exc
        if not isinstance(obj.get("terms"), list):
            raise LexiconError("lexicon JSON must contain a 'terms' array")
        policy = _policy_from_json(obj.get("policy") or {})
        terms = [t for t in obj["terms"] if isinstance(t, str)]
        if len(terms) != len(obj["terms"]):
            raise LexiconError("lexicon terms must all be strings")
        return make_lexicon(
            name=obj.get("name") or name or "lexicon",
            terms=terms,
            policy=policy,
            citation=obj.get("citation") or "",
        )

    lines = [ln.strip() for ln in text.splitlines()]
    terms = [ln for ln in lines if ln and not ln.startswith("#")]
    return make_lexicon(name=name or "lexicon", terms=terms)


def save_lexicon(lexicon: Lexicon, stream: IO[str]) -> None:
    json.dump(
        {
            "name": lexicon.name,
            "citation": lexicon.citation,
            "policy": {
                "case_insensitive": lexicon.policy.case_insensitive,
                "word_boundary": lexicon.policy.word_boundary,
                "allow_multiword": lexicon.policy.allow_multiword,
            },
            "terms": list(lexicon.terms),
        },
        stream,
        ensure_ascii=False,
        indent=2,
    )
    stream.write("\n")


@dataclass(frozen=True)
class MatchResult:
    """Per-post outcome of lexicon matching."""

    post_id: str
    matched_terms: frozenset[str] = field(default_factory=frozenset)

    @property
    def label(self) -> Label:
        return Label.OPIOID_RELATED if self.matched_terms else Label.NOT_OPIOID_RELATED


def match(post: Post, lexicon: Lexicon) -> MatchResult:
    """All lexicon terms occurring in the post under the lexicon's policy."""
    return MatchResult(post_id=post.id, matched_terms=frozenset(lexicon.matcher.find_terms(post.text)))


def classify_corpus(corpus: Corpus, lexicon: Lexicon) -> PredictionSet:
    """One binary prediction per post, predictor identity = lexicon name."""
    result = PredictionSet(predictor_id=lexicon.name)
    matcher = lexicon.matcher
    for post in corpus:
        label = Label.OPIOID_RELATED if matcher.search(post.text) else Label.NOT_OPIOID_RELATED
        result.add(Prediction(post_id=post.id, label=label))
    return result


def example_lexicon(which: str) -> Lexicon:
    """Load a bundled demo lexicon: "example-broad" or "example-strict".

    These are illustrative only, not the published research lexicons.
    """
    filename = {
        "example-broad": "example_broad.json",
        "example-strict": "example_strict.json",
    }.get(which)
    if filename is None:
        raise LexiconError(f"no bundled lexicon named {which!r}")
    payload = resources.files("slangtriage.data").joinpath(filename).read_bytes()
    return load_lexicon(io.BytesIO(payload), name=which)
