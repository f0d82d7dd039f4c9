"""Emergent-slang simulation: swap ambiguous terms for fake ones.

The protocol tests whether a classifier recognizes topical posts from
context alone. Every boundary-delimited occurrence of each ambiguous term is
replaced by a fake term no lexicon or model has seen in this sense. A
default 8-entry mapping ships as configuration; it is illustrative, not a
published artifact.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import IO

from slangtriage.corpus import Corpus, Post, with_meta
from slangtriage.matching import DEFAULT_POLICY, MatchPolicy, MultiPatternMatcher, fold_case


@dataclass(frozen=True)
class SubstitutionMap:
    """Ambiguous term -> fake term, with the match policy for finding keys."""

    pairs: dict[str, str]
    policy: MatchPolicy = DEFAULT_POLICY

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("substitution map is empty")
        folded_keys = set()
        for key, value in self.pairs.items():
            if not key or not value:
                raise ValueError("substitution keys and values must be nonempty")
            folded_keys.add(fold_case(key))
        if len(folded_keys) != len(self.pairs):
            # replacement indexes by key position; fold-equal keys would skew it
            raise ValueError("substitution keys collide under case folding")
        values = [fold_case(v) for v in self.pairs.values()]
        if len(set(values)) != len(values):
            raise ValueError("substitution values must be pairwise distinct")
        collisions = folded_keys.intersection(values)
        if collisions:
            # a value that is also a key would cascade on a second pass
            raise ValueError(f"substitution values may not equal keys: {sorted(collisions)}")

    @cached_property
    def matcher(self) -> MultiPatternMatcher:
        return MultiPatternMatcher(list(self.pairs.keys()), self.policy)

    def inverted(self) -> "SubstitutionMap":
        return SubstitutionMap(pairs={v: k for k, v in self.pairs.items()}, policy=self.policy)

    def keys(self) -> list[str]:
        return list(self.pairs.keys())


def load_substitution_map(stream: IO[bytes]) -> SubstitutionMap:
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    obj = json.loads(data)
    pairs = obj.get("pairs")
    if not isinstance(pairs, dict):
        raise ValueError("substitution file must contain a 'pairs' object")
    policy_obj = obj.get("policy") or {}
    policy = MatchPolicy(
        case_insensitive=bool(policy_obj.get("case_insensitive", True)),
        word_boundary=bool(policy_obj.get("word_boundary", True)),
        allow_multiword=bool(policy_obj.get("allow_multiword", True)),
    )
    return SubstitutionMap(pairs={str(k): str(v) for k, v in pairs.items()}, policy=policy)


def default_substitution_map() -> SubstitutionMap:
    payload = resources.files("slangtriage.data").joinpath("default_substitutions.json").read_bytes()
    return load_substitution_map(io.BytesIO(payload))


def _select_nonoverlapping(spans):
    """Leftmost-longest: at equal starts prefer the longer span, drop spans
    overlapping an already chosen one."""
    chosen = []
    last_end = -1
    for span in sorted(spans, key=lambda s: (s.start, -(s.end - s.start))):
        if span.start >= last_end:
            chosen.append(span)
            last_end = span.end
    return chosen


def substitute(post: Post, subs: SubstitutionMap) -> Post:
    """Replace every occurrence of every key; count goes into post meta.

    Replacement text keeps the fake term's canonical casing from the map
    regardless of how the matched text was cased. Characters outside matched
    spans are untouched.
    """
    matcher = subs.matcher
    spans = _select_nonoverlapping(matcher.find_spans(post.text))
    if not spans:
        return with_meta(post, substitutions=0)
    values = list(subs.pairs.values())
    pieces = []
    cursor = 0
    for span in spans:
        pieces.append(post.text[cursor : span.start])
        pieces.append(values[span.term_index])
        cursor = span.end
    pieces.append(post.text[cursor:])
    return with_meta(
        Post(
            id=post.id,
            text="".join(pieces),
            created_at=post.created_at,
            source=post.source,
            meta=post.meta,
        ),
        substitutions=len(spans),
    )


def build_paired_dataset(
    opioid_posts: Corpus,
    non_opioid_posts: Corpus,
    subs: SubstitutionMap,
) -> tuple[Corpus, Corpus]:
    """Original and substituted corpora for the context-recognition test.

    Both input corpora must be nonempty and every post must contain at least
    one map key; the class goes into each post's meta so downstream gold
    labels can be derived without a separate file.
    """
    if not len(opioid_posts) or not len(non_opioid_posts):
        raise ValueError("both classes must be nonempty")
    matcher = subs.matcher
    tagged: list[Post] = []
    for corpus, cls in ((opioid_posts, "opioid"), (non_opioid_posts, "non-opioid")):
        for post in corpus:
            if not matcher.search(post.text):
                raise ValueError(f"post {post.id!r} contains no substitution key")
            tagged.append(with_meta(post, **{"class": cls}))

    original = Corpus(tagged, provenance=opioid_posts.provenance.derive("paired originals"))
    modified = Corpus(
        (substitute(p, subs) for p in tagged),
        provenance=opioid_posts.provenance.derive("paired with substituted terms"),
    )
    return original, modified
