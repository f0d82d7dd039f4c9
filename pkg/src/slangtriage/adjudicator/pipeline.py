"""Batch adjudication: drives the two-turn scheme over a corpus.

Error taxonomy, applied per batch:

* Parse trouble on turn 2: one re-ask on the same conversation, then one
  fresh full-transcript retry; if that still fails, every post in the batch
  gets ApiError.
* Content-policy refusal: a multi-post batch is split into singletons and
  each retried alone, so one hot post cannot poison its batchmates; a
  refused singleton gets ContentRestrictionError.
* Transport failure: retried with backoff up to max_attempts, then ApiError.

Per-post failures never abort the run, and a rerun with a partial result
set only issues requests for still-unlabeled posts.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Callable, Sequence

from slangtriage.adjudicator.prompts import (
    DEFAULT_SCHEME,
    AnswerParseError,
    PromptScheme,
    PromptTranscript,
    build_transcript_turn1,
    parse_answers,
)
from slangtriage.adjudicator.providers import (
    CompletionProvider,
    ContentPolicyRefusal,
    Message,
    MockProvider,
    ProviderConfig,
    ProviderTransportError,
    provider_from_config,
)
from slangtriage.corpus import Corpus, Post
from slangtriage.labels import Label, Prediction, PredictionSet

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 10


class RateLimiter:
    """Sliding-window limiter: at most ``per_minute`` acquisitions in any
    60-second window. Thread-safe; clock and sleep are injectable so tests
    run on a fake clock."""

    def __init__(
        self,
        per_minute: int,
        time_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        if per_minute < 1:
            raise ValueError("per_minute must be >= 1")
        self.per_minute = per_minute
        self.time_fn = time_fn
        self.sleep_fn = sleep_fn
        self._sent: list[float] = []
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.time_fn()
                cutoff = now - 60.0
                self._sent = [t for t in self._sent if t > cutoff]
                if len(self._sent) < self.per_minute:
                    self._sent.append(now)
                    return
                wait = self._sent[0] - cutoff
            self.sleep_fn(max(wait, 1e-3))


@dataclass
class _BatchOutcome:
    labels: dict[str, Label]
    transcripts: list[PromptTranscript]


class _Runner:
    def __init__(
        self,
        provider: CompletionProvider,
        scheme: PromptScheme,
        limiter: RateLimiter,
        max_attempts: int,
        backoff_s: float,
        sleep_fn: Callable[[float], None],
        time_fn: Callable[[], float],
    ):
        self.provider = provider
        self.scheme = scheme
        self.limiter = limiter
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.sleep_fn = sleep_fn
        self.time_fn = time_fn

    def _call(self, messages: list[Message]) -> str:
        """One provider call behind the rate limiter, with transport retries."""
        attempt = 0
        while True:
            attempt += 1
            self.limiter.acquire()
            try:
                return self.provider.complete(messages, self.scheme.temperature)
            except ProviderTransportError:
                if attempt >= self.max_attempts:
                    raise
                self.sleep_fn(self.backoff_s * (2 ** (attempt - 1)))

    def _converse(self, posts: Sequence[Post]) -> tuple[list[Label], PromptTranscript]:
        """Run both turns once, with one in-conversation turn-2 re-ask."""
        turn1 = build_transcript_turn1(list(posts), self.scheme)
        messages: list[Message] = [
            {"role": "system", "content": self.scheme.context},
            {"role": "user", "content": turn1},
        ]
        started = self.time_fn()
        reasoning = self._call(messages)
        messages.append({"role": "assistant", "content": reasoning})
        messages.append({"role": "user", "content": self.scheme.turn2})
        answer = self._call(messages)
        retries = 0
        try:
            labels = parse_answers(answer, len(posts), self.scheme.answer_vocabulary)
        except AnswerParseError:
            retries = 1
            messages.append({"role": "assistant", "content": answer})
            messages.append({"role": "user", "content": self.scheme.turn2})
            answer = self._call(messages)
            labels = parse_answers(answer, len(posts), self.scheme.answer_vocabulary)
        transcript = PromptTranscript(
            batch=[p.id for p in posts],
            rendered_turn1=turn1,
            reasoning_reply=reasoning,
            rendered_turn2=self.scheme.turn2,
            answer_reply=answer,
            provider_id=self.provider.provider_id,
            started_at=started,
            elapsed_s=self.time_fn() - started,
            chars_sent=sum(len(m["content"]) for m in messages if m["role"] != "assistant"),
            chars_received=len(reasoning) + len(answer),
            retries=retries,
        )
        return labels, transcript

    def run_batch(self, posts: Sequence[Post]) -> _BatchOutcome:
        try:
            try:
                labels, transcript = self._converse(posts)
            except AnswerParseError:
                # fresh conversation, one last chance before ApiError
                labels, transcript = self._converse(posts)
                transcript.retries += 2
        except ContentPolicyRefusal as exc:
            if len(posts) > 1:
                merged = _BatchOutcome(labels={}, transcripts=[])
                for post in posts:
                    sub = self.run_batch([post])
                    merged.labels.update(sub.labels)
                    merged.transcripts.extend(sub.transcripts)
                return merged
            log.info("content-policy refusal for post %s: %s", posts[0].id, exc)
            return _BatchOutcome(
                labels={posts[0].id: Label.CONTENT_RESTRICTION_ERROR},
                transcripts=[self._failure_transcript(posts, "content-restriction")],
            )
        except (AnswerParseError, ProviderTransportError) as exc:
            log.warning("batch of %d failed permanently: %s", len(posts), exc)
            return _BatchOutcome(
                labels={p.id: Label.API_ERROR for p in posts},
                transcripts=[self._failure_transcript(posts, "api-error")],
            )
        return _BatchOutcome(labels=dict(zip((p.id for p in posts), labels)), transcripts=[transcript])

    def _failure_transcript(self, posts: Sequence[Post], outcome: str) -> PromptTranscript:
        return PromptTranscript(
            batch=[p.id for p in posts],
            rendered_turn1=build_transcript_turn1(list(posts), self.scheme),
            reasoning_reply="",
            rendered_turn2=self.scheme.turn2,
            answer_reply="",
            provider_id=self.provider.provider_id,
            started_at=self.time_fn(),
            outcome=outcome,
        )


def adjudicate(
    corpus: Corpus,
    provider: CompletionProvider | ProviderConfig,
    scheme: PromptScheme = DEFAULT_SCHEME,
    batch_size: int = DEFAULT_BATCH_SIZE,
    resume: PredictionSet | None = None,
    transcript_log: IO[str] | None = None,
    max_concurrent: int | None = None,
    requests_per_minute: int | None = None,
    max_attempts: int | None = None,
    backoff_s: float | None = None,
    time_fn: Callable[[], float] = time.monotonic,
    sleep_fn: Callable[[float], None] = time.sleep,
) -> PredictionSet:
    """Label every post in the corpus; returns a complete PredictionSet.

    ``provider`` may be a live CompletionProvider or a ProviderConfig (which
    also supplies concurrency/rate/retry settings unless overridden).
    ``resume`` carries labels from an earlier partial run; those posts are
    not re-requested. Transcripts are appended to ``transcript_log`` as
    JSONL when given.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    config: ProviderConfig | None = None
    if isinstance(provider, ProviderConfig):
        config = provider
        provider = provider_from_config(config)
        if config.kind == "http":
            config.resolve_credentials()  # fail at startup, not mid-run

    limiter = RateLimiter(
        requests_per_minute
        if requests_per_minute is not None
        else (config.requests_per_minute if config else 60),
        time_fn=time_fn,
        sleep_fn=sleep_fn,
    )
    runner = _Runner(
        provider=provider,
        scheme=scheme,
        limiter=limiter,
        max_attempts=max_attempts if max_attempts is not None else (config.max_attempts if config else 3),
        backoff_s=backoff_s if backoff_s is not None else (config.backoff_s if config else 1.0),
        sleep_fn=sleep_fn,
        time_fn=time_fn,
    )
    workers = max_concurrent if max_concurrent is not None else (config.max_concurrent if config else 4)

    result = PredictionSet(predictor_id=provider.provider_id)
    if resume is not None:
        for prediction in resume:
            if prediction.post_id in corpus:
                result.add(prediction)

    pending = [post for post in corpus if post.id not in result]
    batches = [pending[i : i + batch_size] for i in range(0, len(pending), batch_size)]

    log_lock = threading.Lock()
    transcript_count = 0

    def persist(transcripts: list[PromptTranscript]) -> list[int]:
        nonlocal transcript_count
        refs = []
        with log_lock:
            for t in transcripts:
                if transcript_log is not None:
                    transcript_log.write(json.dumps(t.to_record(), ensure_ascii=False) + "\n")
                refs.append(transcript_count)
                transcript_count += 1
        return refs

    if batches:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            for outcome in pool.map(runner.run_batch, batches):
                refs = persist(outcome.transcripts)
                ref_by_post: dict[str, int] = {}
                for t, ref in zip(outcome.transcripts, refs):
                    for pid in t.batch:
                        ref_by_post[pid] = ref
                for post_id, label in outcome.labels.items():
                    result.add(
                        Prediction(
                            post_id=post_id,
                            label=label,
                            transcript_ref=str(ref_by_post.get(post_id, "")),
                        )
                    )

    missing = [p.id for p in corpus if p.id not in result]
    if missing:
        raise RuntimeError(f"adjudication left {len(missing)} posts unlabeled")
    return result


def resolve_errors(predictions: PredictionSet) -> PredictionSet:
    """Map error labels to not-opioid-related for scoring, keeping the
    original category in the shadow field so confusion matrices can still
    report error rows."""
    out = PredictionSet(predictor_id=predictions.predictor_id)
    for pred in predictions:
        if pred.label in (Label.CONTENT_RESTRICTION_ERROR, Label.API_ERROR):
            out.add(
                Prediction(
                    post_id=pred.post_id,
                    label=Label.NOT_OPIOID_RELATED,
                    shadow_label=pred.label,
                    transcript_ref=pred.transcript_ref,
                )
            )
        else:
            out.add(pred)
    return out
