"""Completion providers: a protocol, an HTTP client, and a scriptable mock.

The pipeline only sees ``complete(messages, temperature) -> str`` plus the
two error types below, so everything downstream of a provider is testable
offline with the mock.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Protocol

import httpx

log = logging.getLogger(__name__)

Message = dict[str, str]  # {"role": "system"|"user"|"assistant", "content": str}


class ProviderTransportError(Exception):
    """Network/server trouble; the request may be retried."""


class ContentPolicyRefusal(Exception):
    """The provider declined the request on safety-policy grounds."""


class CompletionProvider(Protocol):
    provider_id: str

    def complete(self, messages: list[Message], temperature: float) -> str: ...


@dataclass(frozen=True)
class ProviderConfig:
    """How to reach a completion endpoint.

    ``credentials_env`` names an environment variable; the secret itself is
    never stored or serialized.
    """

    kind: str = "mock"
    endpoint: str = ""
    model: str = ""
    credentials_env: str = ""
    max_concurrent: int = 4
    requests_per_minute: int = 60
    max_attempts: int = 3
    backoff_s: float = 1.0
    # mock-only scripting knobs, ignored by real providers
    keyword_labels: dict[str, str] = field(default_factory=dict)
    default_answer: str = "no"

    def __post_init__(self):
        if self.max_concurrent < 1 or self.requests_per_minute < 1:
            raise ValueError("concurrency and rate caps must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def resolve_credentials(self) -> str:
        if not self.credentials_env:
            raise RuntimeError("provider config does not name a credentials variable")
        secret = os.environ.get(self.credentials_env)
        if not secret:
            raise RuntimeError(f"environment variable {self.credentials_env} is not set")
        return secret

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "model": self.model,
            "credentials_env": self.credentials_env,
            "max_concurrent": self.max_concurrent,
            "requests_per_minute": self.requests_per_minute,
            "max_attempts": self.max_attempts,
            "backoff_s": self.backoff_s,
        }


def provider_from_config(config: ProviderConfig) -> "CompletionProvider":
    if config.kind == "mock":
        return MockProvider(
            keyword_labels=config.keyword_labels,
            default_answer=config.default_answer,
            provider_id=config.model or "mock",
        )
    if config.kind == "http":
        return HttpProvider(config)
    raise ValueError(f"unknown provider kind {config.kind!r}")


class HttpProvider:
    """Chat-completions client for OpenAI-compatible endpoints."""

    _REFUSAL_MARKERS = ("content_policy", "content_filter", "safety")

    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        self.config = config
        self.provider_id = config.model or config.endpoint
        self._token = config.resolve_credentials()
        self._client = client or httpx.Client(timeout=120.0)

    def complete(self, messages: list[Message], temperature: float) -> str:
        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": temperature,
        }
        try:
            resp = self._client.post(
                self.config.endpoint,
                json=payload,
                headers={"Authorization": f"Bearer {self._token}"},
            )
        except httpx.HTTPError as exc:
            raise ProviderTransportError(str(exc)) from exc
        if resp.status_code in (429,) or resp.status_code >= 500:
            raise ProviderTransportError(f"HTTP {resp.status_code}")
        body = resp.json() if resp.content else {}
        if resp.status_code == 400:
            detail = str(body.get("error", {})).lower()
            if any(marker in detail for marker in self._REFUSAL_MARKERS):
                raise ContentPolicyRefusal(detail)
            raise ProviderTransportError(f"HTTP 400: {detail[:200]}")
        resp.raise_for_status()
        choice = (body.get("choices") or [{}])[0]
        if choice.get("finish_reason") == "content_filter":
            raise ContentPolicyRefusal("finish_reason=content_filter")
        content = (choice.get("message") or {}).get("content")
        if not isinstance(content, str):
            raise ProviderTransportError("response missing message content")
        return content


_TAG_RE = re.compile(r"<tweet>(.*?)</tweet>", re.DOTALL)


@dataclass
class _MockState:
    malformed_answers_left: int = 0
    transport_failures_left: int = 0


class MockProvider:
    """Deterministic provider for offline testing.

    Answer policy: for each post in the batch (extracted from the most
    recent delimited user turn), the first matching keyword decides the
    answer word; otherwise ``default_answer``. Failure injection:

    * ``refuse_containing``: a batch containing any of these substrings
      raises ContentPolicyRefusal.
    * ``inject_malformed_answers(n)``: the next n answer-phase replies are
      garbage, to exercise parse-retry handling.
    * ``inject_transport_failures(n)``: the next n calls raise
      ProviderTransportError.
    * ``script``: canned replies consumed first, bypassing all rules.

    Every call is appended to ``request_log`` as (timestamp, phase,
    batch_size); the clock is injectable for rate-limit tests.
    """

    def __init__(
        self,
        keyword_labels: dict[str, str] | None = None,
        default_answer: str = "no",
        refuse_containing: tuple[str, ...] = (),
        provider_id: str = "mock",
        time_fn: Callable[[], float] = time.monotonic,
    ):
        self.keyword_labels = dict(keyword_labels or {})
        self.default_answer = default_answer
        self.refuse_containing = tuple(refuse_containing)
        self.provider_id = provider_id
        self.time_fn = time_fn
        self.script: deque[str] = deque()
        self.request_log: list[tuple[float, str, int]] = []
        self._state = _MockState()
        self._lock = threading.Lock()

    def inject_malformed_answers(self, n: int) -> None:
        with self._lock:
            self._state.malformed_answers_left += n

    def inject_transport_failures(self, n: int) -> None:
        with self._lock:
            self._state.transport_failures_left += n

    def answer_for(self, text: str) -> str:
        folded = text.lower()
        for keyword, answer in self.keyword_labels.items():
            if keyword.lower() in folded:
                return answer
        return self.default_answer

    def _batch_texts(self, messages: list[Message]) -> list[str]:
        for msg in reversed(messages):
            if msg["role"] == "user":
                # the instruction header shows a bare <tweet></tweet> pair;
                # post text is never empty, so drop empty captures
                found = [t for t in _TAG_RE.findall(msg["content"]) if t]
                if found:
                    return found
        return []

    def complete(self, messages: list[Message], temperature: float) -> str:
        last_user = next((m for m in reversed(messages) if m["role"] == "user"), None)
        if last_user is None:
            raise ValueError("no user message")
        batch = self._batch_texts(messages)
        answer_phase = "<tweet>" not in last_user["content"]
        with self._lock:
            self.request_log.append((self.time_fn(), "answer" if answer_phase else "reason", len(batch)))
            if self._state.transport_failures_left > 0:
                self._state.transport_failures_left -= 1
                raise ProviderTransportError("injected transport failure")
            if self.script:
                return self.script.popleft()
            for needle in self.refuse_containing:
                if any(needle.lower() in text.lower() for text in batch):
                    raise ContentPolicyRefusal(f"refusing batch containing {needle!r}")
            if answer_phase:
                if self._state.malformed_answers_left > 0:
                    self._state.malformed_answers_left -= 1
                    return "I would rather describe each tweet at length."
                return ", ".join(self.answer_for(text) for text in batch)
        lines = [f"Tweet {i + 1}: considering the phrasing and context." for i in range(len(batch))]
        return "Reasoning step-by-step.\n" + "\n".join(lines)
