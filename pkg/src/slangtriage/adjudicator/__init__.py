"""Two-turn LLM adjudication: prompt rendering, providers, batch pipeline."""

from slangtriage.adjudicator.pipeline import (
    DEFAULT_BATCH_SIZE,
    RateLimiter,
    adjudicate,
    resolve_errors,
)
from slangtriage.adjudicator.prompts import (
    DEFAULT_CONTEXT,
    DEFAULT_SCHEME,
    DEFAULT_TURN1_TEMPLATE,
    DEFAULT_TURN2,
    AnswerParseError,
    PromptScheme,
    PromptTranscript,
    build_transcript_turn1,
    escape_delimiters,
    parse_answers,
)
from slangtriage.adjudicator.providers import (
    CompletionProvider,
    ContentPolicyRefusal,
    HttpProvider,
    MockProvider,
    ProviderConfig,
    ProviderTransportError,
    provider_from_config,
)

__all__ = [
    "DEFAULT_BATCH_SIZE",
    "DEFAULT_CONTEXT",
    "DEFAULT_SCHEME",
    "DEFAULT_TURN1_TEMPLATE",
    "DEFAULT_TURN2",
    "AnswerParseError",
    "CompletionProvider",
    "ContentPolicyRefusal",
    "HttpProvider",
    "MockProvider",
    "PromptScheme",
    "PromptTranscript",
    "ProviderConfig",
    "ProviderTransportError",
    "RateLimiter",
    "adjudicate",
    "build_transcript_turn1",
    "escape_delimiters",
    "parse_answers",
    "provider_from_config",
    "resolve_errors",
]
