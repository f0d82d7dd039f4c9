"""The two-turn prompt scheme and constrained-answer parsing.

Turn 1 presents a batch of posts inside <tweet>...</tweet> delimiters and
asks for step-by-step reasoning. Turn 2 asks for one comma-separated answer
word per post from a fixed vocabulary. The default scheme text is part of
the tested contract; change it only with a new PromptScheme value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from slangtriage.corpus import Post
from slangtriage.labels import Label

OPEN_TAG = "<tweet>"
CLOSE_TAG = "</tweet>"
# full-width angle brackets: visually close, but never parsed as delimiters
_ESCAPED_OPEN = "＜" + "tweet" + "＞"
_ESCAPED_CLOSE = "＜" + "/tweet" + "＞"

DEFAULT_CONTEXT = (
    "You are an AI assistant that helps people find information. You are "
    "particularly hip with online slang and know everything about how people "
    "talk on social media platforms like Facebook, Twitter, Reddit, and TikTok."
)

DEFAULT_TURN1_TEMPLATE = (
    "I am going to give you a series of tweets, delimited with the xml tags "
    "<tweet></tweet>. For each tweet, I want you to tell me if the tweet is "
    "directly referring to opioid use. Reason through your answers step-by-step."
    "\n\n{posts}"
)

DEFAULT_TURN2 = (
    "Based on your reasoning above, answer the question in one word by saying "
    "“yes”, “no”, or “unsure” once for each "
    "tweet, where “yes” means that the tweet refers to opioids. "
    "Separate your answers by commas. Only give this in your response; do not "
    "add other content."
)

_VOCAB_TO_LABEL = {
    0: Label.OPIOID_RELATED,
    1: Label.NOT_OPIOID_RELATED,
    2: Label.UNSURE,
}


class AnswerParseError(ValueError):
    """Constrained answer did not match the expected shape."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class PromptScheme:
    """Prompt text plus sampling configuration for one adjudication run."""

    context: str = DEFAULT_CONTEXT
    turn1_template: str = DEFAULT_TURN1_TEMPLATE
    turn2: str = DEFAULT_TURN2
    temperature: float = 0.0
    answer_vocabulary: tuple[str, str, str] = ("yes", "no", "unsure")

    def __post_init__(self):
        if self.turn1_template.count("{posts}") != 1:
            raise ValueError("turn1_template must contain the {posts} slot exactly once")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if len(self.answer_vocabulary) != 3:
            raise ValueError("answer vocabulary must have exactly 3 entries")


DEFAULT_SCHEME = PromptScheme()


def escape_delimiters(text: str) -> str:
    """Neutralize literal delimiter tags inside post text.

    A post that itself contains "<tweet>" would corrupt the batch structure
    (and invites prompt injection), so the angle brackets of any literal tag
    are swapped for their full-width lookalikes before rendering.
    """
    return text.replace(OPEN_TAG, _ESCAPED_OPEN).replace(CLOSE_TAG, _ESCAPED_CLOSE)


def build_transcript_turn1(posts: list[Post], scheme: PromptScheme = DEFAULT_SCHEME) -> str:
    """Render the first user turn for a batch, in batch order."""
    if not posts:
        raise ValueError("cannot render a prompt for an empty batch")
    blocks = "\n\n".join(f"{OPEN_TAG}{escape_delimiters(p.text)}{CLOSE_TAG}" for p in posts)
    return scheme.turn1_template.format(posts=blocks)


_STRIP_CHARS = " \t\r\n\"'“”‘’.!;:"


def parse_answers(
    reply: str,
    n: int,
    vocabulary: tuple[str, str, str] = DEFAULT_SCHEME.answer_vocabulary,
) -> list[Label]:
    """Parse the constrained turn-2 reply into exactly ``n`` labels.

    Tolerates casing, surrounding quotes, and terminal punctuation on each
    token. Anything else is a parse error, which the pipeline treats as a
    retry trigger rather than a verdict.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tokens = [tok for tok in reply.strip().strip(",").split(",")]
    cleaned = [tok.strip(_STRIP_CHARS).lower() for tok in tokens]
    cleaned = [tok for tok in cleaned if tok != ""]
    if len(cleaned) != n:
        raise AnswerParseError(f"expected {n} answers, got {len(cleaned)}: {reply!r}")
    vocab_index = {word.lower(): i for i, word in enumerate(vocabulary)}
    labels: list[Label] = []
    for i, tok in enumerate(cleaned):
        idx = vocab_index.get(tok)
        if idx is None:
            raise AnswerParseError(f"answer {i} not in vocabulary: {tok!r}", index=i)
        labels.append(_VOCAB_TO_LABEL[idx])
    return labels


@dataclass
class PromptTranscript:
    """Verbatim record of one two-turn conversation over a batch."""

    batch: list[str]
    rendered_turn1: str
    reasoning_reply: str
    rendered_turn2: str
    answer_reply: str
    provider_id: str
    started_at: float = 0.0
    elapsed_s: float = 0.0
    chars_sent: int = 0
    chars_received: int = 0
    retries: int = 0
    outcome: str = "ok"
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "batch": self.batch,
            "rendered_turn1": self.rendered_turn1,
            "reasoning_reply": self.reasoning_reply,
            "rendered_turn2": self.rendered_turn2,
            "answer_reply": self.answer_reply,
            "provider_id": self.provider_id,
            "started_at": self.started_at,
            "elapsed_s": self.elapsed_s,
            "chars_sent": self.chars_sent,
            "chars_received": self.chars_received,
            "retries": self.retries,
            "outcome": self.outcome,
            **({"extra": self.extra} if self.extra else {}),
        }
