"""slangtriage: find low-prevalence topical posts in large social-media corpora.

The toolkit combines four layers:

* corpus ingestion and term filtering (streaming JSONL/CSV),
* lexicon classification with a simultaneous multi-pattern matcher,
* a two-turn batched LLM adjudication pipeline with an offline mock provider,
* evaluation (confusion matrices, binarized and macro metrics, baselines,
  inter-annotator agreement) plus a manual-annotation service and console.
"""

__version__ = "0.1.0"

from slangtriage.labels import Label, Prediction, PredictionSet
from slangtriage.corpus import Corpus, Post, ingest, normalize, filter_by_term, sample
from slangtriage.matching import MatchPolicy, MultiPatternMatcher
from slangtriage.lexicon import Lexicon, MatchResult, load_lexicon, match, classify_corpus

__all__ = [
    "Label",
    "Prediction",
    "PredictionSet",
    "Corpus",
    "Post",
    "ingest",
    "normalize",
    "filter_by_term",
    "sample",
    "MatchPolicy",
    "MultiPatternMatcher",
    "Lexicon",
    "MatchResult",
    "load_lexicon",
    "match",
    "classify_corpus",
]
