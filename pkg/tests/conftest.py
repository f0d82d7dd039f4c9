import inspect
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slangtriage.corpus import Corpus, Post

# The acceptance tests each check one release criterion; print a stable
# one-line verdict per criterion at the end of every run, whatever the
# capture settings.
_acceptance_criteria: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        if "test_acceptance.py" in item.nodeid:
            doc = inspect.getdoc(item.function) or item.name
            _acceptance_criteria[item.nodeid] = doc.strip().splitlines()[0]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_criteria:
        return
    verdicts: dict[str, str] = {}
    for key, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(key, []):
            nodeid = getattr(report, "nodeid", None)
            if nodeid in _acceptance_criteria:
                if getattr(report, "when", "call") == "call" or verdict == "FAIL":
                    verdicts.setdefault(nodeid, verdict)
    if not verdicts:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid, name in _acceptance_criteria.items():
        if nodeid in verdicts:
            terminalreporter.write_line(f"{verdicts[nodeid]} {name}")


def make_posts(texts, prefix="p"):
    return [Post(id=f"{prefix}{i}", text=t) for i, t in enumerate(texts)]


def make_corpus(texts, prefix="p"):
    return Corpus(make_posts(texts, prefix))


@pytest.fixture
def rng():
    return random.Random(20240817)


FILLER_WORDS = (
    "the quick brown fox jumps over a lazy dog while rain keeps falling on "
    "quiet streets and someone hums an old tune about nothing in particular"
).split()


def random_text(rng, n_words=12, extra=()):
    words = [rng.choice(FILLER_WORDS) for _ in range(n_words)]
    for w in extra:
        words.insert(rng.randrange(len(words) + 1), w)
    return " ".join(words)
