"""Command-line interface for the triage pipeline.

Commands mirror the pipeline stages: ingest raw dumps, filter by term,
classify against a lexicon, adjudicate with a provider, substitute fake
slang, evaluate predictions, compute agreement, build annotation sessions,
and serve the labeling API.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from slangtriage.adjudicator import ProviderConfig, adjudicate
from slangtriage.annotation import SamplingPolicy, build_session, save_session
from slangtriage.corpus import Corpus, export_jsonl, ingest, iter_jsonl_posts, normalize, sample
from slangtriage.evaluator import agreement, evaluate, render_report
from slangtriage.labels import PredictionSet, parse_label, read_gold
from slangtriage.lexicon import example_lexicon, classify_corpus, load_lexicon
from slangtriage.matching import MatchPolicy, MultiPatternMatcher
from slangtriage.slang_sim import default_substitution_map, load_substitution_map, substitute


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config file with defaults (e.g. a provider block).")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for any sampling the command performs.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Output file (default: stdout).")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, seed: int, output: str | None):
    """Corpus triage toolkit: lexicon filtering, LLM adjudication, evaluation."""
    config = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    ctx.obj = {"config": config, "seed": seed, "output": output}


def _open_output(ctx: click.Context):
    path = ctx.obj.get("output")
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _write_out(ctx: click.Context, write_fn) -> None:
    stream, owned = _open_output(ctx)
    try:
        write_fn(stream)
    finally:
        if owned:
            stream.close()


def _load_corpus(path: str, format: str = "jsonl", source: str = "") -> Corpus:
    with open(path, "rb") as fh:
        return ingest(fh, format=format, source=source)


@main.command("ingest")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "format_", type=click.Choice(["jsonl", "csv"]), default="jsonl", show_default=True)
@click.option("--source", default="", help="Source tag stored on each post.")
@click.pass_context
def ingest_cmd(ctx: click.Context, input: str, format_: str, source: str):
    """Normalize and deduplicate a raw dump into corpus JSONL."""
    corpus = _load_corpus(input, format_, source)
    _write_out(ctx, lambda out: export_jsonl(corpus, out))
    click.echo(
        f"ingested {len(corpus)} posts ({corpus.provenance.warnings} records skipped or replaced)",
        err=True,
    )


@main.command("filter")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--term", required=True, help="Term that must occur in the post text.")
@click.option("--case-sensitive", is_flag=True, default=False)
@click.option("--no-word-boundary", is_flag=True, default=False, help="Match inside words too.")
@click.pass_context
def filter_cmd(ctx: click.Context, input: str, term: str, case_sensitive: bool, no_word_boundary: bool):
    """Stream a corpus file, keeping posts that contain TERM.

    Streams record-by-record (no dedup pass), so corpus size never hits
    memory; run `ingest` first if the dump may contain duplicate ids.
    """
    policy = MatchPolicy(case_insensitive=not case_sensitive, word_boundary=not no_word_boundary)
    matcher = MultiPatternMatcher([normalize(term)], policy)
    kept = 0
    skipped = 0

    def run(out):
        nonlocal kept, skipped
        with open(input, "rb") as fh:
            for post, warning in iter_jsonl_posts(fh):
                if post is None:
                    skipped += 1
                    continue
                if matcher.search(post.text):
                    kept += 1
                    out.write(json.dumps(post.to_record(), ensure_ascii=False) + "\n")

    _write_out(ctx, run)
    click.echo(f"kept {kept} posts ({skipped} invalid records skipped)", err=True)


@main.command("classify-lexicon")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--lexicon", "lexicon_ref", required=True, help="Lexicon file, or bundled name (example-broad, example-strict).")
@click.pass_context
def classify_lexicon_cmd(ctx: click.Context, input: str, lexicon_ref: str):
    """Binary predictions for every post: topical iff any lexicon term occurs."""
    if lexicon_ref in ("example-broad", "example-strict"):
        lexicon = example_lexicon(lexicon_ref)
    else:
        with open(lexicon_ref, "rb") as fh:
            lexicon = load_lexicon(fh, name=Path(lexicon_ref).stem)
    corpus = _load_corpus(input)
    predictions = classify_corpus(corpus, lexicon)
    _write_out(ctx, predictions.to_jsonl)
    click.echo(f"classified {len(predictions)} posts with lexicon {lexicon.name!r} ({len(lexicon)} terms)", err=True)


@main.command("adjudicate")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--provider-config", "provider_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON ProviderConfig; falls back to the 'provider' block of --config.")
@click.option("--batch-size", type=int, default=10, show_default=True)
@click.option("--resume", "resume_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Existing prediction JSONL; already-labeled posts are skipped.")
@click.option("--transcripts", "transcripts_path", type=click.Path(dir_okay=False), default=None, help="Append transcripts here as JSONL.")
@click.pass_context
def adjudicate_cmd(
    ctx: click.Context,
    input: str,
    provider_path: str | None,
    batch_size: int,
    resume_path: str | None,
    transcripts_path: str | None,
):
    """Label every post through the two-turn prompt pipeline."""
    if provider_path:
        with open(provider_path, "r", encoding="utf-8") as fh:
            provider_obj = json.load(fh)
    else:
        provider_obj = ctx.obj["config"].get("provider")
    if not provider_obj:
        raise click.UsageError("no provider configured; pass --provider-config or a config file with a 'provider' block")
    config = ProviderConfig(**provider_obj)

    corpus = _load_corpus(input)
    resume = None
    if resume_path:
        with open(resume_path, "r", encoding="utf-8") as fh:
            resume = PredictionSet.from_jsonl(fh)

    transcript_stream = open(transcripts_path, "a", encoding="utf-8") if transcripts_path else None
    try:
        predictions = adjudicate(
            corpus,
            config,
            batch_size=batch_size,
            resume=resume,
            transcript_log=transcript_stream,
        )
    finally:
        if transcript_stream:
            transcript_stream.close()
    _write_out(ctx, predictions.to_jsonl)
    counts: dict[str, int] = {}
    for label in predictions.labels().values():
        counts[label.value] = counts.get(label.value, 0) + 1
    click.echo(f"adjudicated {len(predictions)} posts: {json.dumps(counts, sort_keys=True)}", err=True)


@main.command("substitute")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--map", "map_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Substitution map JSON; bundled default otherwise.")
@click.pass_context
def substitute_cmd(ctx: click.Context, input: str, map_path: str | None):
    """Replace ambiguous slang terms with fake ones (emergent-slang protocol)."""
    if map_path:
        with open(map_path, "rb") as fh:
            subs = load_substitution_map(fh)
    else:
        subs = default_substitution_map()
    corpus = _load_corpus(input)
    replaced = 0

    def run(out):
        nonlocal replaced
        for post in corpus:
            modified = substitute(post, subs)
            replaced += modified.meta.get("substitutions", 0)
            out.write(json.dumps(modified.to_record(), ensure_ascii=False) + "\n")

    _write_out(ctx, run)
    click.echo(f"substituted {replaced} occurrences across {len(corpus)} posts", err=True)


@main.command("evaluate")
@click.option("--predictions", "predictions_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--gold", "gold_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--format", "format_", type=click.Choice(["json", "text"]), default="text", show_default=True)
@click.pass_context
def evaluate_cmd(ctx: click.Context, predictions_path: str, gold_path: str, format_: str):
    """Confusion matrix, binarized and macro metrics, and baselines."""
    with open(predictions_path, "r", encoding="utf-8") as fh:
        predictions = PredictionSet.from_jsonl(fh)
    with open(gold_path, "r", encoding="utf-8", newline="") as fh:
        gold = read_gold(fh)
    report = evaluate(predictions, gold)
    body = json.dumps(report, indent=2) if format_ == "json" else render_report(report)
    _write_out(ctx, lambda out: out.write(body + "\n"))


@main.command("agreement")
@click.argument("file_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("file_b", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def agreement_cmd(ctx: click.Context, file_a: str, file_b: str):
    """Agreement statistics between two gold CSV files (aligned on shared ids)."""
    with open(file_a, "r", encoding="utf-8", newline="") as fh:
        gold_a = read_gold(fh)
    with open(file_b, "r", encoding="utf-8", newline="") as fh:
        gold_b = read_gold(fh)
    shared = [pid for pid in gold_a if pid in gold_b]
    if len(shared) < 2:
        raise click.UsageError(f"only {len(shared)} shared ids; need at least 2")
    report = agreement([gold_a[p] for p in shared], [gold_b[p] for p in shared])
    body = json.dumps(report.as_dict(), indent=2)
    _write_out(ctx, lambda out: out.write(body + "\n"))
    click.echo(f"compared {len(shared)} shared items", err=True)


@main.command("sample-session")
@click.option("--predictions", "predictions_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--fraction", type=float, default=None, help="Fraction of negatives to sample.")
@click.option("--count", type=int, default=None, help="Exact number of negatives to sample.")
@click.option("--take-all", "take_all", multiple=True, help="Label whose posts are all included (repeatable); default: positives, unsure, and both error categories.")
@click.option("--store", "store_dir", type=click.Path(file_okay=False), required=True)
@click.pass_context
def sample_session_cmd(
    ctx: click.Context,
    predictions_path: str,
    corpus_path: str,
    fraction: float | None,
    count: int | None,
    take_all: tuple[str, ...],
    store_dir: str,
):
    """Build a stratified annotation session and persist it to the store."""
    with open(predictions_path, "r", encoding="utf-8") as fh:
        predictions = PredictionSet.from_jsonl(fh)
    corpus = _load_corpus(corpus_path)
    kwargs: dict = {"seed": ctx.obj["seed"]}
    if take_all:
        kwargs["take_all_of"] = frozenset(parse_label(v) for v in take_all)
    if fraction is not None:
        kwargs["negative_fraction"] = fraction
    if count is not None:
        kwargs["negative_count"] = count
    try:
        policy = SamplingPolicy(**kwargs)
        session = build_session(predictions, corpus, policy)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    Path(store_dir).mkdir(parents=True, exist_ok=True)
    save_session(session, str(Path(store_dir) / f"{session.session_id}.json"))
    click.echo(f"session {session.session_id} with {len(session.items)} items", err=True)
    click.echo(session.session_id)


@main.command("serve")
@click.option("--store", "store_dir", type=click.Path(file_okay=False), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None, help="Directory with the built labeling UI.")
def serve_cmd(store_dir: str, host: str, port: int, static_dir: str | None):
    """Run the annotation HTTP service."""
    import uvicorn

    from slangtriage.service import create_app

    uvicorn.run(create_app(store_dir, static_dir=static_dir), host=host, port=port)


@main.command("sample")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--n", type=int, required=True)
@click.pass_context
def sample_cmd(ctx: click.Context, input: str, n: int):
    """Uniform random subset of a corpus (seeded with the global --seed)."""
    corpus = _load_corpus(input)
    try:
        picked = sample(corpus, n, ctx.obj["seed"])
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _write_out(ctx, lambda out: export_jsonl(picked, out))
    click.echo(f"sampled {len(picked)} of {len(corpus)} posts", err=True)


if __name__ == "__main__":
    main()
