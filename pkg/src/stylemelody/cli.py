"""Command-line interface.

Every subcommand is a thin adapter over the library: ingest, filter,
split, train-embeddings, train, evaluate, sweep, generate, serve, plus the
toy-corpus helper and the three-variant case-study recipe. Progress and
results go to stdout; machine-readable status records (one JSON object per
line) go to stderr.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click

from .corpus import (
    build_vocabs,
    filter_samples,
    ingest_corpus,
    make_toy_corpus,
    save_corpus,
    save_vocab_manifest,
    split_samples,
)
from .embedding import SkipGramEmbedder
from .evaluation import (
    EvalReport,
    attribute_histograms,
    compute_metrics,
    controllability_sweep,
    emit_report,
    self_bleu,
    self_bleu_variants,
    style_mse,
)
from .midi import write_midi
from .pipeline import MelodyComposer, pianoroll_dict
from .style import FEATURE_KEYS


def emit_status(event: str, **fields) -> None:
    print(json.dumps({"event": event, **fields}, sort_keys=True), file=sys.stderr, flush=True)


def _load_samples(path: str, fmt: str = "jsonl"):
    try:
        result = ingest_corpus(path, format=fmt)
    except FileNotFoundError:
        raise click.ClickException(f"corpus not found: {path}")
    for index, reason in result.skipped:
        emit_status("skipped_record", index=index, reason=reason)
    return result.samples


def _parse_controls(pairs) -> dict[str, float]:
    controls = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.ClickException(f"control must look like pitch.avg=0.7, got {pair!r}")
        key, _, raw = pair.partition("=")
        if key not in FEATURE_KEYS:
            raise click.ClickException(f"unknown control {key!r}; options: {', '.join(FEATURE_KEYS)}")
        controls[key] = float(raw)
    return controls


@click.group()
def main():
    """Style-controllable lyrics-to-melody toolkit."""


@main.command()
@click.argument("corpus", type=click.Path())
@click.option("--format", "fmt", default="jsonl", show_default=True, type=click.Choice(["jsonl", "midi"]))
@click.option("--out", required=True, type=click.Path(), help="Normalized JSONL output.")
def ingest(corpus, fmt, out):
    """Parse a corpus file and write normalized records."""
    samples = _load_samples(corpus, fmt)
    save_corpus(samples, out)
    emit_status("ingested", samples=len(samples), out=out)
    click.echo(f"{len(samples)} samples -> {out}")


@main.command("filter")
@click.argument("corpus", type=click.Path())
@click.option("--out", required=True, type=click.Path())
def filter_cmd(corpus, out):
    """Keep only melodies within the singability bounds."""
    samples = _load_samples(corpus)
    kept = filter_samples(samples)
    save_corpus(kept, out)
    emit_status("filtered", before=len(samples), after=len(kept))
    click.echo(f"kept {len(kept)}/{len(samples)} samples -> {out}")


@main.command()
@click.argument("corpus", type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--ratios", default="8,1,1", show_default=True)
@click.option("--seed", default=0, show_default=True)
def split(corpus, out_dir, ratios, seed):
    """Split a corpus into train/valid/test files."""
    samples = _load_samples(corpus)
    parts = tuple(int(r) for r in ratios.split(","))
    ds = split_samples(samples, parts, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, subset in (("train", ds.train), ("valid", ds.valid), ("test", ds.test)):
        save_corpus(subset, out / f"{name}.jsonl")
    emit_status("split", sizes=list(ds.sizes), seed=seed)
    click.echo(f"sizes {ds.sizes} -> {out}")


@main.command("train-embeddings")
@click.argument("corpus", type=click.Path())
@click.option("--level", type=click.Choice(["word", "syllable"]), required=True)
@click.option("--dim", default=50, show_default=True)
@click.option("--window", default=3, show_default=True)
@click.option("--negatives", default=5, show_default=True)
@click.option("--epochs", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def train_embeddings(corpus, level, dim, window, negatives, epochs, seed, out):
    """Train a skip-gram table on the corpus token streams."""
    samples = _load_samples(corpus)
    streams = [
        s.lyrics.words() if level == "word" else list(s.lyrics.syllables) for s in samples
    ]
    embedder = SkipGramEmbedder(
        dim=dim, window=window, negatives=negatives, epochs=epochs, seed=seed
    ).fit(streams)
    embedder.table_.save(out)
    emit_status("embeddings_trained", level=level, vocab=len(embedder.table_), out=out)
    click.echo(f"{len(embedder.table_)} vectors (dim {dim}) -> {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(), help="JSON file of composer options.")
@click.option("--corpus", required=True, type=click.Path())
@click.option("--valid", type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--set", "overrides", multiple=True, help="Override a config key, e.g. --set seed=7.")
def train(config_path, corpus, valid, out_dir, overrides):
    """Run the full training schedule and save checkpoints."""
    options = {}
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise click.ClickException(f"config not found: {config_path}")
        options.update(json.loads(path.read_text(encoding="utf-8")))
    for pair in overrides:
        key, _, raw = pair.partition("=")
        try:
            options[key] = json.loads(raw)
        except json.JSONDecodeError:
            options[key] = raw
    samples = _load_samples(corpus)
    valid_samples = _load_samples(valid) if valid else None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    composer = MelodyComposer(run_dir=str(out), **options)
    emit_status("train_started", samples=len(samples), options=options)
    composer.fit(samples, valid_samples)
    final = composer.save(out / "final.ckpt")
    save_vocab_manifest(composer.vocabs_, out / "vocabs.json")
    for record in composer.history_:
        emit_status("epoch", **{k: v for k, v in record.items() if k != "validation"})
    click.echo(f"trained {len(composer.history_)} epochs -> {final}")


@main.command()
@click.option("--corpus", type=click.Path(), help="Pre-generated corpus to score.")
@click.option("--checkpoint", type=click.Path(), help="Generate from the reference lyrics first.")
@click.option("--reference", type=click.Path(), help="Paired reference corpus.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def evaluate(corpus, checkpoint, reference, seed, out_dir):
    """Compute corpus metrics, style MSEs, and Self-BLEU."""
    if corpus is None and checkpoint is None:
        raise click.ClickException("need --corpus or --checkpoint")
    reference_samples = _load_samples(reference) if reference else None
    if checkpoint:
        if reference_samples is None:
            raise click.ClickException("--checkpoint needs --reference for lyrics")
        composer = MelodyComposer.load(checkpoint)
        melodies = [
            composer.generate(s.lyrics, seed=seed + i).melody
            for i, s in enumerate(reference_samples)
        ]
    else:
        melodies = [s.melody for s in _load_samples(corpus)]
    metadata = {"seed": seed, "corpus": corpus or reference}
    if checkpoint:
        metadata["checkpoint"] = checkpoint
        metadata["checkpoint_hash"] = hashlib.sha256(Path(checkpoint).read_bytes()).hexdigest()[:16]
    report = EvalReport(metrics=compute_metrics(melodies), metadata=metadata)
    if reference_samples is not None and len(reference_samples) == len(melodies):
        report.style_mse = style_mse(melodies, [s.melody for s in reference_samples])
    report.self_bleu = self_bleu([m.pitches().tolist() for m in melodies])
    report.self_bleu_variants = self_bleu_variants(melodies)
    report.histograms = attribute_histograms(melodies)
    paths = emit_report(report, out_dir)
    emit_status("evaluated", files=[str(p) for p in paths])
    for key, value in report.metrics.as_dict().items():
        click.echo(f"{key}: {value:.4f}")


@main.command()
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--lyrics", "lyrics_path", required=True, type=click.Path(), help="Corpus supplying test lyrics.")
@click.option("--feature", required=True, type=click.Choice(FEATURE_KEYS))
@click.option("--candidates", default="0.2,0.4,0.6,0.8", show_default=True)
@click.option("--fixed", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def sweep(checkpoint, lyrics_path, feature, candidates, fixed, seed, out_dir):
    """Controllability sweep over one normalized style control."""
    composer = MelodyComposer.load(checkpoint)
    samples = _load_samples(lyrics_path)
    cand = tuple(float(c) for c in candidates.split(","))
    result = controllability_sweep(
        lambda lyr, controls, s: composer.generate(lyr, controls=controls, seed=s).melody,
        [s.lyrics for s in samples],
        feature,
        candidates=cand,
        fixed_value=fixed,
        seed=seed,
    )
    paths = emit_report(result, out_dir)
    emit_status("sweep", feature=feature, spearman=result.spearman, files=[str(p) for p in paths])
    click.echo(f"spearman({feature}) = {result.spearman}")


@main.command()
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--lyrics", "lyrics_text", help="Raw lyric text.")
@click.option("--lyrics-file", type=click.Path(), help="Text file of lyrics.")
@click.option("--control", "controls", multiple=True, help="pitch.avg=0.9 style overrides.")
@click.option("--seed", type=int, default=None)
@click.option("--tempo", default=120.0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def generate(checkpoint, lyrics_text, lyrics_file, controls, seed, tempo, out):
    """Generate one melody and write it as MIDI."""
    if not lyrics_text and not lyrics_file:
        raise click.ClickException("need --lyrics or --lyrics-file")
    if lyrics_file:
        lyrics_text = Path(lyrics_file).read_text(encoding="utf-8")
    composer = MelodyComposer.load(checkpoint)
    result = composer.generate(lyrics_text, controls=_parse_controls(controls) or None, seed=seed)
    write_midi(result.melody, out, tempo_bpm=tempo)
    emit_status("generated", seed=result.seed, notes=len(result.melody), out=out)
    click.echo(json.dumps(
        {"seed": result.seed, "realized_style": result.realized_style.as_dict()},
        sort_keys=True, indent=2,
    ))


# qualitative demo: same lyrics, three style recipes (bright high melody,
# high flat melody, high flat melody with busy rhythm)
CASE_STUDY_RECIPES = {
    "high_wide_pitch": {
        "pitch.range": 0.7, "pitch.avg": 0.7, "pitch.var": 0.8,
        "duration.range": 0.1, "duration.avg": 0.1, "duration.var": 0.1,
        "rest.range": 0.1, "rest.avg": 0.1, "rest.var": 0.1,
    },
    "high_flat_pitch": {
        "pitch.range": 0.3, "pitch.avg": 0.9, "pitch.var": 0.1,
        "duration.range": 0.1, "duration.avg": 0.1, "duration.var": 0.1,
        "rest.range": 0.1, "rest.avg": 0.1, "rest.var": 0.1,
    },
    "high_flat_pitch_busy_rhythm": {
        "pitch.range": 0.3, "pitch.avg": 0.9, "pitch.var": 0.1,
        "duration.range": 0.2, "duration.avg": 0.1, "duration.var": 0.3,
        "rest.range": 0.3, "rest.avg": 0.1, "rest.var": 0.2,
    },
}


@main.command("case-study")
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--lyrics", "lyrics_text", required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--tempo", default=120.0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def case_study(checkpoint, lyrics_text, seed, tempo, out_dir):
    """Render the same lyrics under three contrasting style recipes."""
    composer = MelodyComposer.load(checkpoint)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, controls in CASE_STUDY_RECIPES.items():
        result = composer.generate(lyrics_text, controls=controls, seed=seed)
        midi_path = write_midi(result.melody, out / f"{name}.mid", tempo_bpm=tempo)
        roll = pianoroll_dict(result.melody, result.lyrics, tempo)
        (out / f"{name}.json").write_text(json.dumps(roll, sort_keys=True), encoding="utf-8")
        emit_status("case_study_variant", name=name, out=str(midi_path))
        click.echo(f"{name}: {midi_path}")


@main.command()
@click.option("--checkpoint-dir", required=True, type=click.Path())
@click.option("--persist-dir", type=click.Path())
@click.option("--static-dir", type=click.Path(), help="Built studio UI to serve at /studio.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(checkpoint_dir, persist_dir, static_dir, host, port):
    """Run the generation service."""
    import uvicorn

    from .service import create_app

    app = create_app(checkpoint_dir, persist_dir, static_dir)
    emit_status("serving", host=host, port=port)
    uvicorn.run(app, host=host, port=port)


@main.command("toy-corpus")
@click.option("--n", default=600, show_default=True)
@click.option("--length", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def toy_corpus(n, length, seed, out):
    """Write a synthetic paired corpus (no published dataset required)."""
    samples = make_toy_corpus(n, length=length, seed=seed)
    save_corpus(samples, out)
    vocabs = build_vocabs(samples)
    emit_status("toy_corpus", n=n, pitch_classes=vocabs["pitch"].size, out=out)
    click.echo(f"{n} samples -> {out}")


if __name__ == "__main__":
    main()
