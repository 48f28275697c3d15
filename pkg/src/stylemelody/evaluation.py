"""Objective evaluation: corpus metrics, style MSE, Self-BLEU, control sweeps.

The seven corpus metrics are per-sequence statistics averaged over a
corpus; repetition counts use earlier-occurrence matching by default, with
a distinct-n-gram strategy flag kept for calibration against reference
corpora. Self-BLEU scores each sequence against all others as references;
lower means more diverse output.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .notes import MelodySequence
from .style import FEATURE_KEYS, extract_style_features

METRIC_COLUMNS = {
    "midi_span": "MIDI Span",
    "two_midi_reps": "2-MIDI Reps",
    "three_midi_reps": "3-MIDI Reps",
    "unique_midi": "Unique MIDI",
    "restless_notes": "Restless Notes",
    "avg_rest": "Avg Rest",
    "song_length": "Song Length",
}

_BLEU_EPS = 1e-9


def ngram_repetitions(values: Sequence, n: int, strategy: str = "positions") -> int:
    """Count n-gram repetition in a sequence.

    ``positions``: positions whose n-gram already occurred earlier.
    ``distinct``: distinct n-grams occurring more than once.
    """
    grams = [tuple(values[i : i + n]) for i in range(len(values) - n + 1)]
    if strategy == "positions":
        seen: set = set()
        reps = 0
        for g in grams:
            if g in seen:
                reps += 1
            seen.add(g)
        return reps
    if strategy == "distinct":
        return sum(1 for c in Counter(grams).values() if c > 1)
    raise ValueError(f"unknown repetition strategy {strategy!r}")


@dataclass(frozen=True)
class MetricRecord:
    midi_span: float
    two_midi_reps: float
    three_midi_reps: float
    unique_midi: float
    restless_notes: float
    avg_rest: float
    song_length: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def compute_metrics(
    corpus: Iterable[MelodySequence], repetition_strategy: str = "positions"
) -> MetricRecord:
    """Per-sequence metrics averaged over the corpus."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    rows = []
    for m in corpus:
        pitches = m.pitches().tolist()
        rests = m.rests()
        rows.append(
            (
                max(pitches) - min(pitches),
                ngram_repetitions(pitches, 2, repetition_strategy),
                ngram_repetitions(pitches, 3, repetition_strategy),
                len(set(pitches)),
                int((rests == 0).sum()),
                float(rests.mean()),
                float(m.durations().sum() + rests.sum()),
            )
        )
    means = np.mean(np.array(rows, dtype=np.float64), axis=0)
    return MetricRecord(*[float(v) for v in means])


def attribute_histograms(corpus: Iterable[MelodySequence]) -> dict[str, dict[float, int]]:
    """Value counts of each attribute across a corpus, for distribution audits."""
    counts: dict[str, Counter] = {"pitch": Counter(), "duration": Counter(), "rest": Counter()}
    for melody in corpus:
        for note in melody.notes:
            counts["pitch"][float(note.pitch)] += 1
            counts["duration"][float(note.duration)] += 1
            counts["rest"][float(note.rest)] += 1
    return {
        attr: {value: counter[value] for value in sorted(counter)}
        for attr, counter in counts.items()
    }


def style_mse(
    generated: Sequence[MelodySequence], reference: Sequence[MelodySequence]
) -> dict[str, float]:
    """Mean squared per-pair difference of each of the nine style features."""
    if len(generated) != len(reference):
        raise ValueError(f"corpora must align 1:1, got {len(generated)} vs {len(reference)}")
    if not generated:
        raise ValueError("empty corpora")
    diffs = np.stack(
        [
            extract_style_features(g).as_array() - extract_style_features(r).as_array()
            for g, r in zip(generated, reference)
        ]
    )
    mses = (diffs**2).mean(axis=0)
    return dict(zip(FEATURE_KEYS, [float(v) for v in mses]))


def _bleu(candidate: Sequence, references: list[Sequence], max_n: int) -> float:
    """Multi-reference BLEU with add-epsilon smoothing of zero precisions.

    A candidate with no unigram overlap at all scores exactly 0.
    """
    precisions = []
    for n in range(1, max_n + 1):
        cand_grams = Counter(tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1))
        if not cand_grams:
            precisions.append(0.0)
            continue
        max_ref: Counter = Counter()
        for ref in references:
            ref_grams = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
            for g, c in ref_grams.items():
                max_ref[g] = max(max_ref[g], c)
        clipped = sum(min(c, max_ref.get(g, 0)) for g, c in cand_grams.items())
        precisions.append(clipped / sum(cand_grams.values()))
    if precisions[0] == 0.0:
        return 0.0
    log_sum = sum(math.log(p if p > 0 else _BLEU_EPS) for p in precisions) / max_n
    c = len(candidate)
    r = min((len(ref) for ref in references), key=lambda L: (abs(L - c), L))
    brevity = 1.0 if c >= r else math.exp(1 - r / c)
    return brevity * math.exp(log_sum)


def self_bleu(corpus: Sequence[Sequence], max_n: int = 4) -> dict[int, float]:
    """Average BLEU-n of each sequence against all the others."""
    corpus = [list(seq) for seq in corpus]
    if len(corpus) < 2:
        raise ValueError("self-BLEU needs at least 2 sequences")
    scores = {}
    for n in range(1, max_n + 1):
        total = 0.0
        for i, cand in enumerate(corpus):
            refs = corpus[:i] + corpus[i + 1 :]
            total += _bleu(cand, refs, n)
        scores[n] = total / len(corpus)
    return scores


def self_bleu_variants(
    corpus: Sequence[MelodySequence], max_n: int = 4
) -> dict[str, dict[int, float]]:
    """Self-BLEU per attribute token stream plus the combined triplet stream."""
    corpus = list(corpus)
    streams: dict[str, list[list]] = {
        "pitch": [[n.pitch for n in m.notes] for m in corpus],
        "duration": [[n.duration for n in m.notes] for m in corpus],
        "rest": [[n.rest for n in m.notes] for m in corpus],
        "triplet": [[n.as_tuple() for n in m.notes] for m in corpus],
    }
    return {name: self_bleu(seqs, max_n=max_n) for name, seqs in streams.items()}


@dataclass
class EvalReport:
    """Bundle of corpus metrics, per-feature MSEs, and diversity scores."""

    metrics: MetricRecord
    style_mse: dict[str, float] | None = None
    self_bleu: dict[int, float] | None = None
    self_bleu_variants: dict[str, dict[int, float]] | None = None
    histograms: dict[str, dict[float, int]] | None = None
    metadata: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    """Distributions of one generated attribute across control candidates."""

    feature: str
    candidates: tuple[float, ...]
    fixed_value: float
    summaries: list[dict]           # per candidate: mean/quartiles/whiskers/count
    spearman: float | None
    n_lyrics: int


def _summary(values: np.ndarray) -> dict:
    q1, med, q3 = (float(v) for v in np.percentile(values, [25, 50, 75]))
    return {
        "count": int(values.size),
        "mean": float(values.mean()),
        "q1": q1,
        "median": med,
        "q3": q3,
        "lo": float(values.min()),
        "hi": float(values.max()),
    }


def controllability_sweep(
    generate: Callable[..., MelodySequence],
    lyrics: Sequence,
    feature: str,
    candidates: Sequence[float] = (0.2, 0.4, 0.6, 0.8),
    fixed_value: float = 0.5,
    seed: int = 0,
) -> SweepResult:
    """Sweep one normalized control, holding the other eight constant.

    ``generate(lyrics_item, controls, seed)`` must return a melody. For
    each candidate, every lyric is generated once and the swept attribute's
    values are pooled. The rank correlation relates candidate level to the
    per-candidate mean; it is absent for degenerate (single-candidate)
    sweeps.
    """
    if feature not in FEATURE_KEYS:
        raise KeyError(f"unknown style feature {feature!r}")
    if any(not 0.0 <= c <= 1.0 for c in candidates):
        raise ValueError("candidates must lie in [0, 1]")
    attribute = feature.split(".")[0]
    summaries = []
    means = []
    for ci, cand in enumerate(candidates):
        controls = {key: fixed_value for key in FEATURE_KEYS}
        controls[feature] = float(cand)
        pooled = []
        for li, item in enumerate(lyrics):
            melody = generate(item, controls, seed + li * len(candidates) + ci)
            pooled.extend(melody.values(attribute).tolist())
        values = np.array(pooled, dtype=np.float64)
        summary = _summary(values)
        summary["candidate"] = float(cand)
        summaries.append(summary)
        means.append(summary["mean"])
    spearman = None
    if len(candidates) >= 2:
        rho = scipy_stats.spearmanr(list(candidates), means).statistic
        spearman = None if np.isnan(rho) else float(rho)
    return SweepResult(
        feature=feature,
        candidates=tuple(float(c) for c in candidates),
        fixed_value=float(fixed_value),
        summaries=summaries,
        spearman=spearman,
        n_lyrics=len(lyrics),
    )


# -- report emission ---------------------------------------------------------


def _write_jsonl(path: Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def emit_report(report: EvalReport | SweepResult, out_dir: str | Path, stem: str | None = None) -> list[Path]:
    """Write a report as line-delimited records plus a tabular export.

    Serialization is deterministic: the same report yields byte-identical
    files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if isinstance(report, SweepResult):
        stem = stem or f"sweep_{report.feature.replace('.', '_')}"
        jsonl = out_dir / f"{stem}.jsonl"
        records = [
            {"type": "sweep", "feature": report.feature, "fixed_value": report.fixed_value,
             "spearman": report.spearman, "n_lyrics": report.n_lyrics}
        ] + [{"type": "candidate", **s} for s in report.summaries]
        _write_jsonl(jsonl, records)
        csv_path = out_dir / f"{stem}.csv"
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["candidate", "count", "mean", "q1", "median", "q3", "lo", "hi"])
            for s in report.summaries:
                writer.writerow([s["candidate"], s["count"], s["mean"], s["q1"], s["median"], s["q3"], s["lo"], s["hi"]])
        return [jsonl, csv_path]

    stem = stem or "eval"
    jsonl = out_dir / f"{stem}.jsonl"
    records = [{"type": "metadata", **report.metadata}]
    for key, column in METRIC_COLUMNS.items():
        records.append({"type": "metric", "column": column, "key": key,
                        "value": getattr(report.metrics, key)})
    if report.style_mse is not None:
        # radar axes emitted in canonical feature order
        for key in FEATURE_KEYS:
            records.append({"type": "style_mse", "feature": key, "value": report.style_mse[key]})
    if report.self_bleu is not None:
        for n in sorted(report.self_bleu):
            records.append({"type": "self_bleu", "n": int(n), "value": report.self_bleu[n]})
    if report.self_bleu_variants is not None:
        for tokens in sorted(report.self_bleu_variants):
            for n in sorted(report.self_bleu_variants[tokens]):
                records.append(
                    {
                        "type": "self_bleu",
                        "tokens": tokens,
                        "n": int(n),
                        "value": report.self_bleu_variants[tokens][n],
                    }
                )
    if report.histograms is not None:
        for attr in sorted(report.histograms):
            for value in sorted(report.histograms[attr]):
                records.append(
                    {
                        "type": "histogram",
                        "attribute": attr,
                        "value": value,
                        "count": report.histograms[attr][value],
                    }
                )
    _write_jsonl(jsonl, records)
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(METRIC_COLUMNS.values()))
        writer.writerow([getattr(report.metrics, key) for key in METRIC_COLUMNS])
    return [jsonl, csv_path]
