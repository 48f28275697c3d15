"""Corpus ingestion, filtering, splitting, and the synthetic toy corpus.

The native record format is line-delimited JSON, one paired sample per
line::

    {"syllables": ["ri", "ver", "flows"],
     "word_spans": [[0, 2], [2, 3]],
     "notes": [[62, 1.0, 0.0], [64, 0.5, 0.0], [60, 1.0, 0.5]]}

``word_spans`` are half-open syllable index ranges grouping syllables into
words; ``notes`` are (midi_pitch, duration, rest) triplets in quarter-note
units, one per syllable. A ``midi`` adapter ingests monophonic MIDI files
with placeholder syllables, which closes the export/ingest round trip.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lyrics import LyricsSequence
from .midi import read_midi
from .notes import ATTRIBUTES, AttributeVocab, DatasetSplit, MelodySequence, NoteEvent, PairedSample
from .style import extract_style_features

logger = logging.getLogger(__name__)

# inclusive bounds each melody must satisfy to count as singable:
# pitch range <= 4 octaves, pitch average within C2..C6, duration range
# within 2 bars, duration average within 1 bar, rest range within 2 bars
FILTER_BOUNDS = {
    "pitch.range": (0.0, 48.0),
    "pitch.avg": (36.0, 84.0),
    "duration.range": (0.0, 8.0),
    "duration.avg": (0.0, 4.0),
    "rest.range": (0.0, 8.0),
}


@dataclass
class IngestResult:
    """Samples parsed from one corpus file plus the skip log."""

    path: str
    samples: list[PairedSample] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)


def _parse_record(record: dict) -> PairedSample:
    syllables = record["syllables"]
    notes = record["notes"]
    if "word_spans" in record:
        spans = [tuple(s) for s in record["word_spans"]]
    else:
        spans = [(i, i + 1) for i in range(len(syllables))]
    if len(syllables) != len(notes):
        raise ValueError(f"alignment mismatch: {len(syllables)} syllables vs {len(notes)} notes")
    lyrics = LyricsSequence(tuple(str(s) for s in syllables), tuple(spans))
    melody = MelodySequence.from_triplets(notes)
    return PairedSample(lyrics=lyrics, melody=melody)


def _ingest_jsonl(path: Path) -> IngestResult:
    result = IngestResult(path=str(path))
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                result.skipped.append((lineno, f"invalid json: {exc.msg}"))
                continue
            try:
                result.samples.append(_parse_record(record))
            except KeyError as exc:
                result.skipped.append((lineno, f"missing field {exc.args[0]!r}"))
            except (ValueError, TypeError) as exc:
                result.skipped.append((lineno, str(exc)))
    return result


def _ingest_midi(path: Path) -> IngestResult:
    files = sorted(path.glob("*.mid")) + sorted(path.glob("*.midi")) if path.is_dir() else [path]
    result = IngestResult(path=str(path))
    for i, f in enumerate(files, start=1):
        try:
            melody, _tempo = read_midi(f)
        except (ValueError, OSError) as exc:
            result.skipped.append((i, f"{f.name}: {exc}"))
            continue
        # MIDI carries no lyrics; attach one placeholder syllable per note
        lyrics = LyricsSequence.from_words([["na"]] * len(melody))
        result.samples.append(PairedSample(lyrics=lyrics, melody=melody))
    return result


FORMATS = {"jsonl": _ingest_jsonl, "midi": _ingest_midi}


def ingest_corpus(path: str | Path, format: str = "jsonl") -> IngestResult:
    """Parse a corpus file; malformed records are skipped and logged."""
    path = Path(path)
    if format not in FORMATS:
        raise ValueError(f"unknown corpus format {format!r}; available: {sorted(FORMATS)}")
    if not path.exists():
        raise FileNotFoundError(f"corpus not found: {path}")
    result = FORMATS[format](path)
    for index, reason in result.skipped:
        logger.warning("%s record %d skipped: %s", path, index, reason)
    logger.info("%s: %d samples, %d skipped", path, len(result.samples), len(result.skipped))
    return result


def save_corpus(samples: Iterable[PairedSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            record = {
                "syllables": list(s.lyrics.syllables),
                "word_spans": [list(span) for span in s.lyrics.word_spans],
                "notes": [list(n.as_tuple()) for n in s.melody.notes],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def passes_filter(melody: MelodySequence) -> bool:
    feats = extract_style_features(melody).as_dict()
    return all(lo <= feats[key] <= hi for key, (lo, hi) in FILTER_BOUNDS.items())


def filter_samples(samples: Iterable[PairedSample]) -> list[PairedSample]:
    """Keep only samples within the singability bounds; order preserved."""
    return [s for s in samples if passes_filter(s.melody)]


def split_samples(
    samples: Sequence[PairedSample],
    ratios: tuple[int, int, int] = (8, 1, 1),
    seed: int = 0,
) -> DatasetSplit:
    """Random disjoint train/valid/test partition, deterministic per seed.

    Valid and test sizes are the rounded ratio shares; train takes the
    remainder, so sizes may differ by one from the exact ratio.
    """
    n = len(samples)
    total = sum(ratios)
    if n < total:
        raise ValueError(f"too few samples to split: {n} < {total}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_valid = round(n * ratios[1] / total)
    n_test = round(n * ratios[2] / total)
    n_train = n - n_valid - n_test
    picks = [samples[i] for i in order]
    return DatasetSplit(
        train=tuple(picks[:n_train]),
        valid=tuple(picks[n_train : n_train + n_valid]),
        test=tuple(picks[n_train + n_valid :]),
        seed=seed,
    )


def build_vocabs(samples: Iterable[PairedSample]) -> dict[str, AttributeVocab]:
    melodies = [s.melody for s in samples]
    return {attr: AttributeVocab.build(attr, melodies) for attr in ATTRIBUTES}


def save_vocab_manifest(vocabs: dict[str, AttributeVocab], path: str | Path) -> None:
    data = {"version": 1, "vocabs": [vocabs[a].to_manifest() for a in ATTRIBUTES]}
    Path(path).write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_vocab_manifest(path: str | Path) -> dict[str, AttributeVocab]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    vocabs = [AttributeVocab.from_manifest(v) for v in data["vocabs"]]
    return {v.attribute: v for v in vocabs}


_TOY_WORDS = [
    ["la"], ["dee", "dum"], ["ri", "ver"], ["moon"], ["sha", "la", "la"],
    ["sun", "rise"], ["o", "ver"], ["night"], ["mor", "ning"], ["hey"],
    ["roll", "ing"], ["home"], ["win", "ter"], ["gold", "en"], ["sky"],
]

# rhythm regimes as repeating cycles: steady even quarters vs a swung
# short-note pattern with recurring rests; a random phase rotation keeps
# sequences distinct while staying predictable from context
_TOY_REGIMES = (
    {"durations": (1.0, 0.5, 0.5, 1.0), "rests": (0.0, 0.0, 0.0, 0.0)},
    {"durations": (0.25, 0.25, 0.5, 1.5), "rests": (0.0, 0.0, 0.5, 0.0)},
)


def make_toy_corpus(
    n_samples: int,
    length: int = 20,
    seed: int = 0,
    pitch_center_range: tuple[float, float] = (50.0, 76.0),
    pitch_jitter_range: tuple[float, float] = (0.6, 1.2),
    rhythm_complexity: float = 0.5,
) -> list[PairedSample]:
    """Generate a synthetic paired corpus with two rhythm regimes.

    Pitch centers vary continuously across ``pitch_center_range`` so the
    pitch-average statistic covers its span densely; rhythm follows one of
    two cyclic regimes (steady vs swung) with a random phase, the swung one
    drawn with probability ``rhythm_complexity``. All generated melodies
    satisfy the corpus filter.
    """
    if n_samples < 1 or length < 2:
        raise ValueError("need n_samples >= 1 and length >= 2")
    if not 0.0 <= rhythm_complexity <= 1.0:
        raise ValueError("rhythm_complexity must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n_samples):
        regime = _TOY_REGIMES[int(rng.random() < rhythm_complexity)]
        center = rng.uniform(*pitch_center_range)
        sigma = rng.uniform(*pitch_jitter_range)
        pitches = np.clip(np.round(rng.normal(center, sigma, size=length)), 40, 82).astype(int)
        phase = int(rng.integers(len(regime["durations"])))
        durations = [regime["durations"][(phase + i) % 4] for i in range(length)]
        rests = [regime["rests"][(phase + i) % 4] for i in range(length)]
        melody = MelodySequence(
            tuple(NoteEvent(int(p), float(d), float(r)) for p, d, r in zip(pitches, durations, rests))
        )
        words: list[list[str]] = []
        count = 0
        while count < length:
            w = _TOY_WORDS[int(rng.integers(len(_TOY_WORDS)))]
            if count + len(w) > length:
                w = w[: length - count]
            words.append(list(w))
            count += len(w)
        samples.append(PairedSample(lyrics=LyricsSequence.from_words(words), melody=melody))
    return samples


def attach_style(samples: Iterable[PairedSample]) -> list[PairedSample]:
    """Return samples with style features computed and cached."""
    return [
        s if s.style is not None else PairedSample(s.lyrics, s.melody, extract_style_features(s.melody))
        for s in samples
    ]
