"""Lyrics tokenization: syllable streams grouped into word spans."""

from __future__ import annotations

import re
from dataclasses import dataclass

_WORD_RE = re.compile(r"[a-zA-Z']+")
_VOWELS = "aeiouy"


@dataclass(frozen=True)
class LyricsSequence:
    """Syllable tokens plus the contiguous spans grouping them into words.

    ``word_spans`` holds (start, end) half-open index pairs; spans are
    ordered, contiguous, and cover every syllable exactly once.
    """

    syllables: tuple[str, ...]
    word_spans: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "syllables", tuple(self.syllables))
        object.__setattr__(self, "word_spans", tuple((int(a), int(b)) for a, b in self.word_spans))
        cursor = 0
        for start, end in self.word_spans:
            if start != cursor or end <= start:
                raise ValueError(f"word spans must be contiguous and non-empty, got {self.word_spans}")
            cursor = end
        if cursor != len(self.syllables):
            raise ValueError(
                f"word spans cover {cursor} syllables but sequence has {len(self.syllables)}"
            )

    def __len__(self) -> int:
        return len(self.syllables)

    def words(self) -> list[str]:
        """Word tokens, reconstructed by joining each span's syllables."""
        return ["".join(self.syllables[a:b]) for a, b in self.word_spans]

    def word_of(self, syllable_index: int) -> str:
        for a, b in self.word_spans:
            if a <= syllable_index < b:
                return "".join(self.syllables[a:b])
        raise IndexError(syllable_index)

    def word_index_per_syllable(self) -> list[int]:
        out = [0] * len(self.syllables)
        for w, (a, b) in enumerate(self.word_spans):
            for i in range(a, b):
                out[i] = w
        return out

    @staticmethod
    def from_words(words: list[list[str]]) -> "LyricsSequence":
        """Build from a list of per-word syllable lists."""
        syllables: list[str] = []
        spans: list[tuple[int, int]] = []
        for parts in words:
            if not parts:
                continue
            spans.append((len(syllables), len(syllables) + len(parts)))
            syllables.extend(parts)
        return LyricsSequence(tuple(syllables), tuple(spans))


def split_syllables(word: str) -> list[str]:
    """Split a word into syllable-sized chunks with a vowel-group heuristic.

    Each chunk carries one vowel group; trailing consonants stay with the
    preceding vowel group. Crude, but deterministic and good enough for
    feeding arbitrary user text through a syllable-level model.
    """
    lower = word.lower()
    groups = [m for m in re.finditer(f"[{_VOWELS}]+", lower)]
    if len(groups) <= 1:
        return [word]
    cuts = []
    for prev, nxt in zip(groups, groups[1:]):
        gap_start, gap_end = prev.end(), nxt.start()
        n_cons = gap_end - gap_start
        # split before the consonant adjacent to the next vowel group
        cuts.append(gap_start + max(n_cons - 1, 0) if n_cons else gap_start)
    pieces = []
    start = 0
    for c in cuts:
        pieces.append(word[start:c])
        start = c
    pieces.append(word[start:])
    return [p for p in pieces if p]


def tokenize_lyrics(text: str, lowercase: bool = True) -> LyricsSequence:
    """Tokenize raw lyric text into a syllable/word sequence.

    Normalization is configurable: published corpora do not state their
    casing convention, so callers may disable lowercasing.
    """
    if lowercase:
        text = text.lower()
    words = _WORD_RE.findall(text)
    if not words:
        raise ValueError("lyrics contain no tokenizable words")
    return LyricsSequence.from_words([split_syllables(w) for w in words])
