"""Core note/melody types and attribute vocabularies.

A melody is a fixed-length sequence of (pitch, duration, rest) triplets:
MIDI pitch in semitones, duration and trailing rest in quarter-note units.
Attribute vocabularies map raw values onto contiguous class indices 1..K
so sequence statistics can be computed in class-index space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ATTRIBUTES = ("pitch", "duration", "rest")


@dataclass(frozen=True)
class NoteEvent:
    """One melody event: a pitch, how long it sounds, and the rest after it."""

    pitch: int
    duration: float
    rest: float

    def __post_init__(self):
        if not isinstance(self.pitch, (int, np.integer)):
            raise TypeError(f"pitch must be an integer MIDI number, got {self.pitch!r}")
        if not (0 <= self.pitch <= 127):
            raise ValueError(f"pitch {self.pitch} outside MIDI range 0..127")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.rest < 0:
            raise ValueError(f"rest must be non-negative, got {self.rest}")

    def as_tuple(self) -> tuple[int, float, float]:
        return (int(self.pitch), float(self.duration), float(self.rest))


@dataclass(frozen=True)
class MelodySequence:
    """Ordered, immutable run of :class:`NoteEvent`."""

    notes: tuple[NoteEvent, ...]

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(self.notes))

    def __len__(self) -> int:
        return len(self.notes)

    def __iter__(self):
        return iter(self.notes)

    def pitches(self) -> np.ndarray:
        return np.array([n.pitch for n in self.notes], dtype=np.int64)

    def durations(self) -> np.ndarray:
        return np.array([n.duration for n in self.notes], dtype=np.float64)

    def rests(self) -> np.ndarray:
        return np.array([n.rest for n in self.notes], dtype=np.float64)

    def values(self, attribute: str) -> np.ndarray:
        if attribute == "pitch":
            return self.pitches().astype(np.float64)
        if attribute == "duration":
            return self.durations()
        if attribute == "rest":
            return self.rests()
        raise KeyError(f"unknown attribute {attribute!r}")

    @staticmethod
    def from_triplets(triplets: Iterable[Sequence[float]]) -> "MelodySequence":
        return MelodySequence(tuple(NoteEvent(int(p), float(d), float(r)) for p, d, r in triplets))


class AttributeVocab:
    """Bijective map between attribute values and class indices 1..K.

    Pitch vocabularies cover a contiguous MIDI range; duration and rest
    vocabularies hold the sorted distinct values observed in a corpus.
    """

    def __init__(self, attribute: str, values: Sequence[float]):
        if attribute not in ATTRIBUTES:
            raise ValueError(f"unknown attribute {attribute!r}")
        if len(values) == 0:
            raise ValueError("vocabulary needs at least one value")
        vals = list(values)
        if sorted(vals) != vals:
            raise ValueError("vocabulary values must be sorted ascending")
        if len(set(vals)) != len(vals):
            raise ValueError("vocabulary values must be distinct")
        if attribute == "pitch":
            ivals = [int(v) for v in vals]
            if ivals != list(range(ivals[0], ivals[-1] + 1)):
                raise ValueError("pitch vocabulary must be a contiguous MIDI range")
            vals = ivals
        self.attribute = attribute
        self.values = tuple(vals)
        # class indices run 1..K so index expectations line up with the
        # k-weighted statistics used by the sequence losses
        self.index_of = {v: i + 1 for i, v in enumerate(self.values)}

    @property
    def size(self) -> int:
        return len(self.values)

    def __contains__(self, value) -> bool:
        return self._key(value) in self.index_of

    def _key(self, value):
        return int(value) if self.attribute == "pitch" else float(value)

    def encode(self, values: Iterable) -> np.ndarray:
        """Map raw values to 1-based class indices."""
        out = []
        for v in values:
            key = self._key(v)
            if key not in self.index_of:
                raise KeyError(
                    f"{self.attribute} value {v!r} not in vocabulary "
                    f"({self.values[0]}..{self.values[-1]}, {self.size} classes)"
                )
            out.append(self.index_of[key])
        return np.array(out, dtype=np.int64)

    def decode(self, indices: Iterable[int]) -> list:
        out = []
        for i in indices:
            i = int(i)
            if not 1 <= i <= self.size:
                raise IndexError(f"class index {i} outside 1..{self.size}")
            out.append(self.values[i - 1])
        return out

    def one_hot(self, values: Iterable) -> np.ndarray:
        idx = self.encode(values) - 1
        out = np.zeros((len(idx), self.size), dtype=np.float64)
        out[np.arange(len(idx)), idx] = 1.0
        return out

    def to_manifest(self) -> dict:
        return {"attribute": self.attribute, "values": list(self.values)}

    @staticmethod
    def from_manifest(data: dict) -> "AttributeVocab":
        return AttributeVocab(data["attribute"], data["values"])

    @staticmethod
    def build(attribute: str, melodies: Iterable[MelodySequence]) -> "AttributeVocab":
        """Build a vocabulary from observed corpus values."""
        melodies = list(melodies)
        if not melodies:
            raise ValueError("cannot build a vocabulary from an empty corpus")
        if attribute == "pitch":
            lo = min(int(m.pitches().min()) for m in melodies)
            hi = max(int(m.pitches().max()) for m in melodies)
            return AttributeVocab("pitch", list(range(lo, hi + 1)))
        seen = set()
        for m in melodies:
            seen.update(float(v) for v in m.values(attribute))
        return AttributeVocab(attribute, sorted(seen))

    def __repr__(self):
        return f"AttributeVocab({self.attribute}, K={self.size})"


def validate_melody(melody: MelodySequence, vocabs: dict[str, AttributeVocab]) -> None:
    """Raise if any note value falls outside its vocabulary."""
    for attr in ATTRIBUTES:
        vocab = vocabs[attr]
        vocab.encode(melody.values(attr) if attr != "pitch" else melody.pitches())


@dataclass(frozen=True)
class PairedSample:
    """One aligned lyrics/melody pair, optionally with cached style features."""

    lyrics: "LyricsSequence"
    melody: MelodySequence
    style: object | None = None

    def __post_init__(self):
        if len(self.lyrics) != len(self.melody):
            raise ValueError(
                f"alignment mismatch: {len(self.lyrics)} syllables vs {len(self.melody)} notes"
            )


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/valid/test partition, reproducible from its seed."""

    train: tuple[PairedSample, ...]
    valid: tuple[PairedSample, ...]
    test: tuple[PairedSample, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "valid", tuple(self.valid))
        object.__setattr__(self, "test", tuple(self.test))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.valid), len(self.test))
