"""Skip-gram embeddings for words and syllables, and lyric vectorization.

A lyric token's representation is the concatenation of its word's vector
and its syllable's vector, each from a skip-gram table trained with
negative sampling on the corresponding token streams. Out-of-vocabulary
tokens fall back to the mean table vector and are flagged, so arbitrary
user lyrics always embed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .lyrics import LyricsSequence


class EmbeddingTable:
    """Immutable token -> vector map with the text vector file format.

    Files start with a ``count dim`` header line followed by one
    ``token v1 .. vdim`` line per entry.
    """

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(tokens) != vectors.shape[0]:
            raise ValueError("tokens and vectors disagree in length")
        if len(tokens) == 0:
            raise ValueError("empty table")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("embedding vectors must be finite")
        self.tokens = tuple(tokens)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self._index = {t: i for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate tokens in table")
        self.mean_vector = vectors.mean(axis=0)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def vector(self, token: str) -> np.ndarray | None:
        i = self._index.get(token)
        return None if i is None else self.vectors[i]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.tokens)} {self.dim}\n")
            for token, row in zip(self.tokens, self.vectors):
                fh.write(token + " " + " ".join(repr(float(v)) for v in row) + "\n")

    @staticmethod
    def load(path: str | Path, expected_dim: int | None = None) -> "EmbeddingTable":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        lines = [ln for ln in lines if ln.strip()]
        if not lines:
            raise ValueError("empty table")
        try:
            count, dim = (int(x) for x in lines[0].split())
        except ValueError as exc:
            raise ValueError(f"malformed header {lines[0]!r}") from exc
        if expected_dim is not None and dim != expected_dim:
            raise ValueError(f"dimension mismatch: file has {dim}, expected {expected_dim}")
        tokens, rows = [], []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split()
            if len(parts) != dim + 1:
                raise ValueError(f"row {lineno}: expected {dim} values, got {len(parts) - 1}")
            tokens.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
        if len(tokens) != count:
            raise ValueError(f"header declares {count} rows, file has {len(tokens)}")
        return EmbeddingTable(tokens, np.array(rows, dtype=np.float64))


class SkipGramEmbedder(BaseEstimator):
    """Trains skip-gram vectors with negative sampling over token streams.

    Deterministic given ``seed``. After ``fit`` the trained vectors live in
    ``table_``. Defaults follow common practice: 5 negatives, window 3,
    unigram^0.75 negative distribution.
    """

    def __init__(self, dim: int = 50, window: int = 3, negatives: int = 5,
                 epochs: int = 5, lr: float = 0.025, seed: int = 0):
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.lr = lr
        self.seed = seed

    def fit(self, sentences: Iterable[Sequence[str]], y=None) -> "SkipGramEmbedder":
        sentences = [list(s) for s in sentences if len(s) > 0]
        if not sentences:
            raise ValueError("empty corpus")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        rng = np.random.default_rng(self.seed)

        tokens: list[str] = []
        index: dict[str, int] = {}
        counts: list[int] = []
        for sent in sentences:
            for tok in sent:
                if tok not in index:
                    index[tok] = len(tokens)
                    tokens.append(tok)
                    counts.append(0)
                counts[index[tok]] += 1
        vocab_size = len(tokens)

        w_in = (rng.random((vocab_size, self.dim)) - 0.5) / self.dim
        w_out = np.zeros((vocab_size, self.dim))

        noise = np.array(counts, dtype=np.float64) ** 0.75
        noise_cdf = np.cumsum(noise / noise.sum())

        pairs: list[tuple[int, int]] = []
        for sent in sentences:
            ids = [index[t] for t in sent]
            for i, center in enumerate(ids):
                lo, hi = max(0, i - self.window), min(len(ids), i + self.window + 1)
                pairs.extend((center, ids[j]) for j in range(lo, hi) if j != i)

        for _ in range(self.epochs):
            order = rng.permutation(len(pairs)) if pairs else []
            for p in order:
                center, context = pairs[p]
                negs = np.searchsorted(noise_cdf, rng.random(self.negatives))
                targets = np.concatenate(([context], negs))
                labels = np.zeros(len(targets))
                labels[0] = 1.0
                v = w_in[center]
                u = w_out[targets]
                scores = 1.0 / (1.0 + np.exp(-(u @ v)))
                g = (scores - labels) * self.lr
                w_in[center] = v - g @ u
                w_out[targets] = u - np.outer(g, v)

        self.table_ = EmbeddingTable(tokens, w_in)
        return self

    def transform(self, tokens: Sequence[str]) -> np.ndarray:
        if not hasattr(self, "table_"):
            raise RuntimeError("SkipGramEmbedder is not fitted; call fit() first")
        table = self.table_
        return np.stack([table.vector(t) if t in table else table.mean_vector for t in tokens])


@dataclass(frozen=True)
class LyricEmbedding:
    """Per-syllable word||syllable vectors plus the OOV fallback flags."""

    vectors: np.ndarray
    oov_words: tuple[str, ...] = ()
    oov_syllables: tuple[str, ...] = ()

    def __post_init__(self):
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("lyric embedding contains non-finite values")

    @property
    def oov_count(self) -> int:
        return len(self.oov_words) + len(self.oov_syllables)


def embed_lyrics(
    lyrics: LyricsSequence,
    word_table: EmbeddingTable,
    syllable_table: EmbeddingTable,
) -> LyricEmbedding:
    """Concatenate each syllable's word vector and syllable vector."""
    words = lyrics.words()
    word_idx = lyrics.word_index_per_syllable()
    rows = []
    oov_words: list[str] = []
    oov_syllables: list[str] = []
    for t, syl in enumerate(lyrics.syllables):
        word = words[word_idx[t]]
        wv = word_table.vector(word)
        if wv is None:
            wv = word_table.mean_vector
            oov_words.append(word)
        sv = syllable_table.vector(syl)
        if sv is None:
            sv = syllable_table.mean_vector
            oov_syllables.append(syl)
        rows.append(np.concatenate([wv, sv]))
    return LyricEmbedding(np.stack(rows), tuple(oov_words), tuple(oov_syllables))


def load_embedding_table(path: str | Path, expected_dim: int | None = None) -> EmbeddingTable:
    return EmbeddingTable.load(path, expected_dim=expected_dim)
