"""End-to-end estimator: fit on paired samples, generate from lyrics.

``MelodyComposer`` wires the whole stack behind a fit/generate surface:
vocabularies and style binners are fitted on the training split, skip-gram
tables are trained on its token streams, and the generator/discriminator
pair runs the two-phase schedule. After fitting (or loading a checkpoint)
the composer turns raw lyrics plus nine normalized style controls into
melodies.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import torch
from sklearn.base import BaseEstimator

from .checkpoint import load_container, save_container
from .corpus import build_vocabs
from .embedding import EmbeddingTable, SkipGramEmbedder, embed_lyrics
from .lyrics import LyricsSequence, tokenize_lyrics
from .model import DTYPE, ModelConfig, default_model_config, init_params
from .notes import ATTRIBUTES, AttributeVocab, MelodySequence, PairedSample
from .sampling import GumbelSampler
from .style import FEATURE_KEYS, StyleEncoder, StyleFeatures, extract_style_features
from .training import TrainConfig, Trainer, encode_training_data, stream_seed


@dataclass(frozen=True)
class GenerationResult:
    """One generated melody with its provenance echo."""

    melody: MelodySequence
    tokens: dict[str, tuple[int, ...]]     # 1-based class indices per attribute
    realized_style: StyleFeatures
    lyrics: LyricsSequence
    controls: dict[str, float] | None
    seed: int


def pianoroll_dict(
    melody: MelodySequence, lyrics: LyricsSequence | None = None, tempo_bpm: float = 120.0
) -> dict:
    """Piano-roll JSON: onsets/offsets in quarter notes plus syllable labels."""
    notes = []
    clock = 0.0
    for i, note in enumerate(melody):
        notes.append(
            {
                "pitch": int(note.pitch),
                "onset": clock,
                "offset": clock + note.duration,
                "rest": note.rest,
                "syllable": lyrics.syllables[i] if lyrics is not None else None,
            }
        )
        clock += note.duration + note.rest
    return {"tempo_bpm": tempo_bpm, "total_quarters": clock, "notes": notes}


class MelodyComposer(BaseEstimator):
    """Style-controllable lyrics-to-melody model with a fit/generate API."""

    def __init__(
        self,
        word_dim: int = 50,
        syllable_dim: int = 50,
        embed_window: int = 3,
        embed_negatives: int = 5,
        embed_epochs: int = 5,
        pretrain_epochs: int = 40,
        adversarial_epochs: int = 120,
        batch_size: int = 512,
        lr_pretrain: float = 1e-3,
        lr_generator: float = 1e-4,
        lr_discriminator: float = 1e-4,
        alpha_mean: float = 1.0,
        alpha_var: float = 1.0,
        loss_mode: str = "rsgan+seqloss",
        gumbel_max_temperature: float = 1000.0,
        grad_clip: float = 5.0,
        checkpoint_interval: int = 10,
        eval_subset: int = 64,
        lowercase: bool = True,
        seed: int = 0,
        run_dir: str | None = None,
        branch_dims: dict | None = None,
    ):
        self.word_dim = word_dim
        self.syllable_dim = syllable_dim
        self.embed_window = embed_window
        self.embed_negatives = embed_negatives
        self.embed_epochs = embed_epochs
        self.pretrain_epochs = pretrain_epochs
        self.adversarial_epochs = adversarial_epochs
        self.batch_size = batch_size
        self.lr_pretrain = lr_pretrain
        self.lr_generator = lr_generator
        self.lr_discriminator = lr_discriminator
        self.alpha_mean = alpha_mean
        self.alpha_var = alpha_var
        self.loss_mode = loss_mode
        self.gumbel_max_temperature = gumbel_max_temperature
        self.grad_clip = grad_clip
        self.checkpoint_interval = checkpoint_interval
        self.eval_subset = eval_subset
        self.lowercase = lowercase
        self.seed = seed
        self.run_dir = run_dir
        self.branch_dims = branch_dims

    # -- fitting ---------------------------------------------------------------

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            pretrain_epochs=self.pretrain_epochs,
            adversarial_epochs=self.adversarial_epochs,
            batch_size=self.batch_size,
            lr_pretrain=self.lr_pretrain,
            lr_generator=self.lr_generator,
            lr_discriminator=self.lr_discriminator,
            grad_clip=self.grad_clip,
            gumbel_max_temperature=self.gumbel_max_temperature,
            alpha_mean=self.alpha_mean,
            alpha_var=self.alpha_var,
            loss_mode=self.loss_mode,
            seed=self.seed,
            checkpoint_interval=self.checkpoint_interval,
            eval_subset=self.eval_subset,
        )

    def fit(
        self,
        samples: Iterable[PairedSample],
        valid_samples: Iterable[PairedSample] | None = None,
    ) -> "MelodyComposer":
        samples = list(samples)
        if not samples:
            raise ValueError("cannot fit on an empty training set")
        self.vocabs_ = build_vocabs(samples)
        self.style_encoder_ = StyleEncoder().fit(samples)

        word_streams = [s.lyrics.words() for s in samples]
        syllable_streams = [list(s.lyrics.syllables) for s in samples]
        self.word_table_ = SkipGramEmbedder(
            dim=self.word_dim, window=self.embed_window, negatives=self.embed_negatives,
            epochs=self.embed_epochs, seed=stream_seed(self.seed, "word-embed"),
        ).fit(word_streams).table_
        self.syllable_table_ = SkipGramEmbedder(
            dim=self.syllable_dim, window=self.embed_window, negatives=self.embed_negatives,
            epochs=self.embed_epochs, seed=stream_seed(self.seed, "syllable-embed"),
        ).fit(syllable_streams).table_

        self.model_config_ = default_model_config(
            lyric_dim=self.word_dim + self.syllable_dim,
            output_dims={a: self.vocabs_[a].size for a in ATTRIBUTES},
            style_dims=self.style_encoder_.branch_sizes(),
            branch_dims=self.branch_dims,
        )
        self.generator_, self.discriminator_ = init_params(
            self.model_config_, stream_seed(self.seed, "init")
        )
        train_data = encode_training_data(
            samples, self.vocabs_, self.style_encoder_, self.word_table_, self.syllable_table_
        )
        valid_data = None
        if valid_samples:
            valid_data = encode_training_data(
                list(valid_samples), self.vocabs_, self.style_encoder_,
                self.word_table_, self.syllable_table_,
            )
        self.trainer_ = Trainer(
            self.generator_, self.discriminator_, self.train_config(),
            train_data, valid_data,
            manifests=self._manifests(), extra_arrays=self._table_arrays(),
            run_dir=self.run_dir,
        )
        self.history_ = self.trainer_.train()
        return self

    # -- generation --------------------------------------------------------------

    def _check_ready(self):
        if not hasattr(self, "generator_"):
            raise RuntimeError("MelodyComposer is not fitted or loaded")

    def prepare_lyrics(self, lyrics: str | LyricsSequence) -> LyricsSequence:
        if isinstance(lyrics, LyricsSequence):
            return lyrics
        return tokenize_lyrics(lyrics, lowercase=self.lowercase)

    def generate(
        self,
        lyrics: str | LyricsSequence,
        controls: Mapping[str, float] | Sequence[float] | None = None,
        seed: int | None = None,
    ) -> GenerationResult:
        """Generate one melody; every syllable gets one note.

        ``controls`` holds up to nine normalized values in [0, 1] keyed by
        feature (missing ones default to 0.5); ``None`` conditions on the
        all-0.5 midpoint. Unseeded calls draw a fresh seed and report it.
        """
        self._check_ready()
        lyr = self.prepare_lyrics(lyrics)
        if seed is None:
            seed = int.from_bytes(os.urandom(6), "little")
        x = torch.as_tensor(
            embed_lyrics(lyr, self.word_table_, self.syllable_table_).vectors, dtype=DTYPE
        ).unsqueeze(0)
        vector = self.style_encoder_.encode_controls(controls if controls is not None else {})
        style = {
            a: torch.as_tensor(vector.branch(a), dtype=DTYPE).unsqueeze(0) for a in ATTRIBUTES
        }
        sampler = GumbelSampler(1.0, torch.Generator().manual_seed(stream_seed(seed, "generate")))
        with torch.no_grad():
            roll = self.generator_.rollout(x, style, sampler)
        tokens = {a: tuple(int(i) + 1 for i in roll.hard[a][0].argmax(dim=-1)) for a in ATTRIBUTES}
        decoded = {a: self.vocabs_[a].decode(tokens[a]) for a in ATTRIBUTES}
        melody = MelodySequence.from_triplets(
            list(zip(decoded["pitch"], decoded["duration"], decoded["rest"]))
        )
        echo = None
        if controls is not None:
            echo = dict(controls) if isinstance(controls, Mapping) else dict(
                zip(FEATURE_KEYS, controls)
            )
        return GenerationResult(
            melody=melody,
            tokens=tokens,
            realized_style=extract_style_features(melody),
            lyrics=lyr,
            controls=echo,
            seed=seed,
        )

    # -- persistence ---------------------------------------------------------------

    def _manifests(self) -> dict:
        return {
            "pipeline": {
                "params": {k: v for k, v in self.get_params().items() if v is None or isinstance(v, (int, float, str, bool))},
                "lowercase": self.lowercase,
            },
            "vocabs": [self.vocabs_[a].to_manifest() for a in ATTRIBUTES],
            "style_encoder": self.style_encoder_.to_manifest(),
            "embed": {
                "word_tokens": list(self.word_table_.tokens),
                "syllable_tokens": list(self.syllable_table_.tokens),
            },
        }

    def _table_arrays(self) -> dict[str, np.ndarray]:
        return {
            "embed.word.vectors": self.word_table_.vectors,
            "embed.syllable.vectors": self.syllable_table_.vectors,
        }

    def save(self, path: str | Path) -> Path:
        """Persist everything generation needs into one container file."""
        self._check_ready()
        if hasattr(self, "trainer_"):
            return self.trainer_.save_checkpoint(path)
        arrays = dict(self._table_arrays())
        for name, p in self.generator_.named_parameters():
            arrays[f"gen.{name}"] = p.detach().numpy()
        for name, p in self.discriminator_.named_parameters():
            arrays[f"disc.{name}"] = p.detach().numpy()
        manifests = self._manifests()
        manifests["model_config"] = self.model_config_.to_manifest()
        return save_container(path, arrays, manifests)

    @classmethod
    def load(cls, path: str | Path) -> "MelodyComposer":
        """Rebuild a generation-ready composer from any checkpoint container."""
        arrays, manifests = load_container(path)
        params = manifests.get("pipeline", {}).get("params", {})
        composer = cls(**{k: v for k, v in params.items() if k in cls().get_params()})
        composer.vocabs_ = {
            v["attribute"]: AttributeVocab.from_manifest(v) for v in manifests["vocabs"]
        }
        composer.style_encoder_ = StyleEncoder.from_manifest(manifests["style_encoder"])
        composer.word_table_ = EmbeddingTable(
            manifests["embed"]["word_tokens"], arrays["embed.word.vectors"]
        )
        composer.syllable_table_ = EmbeddingTable(
            manifests["embed"]["syllable_tokens"], arrays["embed.syllable.vectors"]
        )
        composer.model_config_ = ModelConfig.from_manifest(manifests["model_config"])
        generator, discriminator = init_params(composer.model_config_, seed=0)
        with torch.no_grad():
            for name, p in generator.named_parameters():
                p.copy_(torch.as_tensor(arrays[f"gen.{name}"], dtype=DTYPE))
            for name, p in discriminator.named_parameters():
                key = f"disc.{name}"
                if key in arrays:
                    p.copy_(torch.as_tensor(arrays[key], dtype=DTYPE))
        composer.generator_ = generator
        composer.discriminator_ = discriminator
        return composer
