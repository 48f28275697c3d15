from __future__ import annotations

import numpy as np
import pytest
import torch

from stylemelody.model import BranchConfig, ModelConfig
from stylemelody.notes import ATTRIBUTES


def small_model_config(rng: np.random.Generator) -> ModelConfig:
    """Random tiny dims (states <= 8, short inputs) for gradient work."""
    branches = {
        a: BranchConfig(
            embed_dim=int(rng.integers(2, 5)),
            hidden_dim=int(rng.integers(2, 9)),
            lstm_units=int(rng.integers(2, 9)),
            output_dim=int(rng.integers(2, 6)),
            style_dim=int(rng.integers(2, 5)),
        )
        for a in ATTRIBUTES
    }
    return ModelConfig(
        lyric_dim=int(rng.integers(2, 6)),
        branches=branches,
        disc_embed_dims={a: int(rng.integers(2, 5)) for a in ATTRIBUTES},
        disc_hidden_dim=int(rng.integers(2, 9)),
        disc_lstm_units=int(rng.integers(2, 9)),
    )


def random_inputs(config: ModelConfig, batch: int, t_max: int, rng: np.random.Generator):
    """Lyric tensor, per-branch style one-hot rows, and token one-hots."""
    x = torch.as_tensor(rng.normal(size=(batch, t_max, config.lyric_dim)), dtype=torch.float64)
    style = {}
    targets = {}
    for a in ATTRIBUTES:
        cfg = config.branches[a]
        s = np.zeros((batch, cfg.style_dim))
        s[np.arange(batch), rng.integers(0, cfg.style_dim, size=batch)] = 1.0
        style[a] = torch.as_tensor(s, dtype=torch.float64)
        oh = np.zeros((batch, t_max, cfg.output_dim))
        idx = rng.integers(0, cfg.output_dim, size=(batch, t_max))
        for b in range(batch):
            oh[b, np.arange(t_max), idx[b]] = 1.0
        targets[a] = torch.as_tensor(oh, dtype=torch.float64)
    return x, style, targets


@pytest.fixture(scope="session")
def toy_samples():
    from stylemelody.corpus import make_toy_corpus

    return make_toy_corpus(200, length=20, seed=11)


TINY_BRANCH_DIMS = {"pitch": (8, 8, 12), "duration": (6, 6, 8), "rest": (4, 4, 6)}


@pytest.fixture(scope="session")
def mini_composer(toy_samples):
    """Small trained composer shared by pipeline/service/CLI tests."""
    from stylemelody.pipeline import MelodyComposer

    composer = MelodyComposer(
        word_dim=8, syllable_dim=8, embed_epochs=1,
        pretrain_epochs=2, adversarial_epochs=2, batch_size=24,
        eval_subset=8, seed=5, branch_dims=TINY_BRANCH_DIMS,
    )
    composer.fit(list(toy_samples[:48]))
    return composer


@pytest.fixture(scope="session")
def mini_checkpoint_dir(tmp_path_factory, mini_composer):
    directory = tmp_path_factory.mktemp("ckpts")
    mini_composer.save(directory / "mini.ckpt")
    return directory
