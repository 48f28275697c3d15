"""Training engine: CE pretraining, adversarial schedule, checkpointing.

The schedule follows the two-phase regimen: teacher-forced cross-entropy
pretraining, then adversarial epochs where the critic trains on a
relativistic loss and the generator on the relativistic term plus the
per-attribute sequence-statistic loss. All randomness flows through named,
per-epoch-derived streams, so a run is reproducible and a resumed run is
bit-compatible with an uninterrupted one.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import torch
from torch import Tensor

from . import evaluation
from .checkpoint import config_hash, load_container, save_container
from .embedding import EmbeddingTable, embed_lyrics
from .losses import cross_entropy_sum, rsgan_losses, sequence_stat_loss
from .model import DTYPE, MemoryFusionGenerator, SequenceDiscriminator
from .notes import ATTRIBUTES, AttributeVocab, PairedSample
from .sampling import GumbelSampler
from .style import StyleEncoder, extract_style_features

logger = logging.getLogger(__name__)

LOSS_MODES = ("rsgan", "rsgan+ce", "rsgan+seqloss")


@dataclass
class TrainConfig:
    pretrain_epochs: int = 40
    adversarial_epochs: int = 120
    batch_size: int = 512
    lr_pretrain: float = 1e-3
    lr_generator: float = 1e-4
    lr_discriminator: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.99
    grad_clip: float = 5.0
    gumbel_max_temperature: float = 1000.0
    alpha_mean: float = 1.0
    alpha_var: float = 1.0
    loss_mode: str = "rsgan+seqloss"
    seed: int = 0
    checkpoint_interval: int = 10
    eval_interval: int = 1
    eval_subset: int = 64
    deterministic: bool = True

    def __post_init__(self):
        positive = (
            "batch_size", "lr_pretrain", "lr_generator", "lr_discriminator",
            "beta1", "beta2", "grad_clip", "gumbel_max_temperature",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.pretrain_epochs < 0 or self.adversarial_epochs < 0:
            raise ValueError("epoch counts must be non-negative")
        if self.alpha_mean < 0 or self.alpha_var < 0:
            raise ValueError("loss weights must be non-negative")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")


def temperature_schedule(epoch: int, total_epochs: int, tau_max: float) -> float:
    """Exponential anneal from 1 at epoch 0 to tau_max at the final epoch."""
    if epoch < 0 or total_epochs < 1:
        raise ValueError("epoch must be >= 0 and total_epochs >= 1")
    if total_epochs == 1:
        return tau_max
    return float(tau_max ** (min(epoch, total_epochs - 1) / (total_epochs - 1)))


def stream_seed(base_seed: int, name: str, epoch: int = 0) -> int:
    """Stable per-purpose RNG seed; keeps streams independent and resumable."""
    digest = hashlib.sha256(f"{base_seed}:{name}:{epoch}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, snapshot_path: str | None = None):
        super().__init__(message + (f" (snapshot: {snapshot_path})" if snapshot_path else ""))
        self.snapshot_path = snapshot_path


@dataclass
class TrainingData:
    """Pre-encoded tensors for one split."""

    x: Tensor                       # [N, T, lyric_dim]
    tokens: dict[str, Tensor]       # [N, T] 0-based class indices
    onehots: dict[str, Tensor]      # [N, T, K]
    style: dict[str, Tensor]        # [N, L_attr]
    style_full: Tensor              # [N, L_total]
    stat_mean: dict[str, Tensor]    # [N] ground-truth mean in index space
    stat_var: dict[str, Tensor]     # [N]

    def __len__(self) -> int:
        return self.x.shape[0]

    def batch(self, idx: np.ndarray) -> "TrainingData":
        sel = torch.as_tensor(idx, dtype=torch.long)
        pick = lambda d: {a: d[a][sel] for a in d}
        return TrainingData(
            x=self.x[sel], tokens=pick(self.tokens), onehots=pick(self.onehots),
            style=pick(self.style), style_full=self.style_full[sel],
            stat_mean=pick(self.stat_mean), stat_var=pick(self.stat_var),
        )


def encode_training_data(
    samples: Iterable[PairedSample],
    vocabs: Mapping[str, AttributeVocab],
    style_encoder: StyleEncoder,
    word_table: EmbeddingTable,
    syllable_table: EmbeddingTable,
) -> TrainingData:
    samples = list(samples)
    if not samples:
        raise ValueError("no samples to encode")
    xs, style_rows = [], {a: [] for a in ATTRIBUTES}
    tokens = {a: [] for a in ATTRIBUTES}
    for s in samples:
        xs.append(embed_lyrics(s.lyrics, word_table, syllable_table).vectors)
        vec = style_encoder.encode(
            s.style if s.style is not None else extract_style_features(s.melody)
        )
        for a in ATTRIBUTES:
            style_rows[a].append(vec.branch(a))
            tokens[a].append(vocabs[a].encode(s.melody.values(a)) - 1)
    x = torch.as_tensor(np.stack(xs), dtype=DTYPE)
    tok = {a: torch.as_tensor(np.stack(tokens[a]), dtype=torch.long) for a in ATTRIBUTES}
    onehots, stat_mean, stat_var = {}, {}, {}
    for a in ATTRIBUTES:
        k = vocabs[a].size
        oh = torch.zeros(*tok[a].shape, k, dtype=DTYPE)
        oh.scatter_(-1, tok[a].unsqueeze(-1), 1.0)
        onehots[a] = oh
        index1 = tok[a].to(DTYPE) + 1.0
        stat_mean[a] = index1.mean(dim=1)
        stat_var[a] = index1.var(dim=1, unbiased=True)
    style = {a: torch.as_tensor(np.stack(style_rows[a]), dtype=DTYPE) for a in ATTRIBUTES}
    style_full = torch.cat([style[a] for a in ATTRIBUTES], dim=1)
    return TrainingData(
        x=x, tokens=tok, onehots=onehots, style=style, style_full=style_full,
        stat_mean=stat_mean, stat_var=stat_var,
    )


class Trainer:
    """Single-writer training loop over the generator/discriminator pair."""

    def __init__(
        self,
        generator: MemoryFusionGenerator,
        discriminator: SequenceDiscriminator,
        config: TrainConfig,
        train_data: TrainingData,
        valid_data: TrainingData | None = None,
        manifests: dict | None = None,
        extra_arrays: dict | None = None,
        run_dir: str | Path | None = None,
    ):
        if config.deterministic:
            torch.set_num_threads(1)
        self.generator = generator
        self.discriminator = discriminator
        self.config = config
        self.train_data = train_data
        self.valid_data = valid_data
        self.manifests = manifests or {}
        self.extra_arrays = extra_arrays or {}
        self.run_dir = Path(run_dir) if run_dir else None
        self.epoch = 0
        self.history: list[dict] = []
        self._g_params = [p for _, p in sorted(generator.named_parameters())]
        self._d_params = [p for _, p in sorted(discriminator.named_parameters())]
        betas = (config.beta1, config.beta2)
        self.opt_pre = torch.optim.Adam(self._g_params, lr=config.lr_pretrain, betas=betas)
        self.opt_g = torch.optim.Adam(self._g_params, lr=config.lr_generator, betas=betas)
        self.opt_d = torch.optim.Adam(self._d_params, lr=config.lr_discriminator, betas=betas)

    # -- epoch plumbing ----------------------------------------------------

    def _batches(self, epoch: int) -> list[np.ndarray]:
        rng = np.random.default_rng(stream_seed(self.config.seed, "order", epoch))
        order = rng.permutation(len(self.train_data))
        b = self.config.batch_size
        return [order[i : i + b] for i in range(0, len(order), b)]

    def _gumbel_generator(self, epoch: int) -> torch.Generator:
        return torch.Generator().manual_seed(stream_seed(self.config.seed, "gumbel", epoch))

    def _diverged(self, what: str) -> TrainingDiverged:
        snapshot = None
        if self.run_dir is not None:
            try:
                snapshot = str(self.save_checkpoint(self.run_dir / "diverged.ckpt"))
            except Exception:
                snapshot = None
        return TrainingDiverged(f"non-finite {what} at epoch {self.epoch}", snapshot)

    def _guard_finite(self, value: Tensor, what: str):
        if not torch.isfinite(value).all():
            raise self._diverged(what)

    def _clip(self, params) -> float:
        return float(torch.nn.utils.clip_grad_norm_(params, self.config.grad_clip))

    # -- pretraining -------------------------------------------------------

    def ce_pretrain_epoch(self) -> float:
        """One teacher-forced cross-entropy epoch; returns the mean CE."""
        total, count = 0.0, 0
        for idx in self._batches(self.epoch):
            batch = self.train_data.batch(idx)
            try:
                logits = self.generator.teacher_logits(batch.x, batch.style, batch.onehots)
            except FloatingPointError as exc:
                raise self._diverged(f"forward pass ({exc})")
            ce = cross_entropy_sum(logits, batch.tokens)
            self._guard_finite(ce, "pretraining CE")
            self.opt_pre.zero_grad()
            ce.backward()
            self._clip(self._g_params)
            self.opt_pre.step()
            total += ce.detach().item() * len(idx)
            count += len(idx)
        return total / count

    # -- adversarial stage ---------------------------------------------------

    def temperature_at(self, adversarial_epoch: int) -> float:
        return temperature_schedule(
            adversarial_epoch, self.config.adversarial_epochs, self.config.gumbel_max_temperature
        )

    def adversarial_epoch(self, adversarial_epoch: int) -> dict:
        """One alternating critic/generator epoch at the scheduled temperature."""
        cfg = self.config
        tau = self.temperature_at(adversarial_epoch)
        sampler = GumbelSampler(tau, self._gumbel_generator(self.epoch))
        sums = {"d_loss": 0.0, "g_rsgan": 0.0, "g_ce": 0.0}
        seq_sums = {a: 0.0 for a in ATTRIBUTES}
        count = 0
        for idx in self._batches(self.epoch):
            batch = self.train_data.batch(idx)
            try:
                roll = self.generator.rollout(batch.x, batch.style, sampler)
            except FloatingPointError as exc:
                raise self._diverged(f"rollout ({exc})")
            fake_detached = {a: roll.hard[a].detach() for a in ATTRIBUTES}

            d_real = self.discriminator.score(batch.onehots, batch.x, batch.style_full)
            d_fake = self.discriminator.score(fake_detached, batch.x, batch.style_full)
            d_loss, _ = rsgan_losses(d_real, d_fake)
            self._guard_finite(d_loss, "discriminator loss")
            self.opt_d.zero_grad()
            d_loss.backward()
            self._clip(self._d_params)
            self.opt_d.step()

            g_real = self.discriminator.score(batch.onehots, batch.x, batch.style_full)
            g_fake = self.discriminator.score(roll.hard, batch.x, batch.style_full)
            _, g_rsgan = rsgan_losses(g_real, g_fake)
            g_total = g_rsgan
            seq_terms = {}
            if cfg.loss_mode == "rsgan+seqloss" and (cfg.alpha_mean > 0 or cfg.alpha_var > 0):
                for a in ATTRIBUTES:
                    term = sequence_stat_loss(
                        roll.soft[a], batch.stat_mean[a], batch.stat_var[a],
                        cfg.alpha_mean, cfg.alpha_var,
                    )
                    seq_terms[a] = term
                    g_total = g_total + term
            g_ce = None
            if cfg.loss_mode == "rsgan+ce":
                logits = self.generator.teacher_logits(batch.x, batch.style, batch.onehots)
                g_ce = cross_entropy_sum(logits, batch.tokens)
                g_total = g_total + g_ce
            self._guard_finite(g_total, "generator loss")
            self.opt_g.zero_grad()
            g_total.backward()
            self._clip(self._g_params)
            self.opt_g.step()

            n = len(idx)
            sums["d_loss"] += d_loss.detach().item() * n
            sums["g_rsgan"] += g_rsgan.detach().item() * n
            sums["g_ce"] += g_ce.detach().item() * n if g_ce is not None else 0.0
            for a, term in seq_terms.items():
                seq_sums[a] += term.detach().item() * n
            count += n
        record = {
            "epoch": self.epoch,
            "phase": "adversarial",
            "temperature": tau,
            "d_loss": sums["d_loss"] / count,
            "g_rsgan": sums["g_rsgan"] / count,
        }
        if cfg.loss_mode == "rsgan+seqloss":
            record["seq_loss"] = {a: seq_sums[a] / count for a in ATTRIBUTES}
        if cfg.loss_mode == "rsgan+ce":
            record["g_ce"] = sums["g_ce"] / count
        return record

    # -- validation tracking -------------------------------------------------

    def validation_metrics(self, tau: float) -> dict:
        """Self-BLEU and style-feature MSE of generations for validation lyrics."""
        data = self.valid_data if self.valid_data is not None else self.train_data
        n = min(self.config.eval_subset, len(data))
        batch = data.batch(np.arange(n))
        sampler = GumbelSampler(tau, torch.Generator().manual_seed(
            stream_seed(self.config.seed, "validation", self.epoch)
        ))
        with torch.no_grad():
            roll = self.generator.rollout(batch.x, batch.style, sampler)
        gen_tokens = {a: roll.hard[a].argmax(dim=-1).numpy() for a in ATTRIBUTES}
        bleu = evaluation.self_bleu([seq.tolist() for seq in gen_tokens["pitch"]], max_n=3)
        mses = {}
        for a in ATTRIBUTES:
            gen_idx = torch.as_tensor(gen_tokens[a], dtype=DTYPE) + 1.0
            mses[f"{a}.avg_mse"] = float(((gen_idx.mean(dim=1) - batch.stat_mean[a]) ** 2).mean())
            mses[f"{a}.var_mse"] = float(
                ((gen_idx.var(dim=1, unbiased=True) - batch.stat_var[a]) ** 2).mean()
            )
        return {"self_bleu": bleu, "style_index_mse": mses}

    # -- full schedule ---------------------------------------------------------

    def train(self, progress: bool = True) -> list[dict]:
        """Run the remaining schedule; returns the accumulated loss history."""
        cfg = self.config
        total = cfg.pretrain_epochs + cfg.adversarial_epochs
        while self.epoch < total:
            if self.epoch < cfg.pretrain_epochs:
                ce = self.ce_pretrain_epoch()
                record = {"epoch": self.epoch, "phase": "pretrain", "ce": ce}
            else:
                adv_epoch = self.epoch - cfg.pretrain_epochs
                record = self.adversarial_epoch(adv_epoch)
                if cfg.eval_interval and adv_epoch % cfg.eval_interval == 0:
                    record["validation"] = self.validation_metrics(record["temperature"])
            self.history.append(record)
            self._append_log(record)
            if progress:
                logger.info("epoch %d/%d %s", self.epoch + 1, total, record["phase"])
            self.epoch += 1
            if self.run_dir is not None and (
                self.epoch % cfg.checkpoint_interval == 0 or self.epoch == total
            ):
                self.save_checkpoint(self.run_dir / f"epoch_{self.epoch:04d}.ckpt")
        return self.history

    # -- persistence -----------------------------------------------------------

    def _append_log(self, record: dict) -> None:
        if self.run_dir is None:
            return
        self.run_dir.mkdir(parents=True, exist_ok=True)
        with open(self.run_dir / "train_log.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def _optimizer_arrays(self, prefix: str, opt: torch.optim.Adam) -> tuple[dict, dict]:
        arrays, steps = {}, {}
        state = opt.state_dict()["state"]
        for i, moments in state.items():
            arrays[f"{prefix}.{i}.exp_avg"] = moments["exp_avg"].numpy()
            arrays[f"{prefix}.{i}.exp_avg_sq"] = moments["exp_avg_sq"].numpy()
            steps[str(i)] = float(moments["step"])
        return arrays, steps

    def save_checkpoint(self, path: str | Path) -> Path:
        arrays: dict[str, np.ndarray] = dict(self.extra_arrays)
        for name, p in self.generator.named_parameters():
            arrays[f"gen.{name}"] = p.detach().numpy()
        for name, p in self.discriminator.named_parameters():
            arrays[f"disc.{name}"] = p.detach().numpy()
        opt_steps = {}
        for prefix, opt in (("opt_pre", self.opt_pre), ("opt_g", self.opt_g), ("opt_d", self.opt_d)):
            opt_arrays, steps = self._optimizer_arrays(prefix, opt)
            arrays.update(opt_arrays)
            opt_steps[prefix] = steps
        manifests = dict(self.manifests)
        manifests.update(
            {
                "model_config": self.generator.config.to_manifest(),
                "train_config": asdict(self.config),
                "config_hash": config_hash(
                    {"model": self.generator.config.to_manifest(), "train": asdict(self.config)}
                ),
                "train_state": {
                    "epoch": self.epoch,
                    "optimizer_steps": opt_steps,
                    "history": self.history,
                },
            }
        )
        return save_container(path, arrays, manifests)

    def restore(self, path: str | Path) -> None:
        """Load parameters, optimizer moments, and the epoch cursor."""
        arrays, manifests = load_container(path)
        with torch.no_grad():
            for name, p in self.generator.named_parameters():
                p.copy_(torch.as_tensor(arrays[f"gen.{name}"], dtype=DTYPE))
            for name, p in self.discriminator.named_parameters():
                p.copy_(torch.as_tensor(arrays[f"disc.{name}"], dtype=DTYPE))
        state = manifests["train_state"]
        for prefix, opt, params in (
            ("opt_pre", self.opt_pre, self._g_params),
            ("opt_g", self.opt_g, self._g_params),
            ("opt_d", self.opt_d, self._d_params),
        ):
            steps = state["optimizer_steps"].get(prefix, {})
            opt_state = {}
            for key, step in steps.items():
                i = int(key)
                opt_state[i] = {
                    "step": torch.tensor(step),
                    "exp_avg": torch.as_tensor(arrays[f"{prefix}.{key}.exp_avg"], dtype=DTYPE),
                    "exp_avg_sq": torch.as_tensor(arrays[f"{prefix}.{key}.exp_avg_sq"], dtype=DTYPE),
                }
            sd = opt.state_dict()
            sd["state"] = opt_state
            sd["param_groups"][0]["params"] = list(range(len(params)))
            opt.load_state_dict(sd)
        self.epoch = int(state["epoch"])
        self.history = list(state["history"])
