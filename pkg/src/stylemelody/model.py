"""Fused three-branch recurrent generator and sequence discriminator.

Each attribute branch (pitch, duration, rest) is a two-layer LSTM. The
first ("fusion") layer couples the branches: its candidate cell sums
contributions from the previous fusion-layer hidden states of *all three*
branches, while its gates remain own-branch vanilla. The second ("output")
layer is an independent vanilla LSTM per branch feeding a linear head over
that attribute's classes.

Per step, a branch consumes the lyric vector x_t, the embedded previous
token of its own attribute, and its style one-hot vector. All math is
float64 for exact gradient verification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import torch
from torch import Tensor, nn

from .notes import ATTRIBUTES

DTYPE = torch.float64


@dataclass(frozen=True)
class BranchConfig:
    embed_dim: int
    hidden_dim: int   # output-layer state size
    lstm_units: int   # fusion-layer state size
    output_dim: int   # number of attribute classes K
    style_dim: int    # length of the branch's style one-hot vector

    def __post_init__(self):
        for name in ("embed_dim", "hidden_dim", "lstm_units", "output_dim", "style_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


@dataclass(frozen=True)
class ModelConfig:
    lyric_dim: int
    branches: Mapping[str, BranchConfig]
    disc_embed_dims: Mapping[str, int] = field(
        default_factory=lambda: {"pitch": 128, "duration": 64, "rest": 32}
    )
    disc_hidden_dim: int = 32
    disc_lstm_units: int = 64

    def __post_init__(self):
        if self.lyric_dim < 1:
            raise ValueError("lyric_dim must be >= 1")
        missing = set(ATTRIBUTES) - set(self.branches)
        if missing:
            raise ValueError(f"missing branch configs for {sorted(missing)}")

    @property
    def style_dim_total(self) -> int:
        return sum(self.branches[a].style_dim for a in ATTRIBUTES)

    def to_manifest(self) -> dict:
        return {
            "lyric_dim": self.lyric_dim,
            "branches": {
                a: vars(self.branches[a]) for a in ATTRIBUTES
            },
            "disc_embed_dims": dict(self.disc_embed_dims),
            "disc_hidden_dim": self.disc_hidden_dim,
            "disc_lstm_units": self.disc_lstm_units,
        }

    @staticmethod
    def from_manifest(data: dict) -> "ModelConfig":
        return ModelConfig(
            lyric_dim=data["lyric_dim"],
            branches={a: BranchConfig(**data["branches"][a]) for a in ATTRIBUTES},
            disc_embed_dims=dict(data["disc_embed_dims"]),
            disc_hidden_dim=data["disc_hidden_dim"],
            disc_lstm_units=data["disc_lstm_units"],
        )


# Table-2-scale defaults: (embed, hidden, units, output-classes)
DEFAULT_BRANCH_DIMS = {
    "pitch": (128, 32, 64),
    "duration": (64, 16, 32),
    "rest": (32, 8, 16),
}


def default_model_config(
    lyric_dim: int,
    output_dims: Mapping[str, int],
    style_dims: Mapping[str, int],
    branch_dims: Mapping[str, tuple[int, int, int]] | None = None,
) -> ModelConfig:
    dims = dict(DEFAULT_BRANCH_DIMS)
    if branch_dims:
        dims.update({a: tuple(branch_dims[a]) for a in branch_dims})
    branches = {
        a: BranchConfig(
            embed_dim=dims[a][0],
            hidden_dim=dims[a][1],
            lstm_units=dims[a][2],
            output_dim=output_dims[a],
            style_dim=style_dims[a],
        )
        for a in ATTRIBUTES
    }
    return ModelConfig(lyric_dim=lyric_dim, branches=branches)


def _orthogonal(rows: int, cols: int, generator: torch.Generator) -> Tensor:
    """Deterministic orthogonal matrix from the QR of a seeded normal draw."""
    a = torch.randn(max(rows, cols), min(rows, cols), generator=generator, dtype=DTYPE)
    q, r = torch.linalg.qr(a)
    q = q * torch.sign(torch.diagonal(r)).unsqueeze(0)
    return q if rows >= cols else q.T


def _xavier_uniform(rows: int, cols: int, generator: torch.Generator) -> Tensor:
    bound = (6.0 / (rows + cols)) ** 0.5
    return (torch.rand(rows, cols, generator=generator, dtype=DTYPE) * 2 - 1) * bound


def _gate_matrix(state: int, inp: int, generator: torch.Generator) -> Tensor:
    """Gate weight over [h, x]: orthogonal recurrent block, Xavier input block."""
    return torch.cat([_orthogonal(state, state, generator), _xavier_uniform(state, inp, generator)], dim=1)


class _Branch(nn.Module):
    """Parameters of one attribute branch."""

    def __init__(self, name: str, cfg: BranchConfig, lyric_dim: int, unit_sizes: Mapping[str, int]):
        super().__init__()
        self.name = name
        self.cfg = cfg
        self.input_dim = lyric_dim + cfg.embed_dim + cfg.style_dim
        u, h, k = cfg.lstm_units, cfg.hidden_dim, cfg.output_dim

        z = lambda *shape: nn.Parameter(torch.zeros(*shape, dtype=DTYPE))
        self.embed = z(k, cfg.embed_dim)
        self.start = z(cfg.embed_dim)
        # fusion layer: gates over [h_in, input]; candidate split into the
        # input map plus one recurrent map per source branch
        self.w_i, self.w_f, self.w_o = z(u, u + self.input_dim), z(u, u + self.input_dim), z(u, u + self.input_dim)
        self.b_i, self.b_f, self.b_o = z(u), z(u), z(u)
        self.w_c_in = z(u, self.input_dim)
        self.fuse_u = nn.ParameterDict({src: z(u, unit_sizes[src]) for src in ATTRIBUTES})
        self.b_c_in = z(u)
        # output layer: vanilla LSTM over [h_out, h_in]
        self.w_i2, self.w_f2, self.w_o2 = z(h, h + u), z(h, h + u), z(h, h + u)
        self.b_i2, self.b_f2, self.b_o2 = z(h), z(h), z(h)
        self.w_c_out, self.u_c_out, self.b_c_out = z(h, u), z(h, h), z(h)
        self.w_y, self.b_y = z(k, h), z(k)


def _lstm_gates(z: Tensor, w_i, b_i, w_f, b_f, w_o, b_o):
    return (
        torch.sigmoid(z @ w_i.T + b_i),
        torch.sigmoid(z @ w_f.T + b_f),
        torch.sigmoid(z @ w_o.T + b_o),
    )


class MemoryFusionGenerator(nn.Module):
    """Three coupled two-layer LSTM branches with per-attribute heads."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        unit_sizes = {a: config.branches[a].lstm_units for a in ATTRIBUTES}
        self.branches = nn.ModuleDict(
            {a: _Branch(a, config.branches[a], config.lyric_dim, unit_sizes) for a in ATTRIBUTES}
        )

    def init_state(self, batch: int) -> dict[str, dict[str, Tensor]]:
        state = {}
        for a in ATTRIBUTES:
            cfg = self.config.branches[a]
            state[a] = {
                "c_in": torch.zeros(batch, cfg.lstm_units, dtype=DTYPE),
                "h_in": torch.zeros(batch, cfg.lstm_units, dtype=DTYPE),
                "c_out": torch.zeros(batch, cfg.hidden_dim, dtype=DTYPE),
                "h_out": torch.zeros(batch, cfg.hidden_dim, dtype=DTYPE),
            }
        return state

    def step_embedded(
        self,
        state: dict[str, dict[str, Tensor]],
        x_t: Tensor,
        prev_embedded: Mapping[str, Tensor],
        style: Mapping[str, Tensor],
    ) -> tuple[dict, dict[str, Tensor]]:
        """One recurrent step with already-embedded previous tokens."""
        if x_t.shape[-1] != self.config.lyric_dim:
            raise ValueError(f"lyric vector has dim {x_t.shape[-1]}, expected {self.config.lyric_dim}")
        for a in ATTRIBUTES:
            if not torch.isfinite(state[a]["h_in"]).all():
                raise FloatingPointError(f"non-finite recurrent state in branch {a}")
        # all fusion candidates read the same pre-update hidden states
        h_in_prev = {a: state[a]["h_in"] for a in ATTRIBUTES}
        new_state: dict[str, dict[str, Tensor]] = {}
        logits: dict[str, Tensor] = {}
        for a in ATTRIBUTES:
            br: _Branch = self.branches[a]
            inp = torch.cat([x_t, prev_embedded[a], style[a]], dim=-1)
            if inp.shape[-1] != br.input_dim:
                raise ValueError(
                    f"branch {a}: step input has dim {inp.shape[-1]}, expected {br.input_dim}"
                )
            z = torch.cat([h_in_prev[a], inp], dim=-1)
            i_g, f_g, o_g = _lstm_gates(z, br.w_i, br.b_i, br.w_f, br.b_f, br.w_o, br.b_o)
            cand = inp @ br.w_c_in.T + br.b_c_in
            for src in ATTRIBUTES:
                cand = cand + h_in_prev[src] @ br.fuse_u[src].T
            c_in = f_g * state[a]["c_in"] + i_g * torch.tanh(cand)
            h_in = o_g * torch.tanh(c_in)

            z2 = torch.cat([state[a]["h_out"], h_in], dim=-1)
            i2, f2, o2 = _lstm_gates(z2, br.w_i2, br.b_i2, br.w_f2, br.b_f2, br.w_o2, br.b_o2)
            cand2 = torch.tanh(h_in @ br.w_c_out.T + state[a]["h_out"] @ br.u_c_out.T + br.b_c_out)
            c_out = f2 * state[a]["c_out"] + i2 * cand2
            h_out = o2 * torch.tanh(c_out)

            new_state[a] = {"c_in": c_in, "h_in": h_in, "c_out": c_out, "h_out": h_out}
            logits[a] = h_out @ br.w_y.T + br.b_y
        return new_state, logits

    def step(
        self,
        state: dict[str, dict[str, Tensor]],
        x_t: Tensor,
        prev_tokens: Mapping[str, Tensor],
        style: Mapping[str, Tensor],
    ) -> tuple[dict, dict[str, Tensor]]:
        """One step from previous-token one-hots (or simplex vectors)."""
        prev_embedded = {a: prev_tokens[a] @ self.branches[a].embed for a in ATTRIBUTES}
        return self.step_embedded(state, x_t, prev_embedded, style)

    def _start_embeddings(self, batch: int) -> dict[str, Tensor]:
        return {a: self.branches[a].start.unsqueeze(0).expand(batch, -1) for a in ATTRIBUTES}

    def rollout(
        self,
        x: Tensor,
        style: Mapping[str, Tensor],
        sampler: Callable[[Tensor], tuple[Tensor, Tensor]],
        length: int | None = None,
        initial_tokens: Mapping[str, Tensor] | None = None,
    ) -> "RolloutResult":
        """Autoregressive generation: step t feeds on step t-1's samples.

        Returns per-branch logits, soft simplex samples, and straight-through
        hard one-hots, each of shape [batch, T, K].
        """
        batch, total_t = x.shape[0], x.shape[1]
        t_max = total_t if length is None else min(length, total_t)
        if t_max < 1:
            raise ValueError("rollout length must be >= 1")
        state = self.init_state(batch)
        if initial_tokens is None:
            prev_emb = self._start_embeddings(batch)
        else:
            prev_emb = {a: initial_tokens[a] @ self.branches[a].embed for a in ATTRIBUTES}
        logits = {a: [] for a in ATTRIBUTES}
        soft = {a: [] for a in ATTRIBUTES}
        hard = {a: [] for a in ATTRIBUTES}
        for t in range(t_max):
            state, step_logits = self.step_embedded(state, x[:, t], prev_emb, style)
            prev_emb = {}
            for a in ATTRIBUTES:
                s, h = sampler(step_logits[a])
                logits[a].append(step_logits[a])
                soft[a].append(s)
                hard[a].append(h)
                prev_emb[a] = h @ self.branches[a].embed
        stack = lambda d: {a: torch.stack(d[a], dim=1) for a in ATTRIBUTES}
        return RolloutResult(logits=stack(logits), soft=stack(soft), hard=stack(hard), state=state)

    def teacher_logits(
        self, x: Tensor, style: Mapping[str, Tensor], targets: Mapping[str, Tensor]
    ) -> dict[str, Tensor]:
        """Teacher-forced logits: the previous token is the ground truth.

        ``targets`` holds one-hot tensors [batch, T, K]; step t's previous
        token is targets[:, t-1] and step 0 uses the learned start embedding.
        """
        batch, total_t = x.shape[0], x.shape[1]
        state = self.init_state(batch)
        prev_emb = self._start_embeddings(batch)
        logits = {a: [] for a in ATTRIBUTES}
        for t in range(total_t):
            state, step_logits = self.step_embedded(state, x[:, t], prev_emb, style)
            for a in ATTRIBUTES:
                logits[a].append(step_logits[a])
            prev_emb = {a: targets[a][:, t] @ self.branches[a].embed for a in ATTRIBUTES}
        return {a: torch.stack(logits[a], dim=1) for a in ATTRIBUTES}

    def cross_fusion_parameters(self):
        """The cross-branch recurrent candidate maps U^(i->j), i != j."""
        for a in ATTRIBUTES:
            for src in ATTRIBUTES:
                if src != a:
                    yield f"branches.{a}.fuse_u.{src}", self.branches[a].fuse_u[src]


@dataclass
class RolloutResult:
    logits: dict[str, Tensor]
    soft: dict[str, Tensor]
    hard: dict[str, Tensor]
    state: dict


class SequenceDiscriminator(nn.Module):
    """Single-LSTM critic over token/lyric/style step inputs.

    Token inputs may be hard one-hots or soft simplex rows; both pass
    through the same embedding matrix product. Produces one logit per
    sequence from the final hidden state via a tanh projection.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        z = lambda *shape: nn.Parameter(torch.zeros(*shape, dtype=DTYPE))
        self.embed = nn.ParameterDict(
            {a: z(config.branches[a].output_dim, config.disc_embed_dims[a]) for a in ATTRIBUTES}
        )
        self.input_dim = (
            sum(config.disc_embed_dims[a] for a in ATTRIBUTES)
            + config.lyric_dim
            + config.style_dim_total
        )
        u, h = config.disc_lstm_units, config.disc_hidden_dim
        self.w_i, self.w_f, self.w_o, self.w_c = (z(u, u + self.input_dim) for _ in range(4))
        self.b_i, self.b_f, self.b_o, self.b_c = (z(u) for _ in range(4))
        self.w_dense, self.b_dense = z(h, u), z(h)
        self.w_head, self.b_head = z(1, h), z(1)

    def score(self, tokens: Mapping[str, Tensor], x: Tensor, style_full: Tensor) -> Tensor:
        """Scalar realness logit per batch element."""
        batch, total_t = x.shape[0], x.shape[1]
        for a in ATTRIBUTES:
            if tokens[a].shape[:2] != (batch, total_t):
                raise ValueError(
                    f"token tensor for {a} has shape {tuple(tokens[a].shape)}, "
                    f"expected ({batch}, {total_t}, K)"
                )
        embedded = [tokens[a] @ self.embed[a] for a in ATTRIBUTES]
        u = self.w_i.shape[0]
        h_t = torch.zeros(batch, u, dtype=DTYPE)
        c_t = torch.zeros(batch, u, dtype=DTYPE)
        for t in range(total_t):
            inp = torch.cat([e[:, t] for e in embedded] + [x[:, t], style_full], dim=-1)
            z2 = torch.cat([h_t, inp], dim=-1)
            i_g, f_g, o_g = _lstm_gates(z2, self.w_i, self.b_i, self.w_f, self.b_f, self.w_o, self.b_o)
            cand = torch.tanh(z2 @ self.w_c.T + self.b_c)
            c_t = f_g * c_t + i_g * cand
            h_t = o_g * torch.tanh(c_t)
        hidden = torch.tanh(h_t @ self.w_dense.T + self.b_dense)
        return (hidden @ self.w_head.T + self.b_head).squeeze(-1)

    forward = score


def init_params(
    config: ModelConfig, seed: int = 0
) -> tuple[MemoryFusionGenerator, SequenceDiscriminator]:
    """Deterministic parameter initialization for both networks.

    Recurrent blocks are orthogonal, input blocks Xavier-uniform, forget
    gate biases 1.0, embeddings small normal draws. The same seed always
    yields bit-identical parameters.
    """
    gen = MemoryFusionGenerator(config)
    disc = SequenceDiscriminator(config)
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for a in ATTRIBUTES:
            br: _Branch = gen.branches[a]
            u, h = br.cfg.lstm_units, br.cfg.hidden_dim
            br.embed.copy_(torch.randn(br.embed.shape, generator=g, dtype=DTYPE) * 0.1)
            br.start.copy_(torch.randn(br.start.shape, generator=g, dtype=DTYPE) * 0.1)
            for w in (br.w_i, br.w_f, br.w_o):
                w.copy_(_gate_matrix(u, br.input_dim, g))
            br.b_f.fill_(1.0)
            br.w_c_in.copy_(_xavier_uniform(u, br.input_dim, g))
            for src in ATTRIBUTES:
                br.fuse_u[src].copy_(_orthogonal(u, gen.config.branches[src].lstm_units, g))
            for w in (br.w_i2, br.w_f2, br.w_o2):
                w.copy_(_gate_matrix(h, u, g))
            br.b_f2.fill_(1.0)
            br.w_c_out.copy_(_xavier_uniform(h, u, g))
            br.u_c_out.copy_(_orthogonal(h, h, g))
            br.w_y.copy_(_xavier_uniform(br.cfg.output_dim, h, g))
        for a in ATTRIBUTES:
            disc.embed[a].copy_(torch.randn(disc.embed[a].shape, generator=g, dtype=DTYPE) * 0.1)
        u = config.disc_lstm_units
        for w in (disc.w_i, disc.w_f, disc.w_o, disc.w_c):
            w.copy_(_gate_matrix(u, disc.input_dim, g))
        disc.b_f.fill_(1.0)
        disc.w_dense.copy_(_xavier_uniform(config.disc_hidden_dim, u, g))
        disc.w_head.copy_(_xavier_uniform(1, config.disc_hidden_dim, g))
    return gen, disc
