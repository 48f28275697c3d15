"""Token samplers: Gumbel-softmax straight-through and greedy argmax."""

from __future__ import annotations

import torch
from torch import Tensor

_U_EPS = 1e-12


def sample_gumbel(shape, generator: torch.Generator | None = None,
                  dtype=torch.float64) -> Tensor:
    u = torch.rand(shape, generator=generator, dtype=dtype).clamp(_U_EPS, 1.0 - _U_EPS)
    return -torch.log(-torch.log(u))


def _straight_through(soft: Tensor) -> Tensor:
    hard = torch.zeros_like(soft)
    hard.scatter_(-1, soft.argmax(dim=-1, keepdim=True), 1.0)
    # forward value is the hard one-hot exactly (soft - soft.detach() is a
    # true elementwise zero); gradients flow through soft
    return hard + (soft - soft.detach())


def gumbel_softmax_st(
    logits: Tensor,
    temperature: float,
    generator: torch.Generator | None = None,
    noise: Tensor | None = None,
) -> tuple[Tensor, Tensor]:
    """Tempered softmax over noised logits plus its straight-through one-hot.

    soft = softmax((logits + g) / temperature) with g ~ Gumbel(0, 1);
    hard is the one-hot argmax of soft whose backward pass follows soft.
    ``noise`` overrides the Gumbel draw (tests freeze it at zero).
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if not torch.isfinite(logits).all():
        raise FloatingPointError("non-finite logits")
    if noise is None:
        noise = sample_gumbel(logits.shape, generator=generator, dtype=logits.dtype)
    soft = torch.softmax((logits + noise) / temperature, dim=-1)
    return soft, _straight_through(soft)


class GumbelSampler:
    """Stateful sampler: fixed temperature, dedicated RNG stream."""

    def __init__(self, temperature: float, generator: torch.Generator | None = None):
        if not temperature > 0:
            raise ValueError(f"temperature must be positive, got {temperature}")
        self.temperature = temperature
        self.generator = generator

    def __call__(self, logits: Tensor) -> tuple[Tensor, Tensor]:
        return gumbel_softmax_st(logits, self.temperature, generator=self.generator)


class GreedySampler:
    """Deterministic argmax sampling; soft output is the plain softmax."""

    def __call__(self, logits: Tensor) -> tuple[Tensor, Tensor]:
        if not torch.isfinite(logits).all():
            raise FloatingPointError("non-finite logits")
        soft = torch.softmax(logits, dim=-1)
        return soft, _straight_through(soft)
