"""Training losses: sequence-statistic MSE and relativistic GAN terms.

The sequence statistics treat each step's class distribution as a random
class index in 1..K: the per-step expectation sum_k k*p_k is averaged over
time for the mean and spread with divisor T-1 for the sample variance.
On hard one-hots these reduce exactly to the statistics of the decoded
index sequence, which keeps the loss comparable to ground-truth statistics
computed in class-index space.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else torch.as_tensor(x, dtype=torch.float64)


def _check_simplex(probs: Tensor) -> None:
    if probs.shape[-1] < 1 or probs.ndim < 2:
        raise ValueError(f"expected [..., T, K] probability rows, got shape {tuple(probs.shape)}")
    sums = probs.sum(dim=-1)
    if not torch.allclose(sums, torch.ones_like(sums), atol=1e-6):
        raise ValueError("probability rows must sum to 1")


def step_expectations(probs) -> Tensor:
    """Expected class index (1..K) per step: [..., T, K] -> [..., T]."""
    probs = _as_tensor(probs)
    k = torch.arange(1, probs.shape[-1] + 1, dtype=probs.dtype)
    return probs @ k


def soft_sequence_mean(probs) -> Tensor:
    """Time average of the per-step expected class index."""
    probs = _as_tensor(probs)
    _check_simplex(probs)
    return step_expectations(probs).mean(dim=-1)


def soft_sequence_variance(probs) -> Tensor:
    """Sample variance (divisor T-1) of the per-step expected class index."""
    probs = _as_tensor(probs)
    _check_simplex(probs)
    if probs.shape[-2] < 2:
        raise ValueError("variance needs at least 2 steps")
    e = step_expectations(probs)
    return ((e - e.mean(dim=-1, keepdim=True)) ** 2).sum(dim=-1) / (e.shape[-1] - 1)


def sequence_stat_loss(
    probs,
    target_mean,
    target_var,
    alpha_mean: float = 1.0,
    alpha_var: float = 1.0,
) -> Tensor:
    """Batch-mean squared error of sequence means and variances.

    ``probs`` is [batch, T, K]; targets are per-sequence statistics in
    class-index space. Normalizing by the batch keeps the weights
    batch-size independent.
    """
    probs = _as_tensor(probs)
    if probs.ndim != 3:
        raise ValueError(f"expected [batch, T, K], got shape {tuple(probs.shape)}")
    if probs.shape[0] == 0:
        raise ValueError("empty batch")
    target_mean = _as_tensor(target_mean)
    target_var = _as_tensor(target_var)
    m_hat = soft_sequence_mean(probs)
    v_hat = soft_sequence_variance(probs)
    return alpha_mean * ((m_hat - target_mean) ** 2).mean() + alpha_var * (
        (v_hat - target_var) ** 2
    ).mean()


def rsgan_losses(real_logits, fake_logits) -> tuple[Tensor, Tensor]:
    """Relativistic standard GAN losses from paired critic logits.

    d_loss = mean softplus(-(C(real) - C(fake)))
    g_loss = mean softplus(-(C(fake) - C(real)))
    """
    real_logits = _as_tensor(real_logits)
    fake_logits = _as_tensor(fake_logits)
    if real_logits.shape != fake_logits.shape:
        raise ValueError(
            f"logit shapes differ: {tuple(real_logits.shape)} vs {tuple(fake_logits.shape)}"
        )
    diff = real_logits - fake_logits
    return F.softplus(-diff).mean(), F.softplus(diff).mean()


def cross_entropy_sum(logits: dict[str, Tensor], target_indices: dict[str, Tensor]) -> Tensor:
    """Per-attribute cross-entropies (mean over batch and time), summed.

    ``target_indices`` are 0-based class indices [batch, T].
    """
    total = None
    for attr, branch_logits in logits.items():
        flat = branch_logits.reshape(-1, branch_logits.shape[-1])
        ce = F.cross_entropy(flat, target_indices[attr].reshape(-1))
        total = ce if total is None else total + ce
    return total
