import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from stylemelody.losses import (
    cross_entropy_sum,
    rsgan_losses,
    sequence_stat_loss,
    soft_sequence_mean,
    soft_sequence_variance,
)


def _onehots(indices, k):
    out = np.zeros((len(indices), k))
    out[np.arange(len(indices)), np.array(indices) - 1] = 1.0
    return out


def test_sequence_mean_examples():
    assert soft_sequence_mean(_onehots([2, 2, 2], 4)).item() == pytest.approx(2.0)
    assert soft_sequence_mean(_onehots([1, 3], 3)).item() == pytest.approx(2.0)
    uniform = np.full((5, 3), 1 / 3)
    assert soft_sequence_mean(uniform).item() == pytest.approx(2.0)


def test_sequence_variance_examples():
    assert soft_sequence_variance(_onehots([2, 2, 2], 4)).item() == pytest.approx(0.0)
    # T=2 one-hots at classes 1 and 3: ((1-2)^2 + (3-2)^2) / 1 = 2
    assert soft_sequence_variance(_onehots([1, 3], 3)).item() == pytest.approx(2.0)
    uniform = np.full((6, 3), 1 / 3)
    assert soft_sequence_variance(uniform).item() == pytest.approx(0.0)


def test_variance_needs_two_steps():
    with pytest.raises(ValueError):
        soft_sequence_variance(_onehots([2], 3))


def test_hard_statistics_match_decoded_oracle():
    rng = np.random.default_rng(0)
    for _ in range(25):
        k = int(rng.integers(2, 9))
        t = int(rng.integers(2, 12))
        indices = rng.integers(1, k + 1, size=t)
        probs = _onehots(indices, k)
        # oracle: plain statistics of the decoded class-index sequence
        assert soft_sequence_mean(probs).item() == pytest.approx(indices.mean(), abs=0)
        assert soft_sequence_variance(probs).item() == pytest.approx(
            indices.var(ddof=1), abs=1e-12
        )


def test_stat_loss_zero_on_exact_match():
    indices = [3, 1, 2, 2]
    probs = torch.as_tensor(_onehots(indices, 4)).unsqueeze(0)
    arr = np.array(indices, dtype=float)
    loss = sequence_stat_loss(probs, [arr.mean()], [arr.var(ddof=1)])
    assert loss.item() == pytest.approx(0.0, abs=1e-9)


def test_stat_loss_single_squared_difference():
    probs = torch.as_tensor(_onehots([2, 2], 3)).unsqueeze(0)  # mean 2, var 0
    loss = sequence_stat_loss(probs, target_mean=[1.0], target_var=[0.0])
    assert loss.item() == pytest.approx(1.0)


def test_stat_loss_weight_linearity():
    probs = torch.as_tensor(_onehots([1, 3, 2], 3)).unsqueeze(0)
    base_mean = sequence_stat_loss(probs, [0.0], [0.0], alpha_mean=1.0, alpha_var=0.0)
    doubled = sequence_stat_loss(probs, [0.0], [0.0], alpha_mean=2.0, alpha_var=0.0)
    var_term = sequence_stat_loss(probs, [0.0], [0.0], alpha_mean=0.0, alpha_var=1.0)
    both = sequence_stat_loss(probs, [0.0], [0.0], alpha_mean=2.0, alpha_var=1.0)
    assert doubled.item() == pytest.approx(2 * base_mean.item())
    assert both.item() == pytest.approx(doubled.item() + var_term.item())


def test_stat_loss_rejects_empty_batch():
    with pytest.raises(ValueError):
        sequence_stat_loss(torch.zeros(0, 3, 2), [], [])


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_stat_loss_nonnegative(seed):
    rng = np.random.default_rng(seed)
    batch, t, k = 2, 4, 3
    raw = rng.random((batch, t, k)) + 1e-9
    probs = raw / raw.sum(axis=-1, keepdims=True)
    loss = sequence_stat_loss(
        torch.as_tensor(probs), rng.normal(size=batch), rng.random(batch)
    )
    assert loss.item() >= 0.0


def test_rsgan_equal_logits_ln2():
    logits = torch.tensor([1.7, -0.3], dtype=torch.float64)
    d, g = rsgan_losses(logits, logits.clone())
    assert d.item() == pytest.approx(math.log(2), abs=1e-9)
    assert g.item() == pytest.approx(math.log(2), abs=1e-9)


def test_rsgan_wide_margin_closed_form():
    d, g = rsgan_losses(torch.tensor([20.0]), torch.tensor([0.0]))
    assert d.item() == pytest.approx(math.log1p(math.exp(-20.0)), rel=1e-9)
    assert d.item() == pytest.approx(2.061e-9, rel=1e-3)
    assert g.item() == pytest.approx(20.0, abs=1e-6)


def test_rsgan_swap_antisymmetry():
    real = torch.tensor([0.5, -2.0, 3.0])
    fake = torch.tensor([1.0, 0.0, -1.0])
    d1, g1 = rsgan_losses(real, fake)
    d2, g2 = rsgan_losses(fake, real)
    assert d1.item() == g2.item()
    assert g1.item() == d2.item()


def test_rsgan_monotone_in_margin():
    margins = torch.linspace(-3, 3, 13)
    losses = [rsgan_losses(torch.tensor([m]), torch.tensor([0.0]))[0].item() for m in margins]
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert all(v >= 0 for v in losses)


def test_rsgan_shape_mismatch():
    with pytest.raises(ValueError):
        rsgan_losses(torch.zeros(2), torch.zeros(3))


def test_cross_entropy_uniform_logits():
    logits = {"pitch": torch.zeros(2, 3, 70, dtype=torch.float64)}
    targets = {"pitch": torch.zeros(2, 3, dtype=torch.long)}
    ce = cross_entropy_sum(logits, targets)
    assert ce.item() == pytest.approx(math.log(70), abs=1e-9)
    assert ce.item() == pytest.approx(4.2485, abs=1e-4)


def test_cross_entropy_perfect_prediction_limit():
    logits = torch.full((1, 2, 4), -1e9, dtype=torch.float64)
    logits[..., 1] = 1e9
    ce = cross_entropy_sum({"pitch": logits}, {"pitch": torch.ones(1, 2, dtype=torch.long)})
    assert ce.item() == pytest.approx(0.0, abs=1e-9)
