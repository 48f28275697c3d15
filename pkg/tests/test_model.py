import numpy as np
import pytest
import torch

from stylemelody.model import (
    BranchConfig,
    ModelConfig,
    MemoryFusionGenerator,
    SequenceDiscriminator,
    default_model_config,
    init_params,
)
from stylemelody.notes import ATTRIBUTES
from stylemelody.sampling import GreedySampler

from conftest import random_inputs, small_model_config
from fusion_oracle import compare_ablated_generator


def _tiny_config():
    return ModelConfig(
        lyric_dim=3,
        branches={
            "pitch": BranchConfig(embed_dim=2, hidden_dim=4, lstm_units=5, output_dim=6, style_dim=3),
            "duration": BranchConfig(embed_dim=2, hidden_dim=3, lstm_units=4, output_dim=4, style_dim=2),
            "rest": BranchConfig(embed_dim=2, hidden_dim=2, lstm_units=3, output_dim=3, style_dim=2),
        },
        disc_embed_dims={"pitch": 3, "duration": 2, "rest": 2},
        disc_hidden_dim=4,
        disc_lstm_units=5,
    )


def _step_inputs(config, batch=2, seed=0):
    rng = np.random.default_rng(seed)
    x, style, targets = random_inputs(config, batch, 1, rng)
    prev = {a: targets[a][:, 0] for a in ATTRIBUTES}
    return x[:, 0], prev, style


def test_zero_parameters_fixed_point():
    config = _tiny_config()
    gen = MemoryFusionGenerator(config)  # parameters default to zero
    x_t, prev, style = _step_inputs(config)
    state, logits = gen.step(gen.init_state(2), x_t, prev, style)
    for a in ATTRIBUTES:
        assert torch.all(logits[a] == 0)
        for key in ("c_in", "h_in", "c_out", "h_out"):
            assert torch.all(state[a][key] == 0)


def test_cross_branch_dependence():
    config = _tiny_config()
    gen, _ = init_params(config, seed=1)
    x_t, prev, style = _step_inputs(config)
    base = gen.init_state(2)
    bumped = {a: {k: v.clone() for k, v in base[a].items()} for a in ATTRIBUTES}
    bumped["pitch"]["h_in"] += 0.3
    _, logits_base = gen.step(base, x_t, prev, style)
    _, logits_bumped = gen.step(bumped, x_t, prev, style)
    # nonzero pitch->duration coupling transmits the perturbation
    assert not torch.allclose(logits_base["duration"], logits_bumped["duration"])

    with torch.no_grad():
        for _, p in gen.cross_fusion_parameters():
            p.zero_()
    _, logits_base2 = gen.step(base, x_t, prev, style)
    _, logits_bumped2 = gen.step(bumped, x_t, prev, style)
    # with coupling removed, other branches no longer react
    assert torch.allclose(logits_base2["duration"], logits_bumped2["duration"])
    assert torch.allclose(logits_base2["rest"], logits_bumped2["rest"])
    assert not torch.allclose(logits_base2["pitch"], logits_bumped2["pitch"])


def test_fusion_ablation_matches_reference():
    rng = np.random.default_rng(5)
    fwd, bwd = compare_ablated_generator(small_model_config(rng), batch=3, t_max=4, seed=7)
    assert fwd < 1e-10
    assert bwd < 1e-10


def test_rollout_shapes_table_scale():
    config = default_model_config(
        lyric_dim=10,
        output_dims={"pitch": 70, "duration": 10, "rest": 5},
        style_dims={"pitch": 8, "duration": 6, "rest": 6},
    )
    gen = MemoryFusionGenerator(config)
    rng = np.random.default_rng(0)
    x, style, _ = random_inputs(config, batch=2, t_max=20, rng=rng)
    roll = gen.rollout(x, style, GreedySampler())
    assert roll.soft["pitch"].shape == (2, 20, 70)
    assert roll.soft["duration"].shape == (2, 20, 10)
    assert roll.soft["rest"].shape == (2, 20, 5)
    assert roll.hard["pitch"].shape == (2, 20, 70)


def test_rollout_greedy_deterministic():
    config = _tiny_config()
    gen, _ = init_params(config, seed=2)
    rng = np.random.default_rng(1)
    x, style, _ = random_inputs(config, batch=2, t_max=6, rng=rng)
    r1 = gen.rollout(x, style, GreedySampler())
    r2 = gen.rollout(x, style, GreedySampler())
    for a in ATTRIBUTES:
        assert torch.equal(r1.hard[a], r2.hard[a])


def test_rollout_length_one_single_step():
    config = _tiny_config()
    gen, _ = init_params(config, seed=3)
    rng = np.random.default_rng(2)
    x, style, _ = random_inputs(config, batch=2, t_max=1, rng=rng)
    calls = []
    orig = gen.step_embedded

    def counting(*args, **kwargs):
        calls.append(1)
        return orig(*args, **kwargs)

    gen.step_embedded = counting
    roll = gen.rollout(x, style, GreedySampler())
    assert len(calls) == 1
    assert roll.logits["pitch"].shape[1] == 1


def test_state_boundedness():
    config = _tiny_config()
    gen, _ = init_params(config, seed=4)
    rng = np.random.default_rng(3)
    x, style, _ = random_inputs(config, batch=4, t_max=12, rng=rng)
    roll = gen.rollout(5.0 * x, style, GreedySampler())
    for a in ATTRIBUTES:
        for key in ("h_in", "h_out"):
            assert roll.state[a][key].abs().max() <= 1.0


def test_teacher_logits_uses_targets():
    config = _tiny_config()
    gen, _ = init_params(config, seed=5)
    rng = np.random.default_rng(4)
    x, style, targets = random_inputs(config, batch=2, t_max=4, rng=rng)
    logits = gen.teacher_logits(x, style, targets)
    assert logits["pitch"].shape == (2, 4, config.branches["pitch"].output_dim)
    # step 0 ignores the targets entirely (start embedding drives it)
    other = {a: torch.roll(targets[a], 1, dims=0) for a in ATTRIBUTES}
    logits2 = gen.teacher_logits(x, style, other)
    assert torch.allclose(logits["pitch"][:, 0], logits2["pitch"][:, 0])


def test_step_dimension_mismatch():
    config = _tiny_config()
    gen, _ = init_params(config, seed=6)
    x_t, prev, style = _step_inputs(config)
    with pytest.raises(ValueError, match="lyric vector"):
        gen.step(gen.init_state(2), torch.zeros(2, 99, dtype=torch.float64), prev, style)


def test_step_rejects_nonfinite_state():
    config = _tiny_config()
    gen, _ = init_params(config, seed=7)
    x_t, prev, style = _step_inputs(config)
    state = gen.init_state(2)
    state["pitch"]["h_in"][0, 0] = float("nan")
    with pytest.raises(FloatingPointError):
        gen.step(state, x_t, prev, style)


def test_init_deterministic_and_forget_bias():
    config = _tiny_config()
    g1, d1 = init_params(config, seed=42)
    g2, d2 = init_params(config, seed=42)
    for (n1, p1), (n2, p2) in zip(g1.named_parameters(), g2.named_parameters()):
        assert n1 == n2 and torch.equal(p1, p2)
    for (n1, p1), (n2, p2) in zip(d1.named_parameters(), d2.named_parameters()):
        assert n1 == n2 and torch.equal(p1, p2)
    g3, _ = init_params(config, seed=43)
    assert not torch.equal(g1.branches["pitch"].w_i, g3.branches["pitch"].w_i)
    assert torch.all(g1.branches["pitch"].b_f == 1.0)
    assert torch.sigmoid(g1.branches["pitch"].b_f[0]).item() == pytest.approx(0.7310585786)


def test_table2_dims_mapping():
    config = default_model_config(
        lyric_dim=100,
        output_dims={"pitch": 70, "duration": 10, "rest": 5},
        style_dims={"pitch": 126, "duration": 40, "rest": 40},
    )
    pitch = config.branches["pitch"]
    assert (pitch.embed_dim, pitch.hidden_dim, pitch.lstm_units, pitch.output_dim) == (128, 32, 64, 70)
    assert config.disc_embed_dims == {"pitch": 128, "duration": 64, "rest": 32}
    gen, disc = init_params(config, seed=0)
    assert gen.branches["pitch"].w_y.shape == (70, 32)
    assert gen.branches["pitch"].fuse_u["duration"].shape == (64, 32)


def test_discriminator_pure_function_and_zero_map():
    config = _tiny_config()
    _, disc = init_params(config, seed=8)
    rng = np.random.default_rng(5)
    x, style, targets = random_inputs(config, batch=3, t_max=4, rng=rng)
    style_full = torch.cat([style[a] for a in ATTRIBUTES], dim=1)
    s1 = disc.score(targets, x, style_full)
    s2 = disc.score(targets, x, style_full)
    assert torch.equal(s1, s2)
    assert s1.shape == (3,)

    zero_disc = SequenceDiscriminator(config)
    assert torch.all(zero_disc.score(targets, x, style_full) == 0)


def test_discriminator_soft_equals_hard_for_same_vector():
    config = _tiny_config()
    _, disc = init_params(config, seed=9)
    rng = np.random.default_rng(6)
    x, style, targets = random_inputs(config, batch=2, t_max=3, rng=rng)
    style_full = torch.cat([style[a] for a in ATTRIBUTES], dim=1)
    as_soft = {a: targets[a].clone().requires_grad_(True) for a in ATTRIBUTES}
    s_hard = disc.score(targets, x, style_full)
    s_soft = disc.score(as_soft, x, style_full)
    assert torch.allclose(s_hard, s_soft)


def test_discriminator_shape_validation():
    config = _tiny_config()
    _, disc = init_params(config, seed=10)
    rng = np.random.default_rng(7)
    x, style, targets = random_inputs(config, batch=2, t_max=3, rng=rng)
    style_full = torch.cat([style[a] for a in ATTRIBUTES], dim=1)
    bad = dict(targets)
    bad["pitch"] = targets["pitch"][:, :2]
    with pytest.raises(ValueError, match="token tensor"):
        disc.score(bad, x, style_full)


def test_config_validation():
    with pytest.raises(ValueError):
        BranchConfig(embed_dim=0, hidden_dim=1, lstm_units=1, output_dim=1, style_dim=1)
    with pytest.raises(ValueError):
        ModelConfig(lyric_dim=0, branches={})
