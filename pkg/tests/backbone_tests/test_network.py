import re

import pytest
import torch

from dialdiff.backbone.network import JointNoisePredictor, backward, forward, num_parameters
from dialdiff.config.app_settings import ModelConfig
from dialdiff.utils.exceptions import BackboneShapeException

_T = 20


def _inputs(config: ModelConfig, batch: int, seed: int = 0) -> tuple[torch.Tensor, torch.Tensor]:
    generator = torch.Generator().manual_seed(seed)
    x = torch.randn((batch, *config.image_shape), generator=generator, dtype=torch.float64)
    y = torch.randn((batch, *config.text_shape), generator=generator, dtype=torch.float64)
    return x, y


def _randomize_heads(model: JointNoisePredictor, seed: int = 1) -> None:
    """Fresh read-out heads are zero; give them weights so outputs depend on every block."""
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for head in (model.head_x, model.head_y):
            head.weight.normal_(0.0, 0.5, generator=generator)
            head.bias.normal_(0.0, 0.5, generator=generator)


def test_forward_shapes_and_zero_init(tiny_model_config: ModelConfig) -> None:
    model = JointNoisePredictor(tiny_model_config, _T)
    x, y = _inputs(tiny_model_config, batch=3)
    eps_x, eps_y = forward(model, x, y, 5, 0)
    assert eps_x.shape == x.shape
    assert eps_y.shape == y.shape
    assert eps_x.dtype == torch.float64
    # zero-initialised heads predict zero noise
    assert torch.count_nonzero(eps_x) == 0
    assert torch.count_nonzero(eps_y) == 0


def test_forward_accepts_unbatched_input(tiny_model_config: ModelConfig) -> None:
    model = JointNoisePredictor(tiny_model_config, _T)
    _randomize_heads(model)
    x, y = _inputs(tiny_model_config, batch=2)
    eps_x, eps_y = forward(model, x[0], y[0], 3, 7)
    batched_x, batched_y = forward(model, x[:1], y[:1], 3, 7)
    assert eps_x.shape == tuple(tiny_model_config.image_shape)
    assert torch.allclose(eps_x, batched_x[0], atol=1e-12)
    assert torch.allclose(eps_y, batched_y[0], atol=1e-12)


def test_same_seed_same_weights(tiny_model_config: ModelConfig) -> None:
    a = JointNoisePredictor(tiny_model_config, _T, seed=4)
    b = JointNoisePredictor(tiny_model_config, _T, seed=4)
    c = JointNoisePredictor(tiny_model_config, _T, seed=5)
    assert all(torch.equal(p, q) for p, q in zip(a.parameters(), b.parameters(), strict=True))
    assert not torch.equal(a.pos_embed, c.pos_embed)


def test_batch_permutation_equivariance(tiny_model_config: ModelConfig) -> None:
    model = JointNoisePredictor(tiny_model_config, _T)
    _randomize_heads(model)
    x, y = _inputs(tiny_model_config, batch=4)
    t_x = torch.tensor([1.0, 5.0, 12.0, 20.0], dtype=torch.float64)
    t_y = torch.tensor([0.0, 3.0, 20.0, 7.5], dtype=torch.float64)
    perm = torch.tensor([2, 0, 3, 1])
    eps_x, eps_y = forward(model, x, y, t_x, t_y)
    perm_x, perm_y = forward(model, x[perm], y[perm], t_x[perm], t_y[perm])
    assert torch.allclose(perm_x, eps_x[perm], atol=1e-10)
    assert torch.allclose(perm_y, eps_y[perm], atol=1e-10)


def test_long_skip_toggle(tiny_model_config: ModelConfig) -> None:
    model = JointNoisePredictor(tiny_model_config, _T)
    _randomize_heads(model)
    assert model.long_skip_enabled
    x, y = _inputs(tiny_model_config, batch=2)
    with_skip = forward(model, x, y, 4, 0)[0]
    model.long_skip_enabled = False
    without_skip = forward(model, x, y, 4, 0)[0]
    assert not torch.allclose(with_skip, without_skip)


@pytest.mark.parametrize(
    "overrides, expect_skip",
    [
        ({"depth": 1}, False),  # case 1: a single block has nothing to skip over
        ({"long_skip": False}, False),  # case 2: disabled in config
        ({}, True),  # case 3: default
    ],
)
def test_long_skip_exists_only_when_configured(
    tiny_model_config: ModelConfig, overrides: dict, expect_skip: bool
) -> None:
    model = JointNoisePredictor(tiny_model_config.model_copy(update=overrides), _T)
    assert (model.skip_linear is not None) == expect_skip
    assert model.long_skip_enabled == expect_skip


@pytest.mark.parametrize(
    "x_shape, y_shape, t_x, msg",
    [
        ((2, 16, 16, 1), (2, 5, 4), 1, "x_t must have shape"),  # case 1: wrong channels
        ((2, 16, 16, 3), (2, 6, 4), 1, "y_t must have shape"),  # case 2: wrong text length
        ((2, 16, 16, 3), (3, 5, 4), 1, "Batch sizes differ"),  # case 3: batch mismatch
        ((2, 16, 16, 3), (2, 5, 4), _T + 1, "t_x must lie in"),  # case 4: timestep past the horizon
        ((2, 16, 16, 3), (2, 5, 4), -1, "t_x must lie in"),  # case 5: negative timestep
    ],
)
def test_forward_shape_errors(
    tiny_model_config: ModelConfig, x_shape: tuple, y_shape: tuple, t_x: int, msg: str
) -> None:
    model = JointNoisePredictor(tiny_model_config, _T)
    with pytest.raises(BackboneShapeException, match=re.escape(msg)):
        _ = forward(model, torch.zeros(x_shape, dtype=torch.float64), torch.zeros(y_shape, dtype=torch.float64), t_x, 0)


def test_per_sample_timesteps_shape_error(tiny_model_config: ModelConfig) -> None:
    model = JointNoisePredictor(tiny_model_config, _T)
    x, y = _inputs(tiny_model_config, batch=2)
    with pytest.raises(BackboneShapeException, match=re.escape("t_y must be a scalar or of shape (2,)")):
        _ = forward(model, x, y, 1, torch.tensor([1.0, 2.0, 3.0]))


def test_backward_matches_finite_differences(tiny_model_config: ModelConfig) -> None:
    config = tiny_model_config.model_copy(update={"depth": 1})
    model = JointNoisePredictor(config, _T, seed=3)
    _randomize_heads(model)
    x, y = _inputs(config, batch=2, seed=8)
    generator = torch.Generator().manual_seed(9)
    grad_out = (
        torch.randn(x.shape, generator=generator, dtype=torch.float64),
        torch.randn(y.shape, generator=generator, dtype=torch.float64),
    )
    t_x, t_y = torch.tensor([3.0, 11.0]), torch.tensor([0.0, 6.0])
    grads = backward(model, x, y, t_x, t_y, grad_out)
    assert set(grads) == {name for name, _ in model.named_parameters()}

    def objective() -> float:
        eps_x, eps_y = forward(model, x, y, t_x, t_y)
        return float((eps_x * grad_out[0]).sum() + (eps_y * grad_out[1]).sum())

    params = dict(model.named_parameters())
    h = 1e-6
    for name, flat_index in [
        ("head_x.weight", 5),
        ("head_y.bias", 1),
        ("patch_embed.weight", 17),
        ("text_embed.weight", 3),
        ("blocks.0.attn.qkv.weight", 40),
        ("blocks.0.mlp.0.weight", 9),
        ("time_embed_x.mlp.0.weight", 2),
        ("time_embed_y.mlp.2.bias", 0),
        ("pos_embed", 30),
        ("norm.weight", 4),
    ]:
        flat = params[name].data.view(-1)
        original = flat[flat_index].item()
        with torch.no_grad():
            flat[flat_index] = original + h
            plus = objective()
            flat[flat_index] = original - h
            minus = objective()
            flat[flat_index] = original
        numeric = (plus - minus) / (2 * h)
        analytic = grads[name].view(-1)[flat_index].item()
        assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-6), name


def test_backward_rejects_mismatched_grad_out(tiny_model_config: ModelConfig) -> None:
    model = JointNoisePredictor(tiny_model_config, _T)
    x, y = _inputs(tiny_model_config, batch=2)
    with pytest.raises(BackboneShapeException, match=re.escape("grad_out shapes")):
        _ = backward(model, x, y, 1, 1, (torch.zeros_like(x[:1]), torch.zeros_like(y)))


def test_num_parameters_counts_trainable_only(tiny_model_config: ModelConfig) -> None:
    model = JointNoisePredictor(tiny_model_config, _T)
    assert num_parameters(model) == sum(p.numel() for p in model.parameters())
    model.pos_embed.requires_grad_(False)
    assert num_parameters(model) == sum(p.numel() for p in model.parameters()) - model.pos_embed.numel()
