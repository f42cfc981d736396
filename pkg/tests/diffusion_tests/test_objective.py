import pytest
import torch

from dialdiff.backbone.network import JointNoisePredictor
from dialdiff.config.app_settings import AppSettings
from dialdiff.diffusion.objective import loss_joint
from dialdiff.diffusion.schedule import make_schedule
from dialdiff.utils.exceptions import TrainingException

_SCHED = make_schedule(20, 0.001, 0.2)


def _batch(settings: AppSettings, batch: int = 3) -> tuple[torch.Tensor, torch.Tensor]:
    g = torch.Generator().manual_seed(11)
    x_0 = torch.rand((batch, *settings.model.image_shape), generator=g, dtype=torch.float64) * 2.0 - 1.0
    y_0 = torch.randn((batch, *settings.model.text_shape), generator=g, dtype=torch.float64)
    return x_0, y_0


def _zero_predict(x_t, y_t, t_x, t_y):
    return torch.zeros_like(x_t), torch.zeros_like(y_t)


def test_zero_prediction_loss_is_the_noise_energy(tiny_settings: AppSettings) -> None:
    model = JointNoisePredictor(tiny_settings.model, _SCHED.num_timesteps)
    x_0, y_0 = _batch(tiny_settings)
    loss, grads = loss_joint(model, _SCHED, x_0, y_0, torch.Generator().manual_seed(5), predict_fn=_zero_predict)

    # Replay the draws in the order the objective takes them.
    g = torch.Generator().manual_seed(5)
    _ = torch.randint(1, 21, (3,), generator=g)
    _ = torch.randint(1, 21, (3,), generator=g)
    eps_x = torch.randn(x_0.shape, generator=g, dtype=torch.float64)
    eps_y = torch.randn(y_0.shape, generator=g, dtype=torch.float64)
    expected = ((eps_x**2).reshape(3, -1).sum(dim=1) + (eps_y**2).reshape(3, -1).sum(dim=1)).mean().item()
    assert loss == pytest.approx(expected, rel=1e-12)
    assert set(grads) == {name for name, _ in model.named_parameters()}
    assert all(bool(torch.all(g == 0)) for g in grads.values())


def test_perfect_prediction_has_zero_loss(tiny_settings: AppSettings) -> None:
    model = JointNoisePredictor(tiny_settings.model, _SCHED.num_timesteps)
    x_0, y_0 = _batch(tiny_settings)

    def _oracle(x_t, y_t, t_x, t_y):
        def _recover(z_t: torch.Tensor, z_0: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
            ab = _SCHED.alpha_bars[t].reshape(-1, *([1] * (z_0.ndim - 1)))
            return (z_t - torch.sqrt(ab) * z_0) / torch.sqrt(1.0 - ab)

        return _recover(x_t, x_0, t_x), _recover(y_t, y_0, t_y)

    loss, _ = loss_joint(model, _SCHED, x_0, y_0, torch.Generator().manual_seed(5), predict_fn=_oracle)
    assert loss < 1e-12


def test_non_finite_loss_raises_with_step(tiny_settings: AppSettings) -> None:
    model = JointNoisePredictor(tiny_settings.model, _SCHED.num_timesteps)
    x_0, y_0 = _batch(tiny_settings)

    def _nan_predict(x_t, y_t, t_x, t_y):
        return torch.full_like(x_t, float("nan")), torch.zeros_like(y_t)

    with pytest.raises(TrainingException) as exc_info:
        _ = loss_joint(model, _SCHED, x_0, y_0, torch.Generator().manual_seed(5), predict_fn=_nan_predict, step=7)
    assert exc_info.value.step == 7
    assert exc_info.value.diagnostics["non_finite_x_hat"] == x_0.numel()
    assert exc_info.value.diagnostics["non_finite_y_hat"] == 0
    assert len(exc_info.value.diagnostics["t_x"]) == 3


def test_model_loss_gives_finite_gradients(tiny_settings: AppSettings) -> None:
    model = JointNoisePredictor(tiny_settings.model, _SCHED.num_timesteps, seed=2)
    x_0, y_0 = _batch(tiny_settings)
    loss, grads = loss_joint(model, _SCHED, x_0, y_0, torch.Generator().manual_seed(5))
    assert loss > 0.0
    assert all(bool(torch.isfinite(g).all()) for g in grads.values())
    assert grads["head_x.weight"].abs().sum().item() > 0.0
    for name, p in model.named_parameters():
        assert grads[name].shape == p.shape


def test_same_generator_seed_gives_same_loss(tiny_settings: AppSettings) -> None:
    model = JointNoisePredictor(tiny_settings.model, _SCHED.num_timesteps, seed=2)
    x_0, y_0 = _batch(tiny_settings)
    first, _ = loss_joint(model, _SCHED, x_0, y_0, torch.Generator().manual_seed(9))
    second, _ = loss_joint(model, _SCHED, x_0, y_0, torch.Generator().manual_seed(9))
    assert first == second
