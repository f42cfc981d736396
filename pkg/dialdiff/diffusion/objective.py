import logging
from collections.abc import Callable

import torch

from dialdiff.backbone.network import JointNoisePredictor, ParamGradients, collect_gradients
from dialdiff.diffusion.schedule import NoiseSchedule, forward_noise
from dialdiff.utils.exceptions import TrainingException

_LOGGER = logging.getLogger(__name__)

type PredictFn = Callable[
    [torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor], tuple[torch.Tensor, torch.Tensor]
]


def _all_finite(grads: ParamGradients) -> bool:
    return all(bool(torch.isfinite(g).all()) for g in grads.values())


def loss_joint(
    model: JointNoisePredictor,
    sched: NoiseSchedule,
    x_0: torch.Tensor,
    y_0: torch.Tensor,
    generator: torch.Generator,
    predict_fn: PredictFn | None = None,
    step: int = 0,
) -> tuple[float, ParamGradients]:
    """
    Joint noise-prediction loss for one batch: t_x and t_y drawn independently and uniformly from {1..T}, both branches
    noised, and the squared error against [eps_x, eps_y] summed over both branches then averaged over the batch.

    `predict_fn` replaces the network call (same signature as the model); gradients are still taken with respect to
    `model`'s parameters. `step` only labels diagnostics.
    """
    batch = x_0.shape[0]
    t_x = torch.randint(1, sched.num_timesteps + 1, (batch,), generator=generator)
    t_y = torch.randint(1, sched.num_timesteps + 1, (batch,), generator=generator)
    eps_x = torch.randn(x_0.shape, generator=generator, dtype=torch.float64)
    eps_y = torch.randn(y_0.shape, generator=generator, dtype=torch.float64)
    x_t = forward_noise(sched, x_0, t_x, eps_x)
    y_t = forward_noise(sched, y_0, t_y, eps_y)

    predict: PredictFn = predict_fn if predict_fn is not None else model
    with torch.enable_grad():
        eps_x_hat, eps_y_hat = predict(x_t, y_t, t_x, t_y)
        per_sample = ((eps_x_hat - eps_x) ** 2).reshape(batch, -1).sum(dim=1) + ((eps_y_hat - eps_y) ** 2).reshape(
            batch, -1
        ).sum(dim=1)
        loss = per_sample.mean()
        if not bool(torch.isfinite(loss)):
            diagnostics = {
                "loss": float(loss.item()),
                "t_x": t_x.tolist(),
                "t_y": t_y.tolist(),
                "non_finite_x_hat": int((~torch.isfinite(eps_x_hat)).sum().item()),
                "non_finite_y_hat": int((~torch.isfinite(eps_y_hat)).sum().item()),
            }
            _LOGGER.error(f"Non-finite joint loss at step {step}: {diagnostics}")
            raise TrainingException(step=step, diagnostics=diagnostics)
        grads = collect_gradients(model, loss)
    if not _all_finite(grads):
        bad = sorted(name for name, g in grads.items() if not bool(torch.isfinite(g).all()))
        _LOGGER.error(f"Non-finite gradients at step {step}: {bad}")
        raise TrainingException(step=step, diagnostics={"loss": float(loss.item()), "non_finite_grads": bad})
    return float(loss.item()), grads
