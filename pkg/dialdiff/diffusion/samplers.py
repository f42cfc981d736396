"""
Image samplers conditioned on clean text: the text branch is held at t_y = 0 and never modified, only the image
branch is denoised.

`sample_ancestral` walks all T steps of the reverse chain. `sample_dpm_solver` integrates the probability-flow ODE in
log-SNR time with first- or second-order (midpoint) updates.
"""

import logging
from collections.abc import Callable, Sequence
from typing import Protocol

import torch

from dialdiff.diffusion.schedule import NoiseSchedule
from dialdiff.models.types import Discretization, SamplerName, SigmaMode
from dialdiff.utils.exceptions import SamplingException

_LOGGER = logging.getLogger(__name__)

type Generators = torch.Generator | Sequence[torch.Generator]
type StepCallback = Callable[[float, torch.Tensor], None]


class NoisePredictor(Protocol):
    image_shape: tuple[int, ...]

    def __call__(
        self,
        x_t: torch.Tensor,
        y_t: torch.Tensor,
        t_x: int | float | torch.Tensor,
        t_y: int | float | torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]: ...


class GaussianOraclePredictor:
    """
    Exact noise predictor for image data distributed as N(mu, s I):

        eps*(x_t, t) = sqrt(1 - alpha_bar_t) (x_t - sqrt(alpha_bar_t) mu) / (alpha_bar_t s + 1 - alpha_bar_t)

    The text branch prediction is zero. `calls` counts invocations.
    """

    def __init__(self, sched: NoiseSchedule, mu: torch.Tensor, s: float):
        if s <= 0.0:
            raise ValueError(f"Oracle variance must be positive. Got {s}")
        self.sched = sched
        self.mu = mu.to(torch.float64)
        self.s = s
        self.image_shape: tuple[int, ...] = tuple(mu.shape)
        self.calls = 0

    def __call__(
        self,
        x_t: torch.Tensor,
        y_t: torch.Tensor,
        t_x: int | float | torch.Tensor,
        t_y: int | float | torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        self.calls += 1
        alpha_bar = self.sched.alpha_bar(t_x)
        if alpha_bar.ndim == 1:
            alpha_bar = alpha_bar.reshape(-1, *([1] * (x_t.ndim - 1)))
        eps_x = torch.sqrt(1.0 - alpha_bar) * (x_t - torch.sqrt(alpha_bar) * self.mu) / (
            alpha_bar * self.s + 1.0 - alpha_bar
        )
        return eps_x, torch.zeros_like(y_t)


def _standard_normal(shape: tuple[int, ...], batch: int, generator: Generators) -> torch.Tensor:
    if isinstance(generator, torch.Generator):
        return torch.randn((batch, *shape), generator=generator, dtype=torch.float64)
    if len(generator) != batch:
        raise ValueError(f"Expected one generator per chain ({batch}). Got {len(generator)}")
    return torch.stack([torch.randn(shape, generator=g, dtype=torch.float64) for g in generator])


def _initial_state(
    model: NoisePredictor, batch: int, x_T: torch.Tensor | None, generator: Generators | None
) -> torch.Tensor:
    if x_T is not None:
        if tuple(x_T.shape) != (batch, *model.image_shape):
            raise ValueError(f"x_T must have shape {(batch, *model.image_shape)}. Got {tuple(x_T.shape)}")
        return x_T.to(torch.float64).clone()
    if generator is None:
        raise ValueError("Either x_T or a generator must be provided.")
    return _standard_normal(tuple(model.image_shape), batch, generator)


def _check_finite(x: torch.Tensor, step: int | float, sampler: SamplerName) -> None:
    if not bool(torch.isfinite(x).all()):
        _LOGGER.error(f"{sampler} sampler produced a non-finite state at timestep {step}")
        raise SamplingException(step=step, sampler=sampler.value)


def sample_ancestral(
    model: NoisePredictor,
    sched: NoiseSchedule,
    y_0: torch.Tensor,
    generator: Generators,
    sigma_mode: SigmaMode = SigmaMode.BETA,
    x_T: torch.Tensor | None = None,
    on_step: StepCallback | None = None,
) -> torch.Tensor:
    """
    For t = T..1:

        x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t) + sigma_t z,  z = 0 at t = 1

    where eps_hat is the image part of model(x_t, y_0, t, 0). `SigmaMode.ZERO` takes the deterministic member of the
    same marginal-preserving family, x_{t-1} = sqrt(alpha_bar_{t-1}) x0_hat + sqrt(1 - alpha_bar_{t-1}) eps_hat.
    Only `y_0.shape[0]` (the batch size) and its values as model input are used.
    """
    batch = y_0.shape[0]
    x = _initial_state(model, batch, x_T, generator)
    image_shape = tuple(model.image_shape)
    with torch.no_grad():
        for t in range(sched.num_timesteps, 0, -1):
            eps = model(x, y_0, t, 0)[0]
            alpha_bar_t = sched.alpha_bars[t]
            alpha_bar_prev = sched.alpha_bars[t - 1]
            if sigma_mode == SigmaMode.ZERO:
                x0_hat = (x - torch.sqrt(1.0 - alpha_bar_t) * eps) / torch.sqrt(alpha_bar_t)
                x = torch.sqrt(alpha_bar_prev) * x0_hat + torch.sqrt(1.0 - alpha_bar_prev) * eps
            else:
                beta_t = sched.betas[t]
                mean = (x - beta_t / torch.sqrt(1.0 - alpha_bar_t) * eps) / torch.sqrt(sched.alphas[t])
                if t > 1:
                    variance = beta_t if sigma_mode == SigmaMode.BETA else beta_t * (1.0 - alpha_bar_prev) / (
                        1.0 - alpha_bar_t
                    )
                    x = mean + torch.sqrt(variance) * _standard_normal(image_shape, batch, generator)
                else:
                    x = mean
            _check_finite(x, t, SamplerName.ANCESTRAL)
            if on_step is not None:
                on_step(float(t - 1), x)
    return x


def dpm_time_nodes(sched: NoiseSchedule, steps: int, discretization: Discretization) -> torch.Tensor:
    """
    Decreasing time nodes from T to 0, `steps` intervals. LOGSNR: uniform in lambda between t = T and t = 1, then a
    closing interval to t = 0. TIME: uniform in t, snapped to integers where they fall on the grid.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1. Got {steps}")
    horizon = sched.num_timesteps
    if discretization == Discretization.TIME:
        nodes = torch.linspace(float(horizon), 0.0, steps + 1, dtype=torch.float64)
        rounded = torch.round(nodes)
        return torch.where(torch.abs(nodes - rounded) < 1e-9, rounded, nodes)
    if steps == 1 or horizon == 1:
        return torch.tensor([float(horizon), 0.0], dtype=torch.float64)
    lambdas = torch.linspace(
        float(sched.lambda_(horizon)), float(sched.lambda_(1)), steps, dtype=torch.float64
    )
    inner = sched.inverse_lambda(lambdas)
    inner[0], inner[-1] = float(horizon), 1.0
    return torch.cat([inner, torch.zeros(1, dtype=torch.float64)])


def sample_dpm_solver(
    model: NoisePredictor,
    sched: NoiseSchedule,
    y_0: torch.Tensor,
    steps: int,
    order: int = 2,
    discretization: Discretization = Discretization.LOGSNR,
    x_T: torch.Tensor | None = None,
    generator: Generators | None = None,
    on_step: StepCallback | None = None,
) -> torch.Tensor:
    """
    Deterministic DPM-Solver. From node s to node t (h = lambda_t - lambda_s):

        order 1: x_t = (alpha_t / alpha_s) x_s - sigma_t expm1(h) eps(x_s, s)
        order 2: u = first-order step to the lambda-midpoint r,
                 x_t = (alpha_t / alpha_s) x_s - sigma_t expm1(h) eps(u, r)

    with alpha = sqrt(alpha_bar). The interval ending at t = 0 is always first-order in its limit form
    x_0 = (x_s - sigma_s eps(x_s, s)) / alpha_s, so steps = 1 costs one model call.
    """
    if order not in (1, 2):
        raise ValueError(f"DPM-Solver order must be 1 or 2. Got {order}")
    batch = y_0.shape[0]
    x = _initial_state(model, batch, x_T, generator)
    nodes = dpm_time_nodes(sched, steps, discretization)
    with torch.no_grad():
        for i in range(len(nodes) - 1):
            s, t = float(nodes[i]), float(nodes[i + 1])
            alpha_s, sigma_s = torch.exp(sched.log_alpha(s)), sched.sigma(s)
            eps_s = model(x, y_0, s, 0)[0]
            if t == 0.0:
                x = (x - sigma_s * eps_s) / alpha_s
            else:
                lambda_s, lambda_t = sched.lambda_(s), sched.lambda_(t)
                h = lambda_t - lambda_s
                alpha_t, sigma_t = torch.exp(sched.log_alpha(t)), sched.sigma(t)
                if order == 1:
                    x = (alpha_t / alpha_s) * x - sigma_t * torch.expm1(h) * eps_s
                else:
                    r = float(sched.inverse_lambda(lambda_s + 0.5 * h))
                    alpha_r, sigma_r = torch.exp(sched.log_alpha(r)), sched.sigma(r)
                    u = (alpha_r / alpha_s) * x - sigma_r * torch.expm1(0.5 * h) * eps_s
                    eps_r = model(u, y_0, r, 0)[0]
                    x = (alpha_t / alpha_s) * x - sigma_t * torch.expm1(h) * eps_r
            _check_finite(x, t, SamplerName.DPM)
            if on_step is not None:
                on_step(t, x)
    return x
