"""
Linear-beta noise schedule. Tables are indexed by t = 0..T with the "clean" convention beta_0 = 0, alpha_0 = 1,
alpha_bar_0 = 1, so `alpha_bar[t]` is the cumulative product of `alpha[1..t]`.

For the ODE sampler the schedule is extended to real t by interpolating log(sqrt(alpha_bar)) linearly between
integer timesteps; log-SNR is lambda(t) = log(sqrt(alpha_bar_t)) - log(sqrt(1 - alpha_bar_t)).
"""

import logging
from dataclasses import dataclass

import torch

from dialdiff.config.app_settings import ScheduleConfig
from dialdiff.models.field_validators import validate_beta_range
from dialdiff.utils.exceptions import AppConfigException

_LOGGER = logging.getLogger(__name__)

type TimeLike = int | float | torch.Tensor


@dataclass(frozen=True)
class NoiseSchedule:
    num_timesteps: int
    betas: torch.Tensor
    alphas: torch.Tensor
    alpha_bars: torch.Tensor

    @property
    def log_alphas(self) -> torch.Tensor:
        """log(sqrt(alpha_bar_t)) on the integer grid."""
        return 0.5 * torch.log(self.alpha_bars)

    def _check_range(self, t: torch.Tensor) -> None:
        if not bool(torch.all((t >= 0) & (t <= self.num_timesteps))):
            raise ValueError(f"Timesteps must lie in [0, {self.num_timesteps}]. Got {t.tolist()}")

    def log_alpha(self, t: TimeLike) -> torch.Tensor:
        """Piecewise-linear log(sqrt(alpha_bar)) at real t; exact on integer t."""
        t_tensor = torch.as_tensor(t, dtype=torch.float64)
        self._check_range(t_tensor)
        lower = torch.clamp(torch.floor(t_tensor), max=self.num_timesteps - 1).long()
        frac = t_tensor - lower.to(torch.float64)
        grid = self.log_alphas
        return grid[lower] + frac * (grid[lower + 1] - grid[lower])

    def alpha_bar(self, t: TimeLike) -> torch.Tensor:
        return torch.exp(2.0 * self.log_alpha(t))

    def sigma(self, t: TimeLike) -> torch.Tensor:
        return torch.sqrt(-torch.expm1(2.0 * self.log_alpha(t)))

    def lambda_(self, t: TimeLike) -> torch.Tensor:
        """Log-SNR; +inf at t = 0."""
        log_alpha = self.log_alpha(t)
        return log_alpha - 0.5 * torch.log(-torch.expm1(2.0 * log_alpha))

    def inverse_lambda(self, lam: TimeLike) -> torch.Tensor:
        """The real t with lambda(t) = lam, for lam within [lambda(T), +inf)."""
        lam_tensor = torch.as_tensor(lam, dtype=torch.float64)
        # alpha^2 = sigmoid(2 lambda)
        target = -0.5 * torch.nn.functional.softplus(-2.0 * lam_tensor)
        # log_alphas decreases in t; search the increasing reversed grid.
        ascending = torch.flip(self.log_alphas, dims=[0])
        idx = torch.searchsorted(ascending, target.reshape(-1)).reshape(target.shape)
        upper_t = torch.clamp(self.num_timesteps - idx + 1, min=1, max=self.num_timesteps)
        lower_t = upper_t - 1
        grid = self.log_alphas
        frac = (target - grid[lower_t]) / (grid[upper_t] - grid[lower_t])
        return torch.clamp(lower_t.to(torch.float64) + frac, min=0.0, max=float(self.num_timesteps))

    def snr(self) -> torch.Tensor:
        """alpha_bar_t / (1 - alpha_bar_t) for t = 1..T."""
        return self.alpha_bars[1:] / (1.0 - self.alpha_bars[1:])


def make_schedule(num_timesteps: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    if num_timesteps < 1:
        raise AppConfigException(f"num_timesteps must be >= 1. Got {num_timesteps}")
    try:
        validate_beta_range(beta_start, beta_end)
    except ValueError as ve:
        raise AppConfigException(str(ve)) from ve
    betas = torch.cat(
        [
            torch.zeros(1, dtype=torch.float64),
            torch.linspace(beta_start, beta_end, num_timesteps, dtype=torch.float64),
        ]
    )
    alphas = 1.0 - betas
    alpha_bars = torch.cumprod(alphas, dim=0)
    _LOGGER.debug(f"Linear schedule T={num_timesteps}: alpha_bar_T={alpha_bars[-1].item():.6e}")
    return NoiseSchedule(num_timesteps=num_timesteps, betas=betas, alphas=alphas, alpha_bars=alpha_bars)


def schedule_from_config(config: ScheduleConfig) -> NoiseSchedule:
    return make_schedule(config.num_timesteps, config.beta_start, config.beta_end)


def forward_noise(sched: NoiseSchedule, z_0: torch.Tensor, t: int | torch.Tensor, eps: torch.Tensor) -> torch.Tensor:
    """
    sqrt(alpha_bar_t) z_0 + sqrt(1 - alpha_bar_t) eps. `t` is one integer timestep or one per sample (shape [B]);
    t = 0 returns z_0 unchanged.
    """
    if eps.shape != z_0.shape:
        raise ValueError(f"eps shape {tuple(eps.shape)} must equal z_0 shape {tuple(z_0.shape)}")
    t_tensor = torch.as_tensor(t, dtype=torch.long)
    if not bool(torch.all((t_tensor >= 0) & (t_tensor <= sched.num_timesteps))):
        raise ValueError(f"Timesteps must lie in [0, {sched.num_timesteps}]. Got {t_tensor.tolist()}")
    alpha_bar = sched.alpha_bars[t_tensor]
    if alpha_bar.ndim == 1:
        alpha_bar = alpha_bar.reshape(-1, *([1] * (z_0.ndim - 1)))
    return torch.sqrt(alpha_bar) * z_0 + torch.sqrt(1.0 - alpha_bar) * eps
