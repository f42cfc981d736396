import logging
from dataclasses import dataclass, field

import torch

from dialdiff.backbone.network import ParamGradients
from dialdiff.config.app_settings import TrainConfig
from dialdiff.utils.constants import OPTIM_TENSOR_PREFIX
from dialdiff.utils.exceptions import CheckpointException

_LOGGER = logging.getLogger(__name__)

_EXP_AVG = "exp_avg."
_EXP_AVG_SQ = "exp_avg_sq."


@dataclass
class AdamWState:
    """Per-parameter first/second moments plus the number of updates applied so far."""

    step: int = 0
    exp_avg: dict[str, torch.Tensor] = field(default_factory=dict)
    exp_avg_sq: dict[str, torch.Tensor] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: dict[str, torch.Tensor]) -> "AdamWState":
        return cls(
            step=0,
            exp_avg={name: torch.zeros_like(p, dtype=torch.float64) for name, p in params.items()},
            exp_avg_sq={name: torch.zeros_like(p, dtype=torch.float64) for name, p in params.items()},
        )

    def to_tensors(self) -> dict[str, torch.Tensor]:
        """Checkpoint tensors, prefixed with `optim.`."""
        tensors = {f"{OPTIM_TENSOR_PREFIX}{_EXP_AVG}{k}": v for k, v in self.exp_avg.items()}
        tensors.update({f"{OPTIM_TENSOR_PREFIX}{_EXP_AVG_SQ}{k}": v for k, v in self.exp_avg_sq.items()})
        return tensors

    @classmethod
    def from_tensors(cls, tensors: dict[str, torch.Tensor], step: int, params: dict[str, torch.Tensor]) -> "AdamWState":
        """Inverse of `to_tensors` given tensors with the `optim.` prefix already stripped."""
        exp_avg = {k[len(_EXP_AVG) :]: v.clone() for k, v in tensors.items() if k.startswith(_EXP_AVG)}
        exp_avg_sq = {k[len(_EXP_AVG_SQ) :]: v.clone() for k, v in tensors.items() if k.startswith(_EXP_AVG_SQ)}
        if set(exp_avg) != set(params) or set(exp_avg_sq) != set(params):
            raise CheckpointException("Optimizer moments in the checkpoint do not match the model parameters.")
        for name, p in params.items():
            if exp_avg[name].shape != p.shape or exp_avg_sq[name].shape != p.shape:
                raise CheckpointException(f"Optimizer moment shape mismatch for parameter {name}.")
        return cls(step=step, exp_avg=exp_avg, exp_avg_sq=exp_avg_sq)


def lr_at(config: TrainConfig, step: int) -> float:
    """Linear warmup: base_lr * min(step / warmup_steps, 1); no warmup means the full rate from step 1."""
    if config.warmup_steps == 0:
        return config.learning_rate
    return config.learning_rate * min(step / config.warmup_steps, 1.0)


def adamw_step(
    params: dict[str, torch.Tensor], grads: ParamGradients, state: AdamWState, config: TrainConfig, step: int
) -> AdamWState:
    """
    One in-place AdamW update with decoupled weight decay:

        m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
        p <- p - lr_t * wd * p - lr_t * m_hat / (sqrt(v_hat) + eps)

    with bias-corrected m_hat, v_hat at `step` (>= 1). Returns `state`, updated.
    """
    if step < 1:
        raise ValueError(f"adamw_step requires step >= 1. Got {step}")
    beta1, beta2 = config.adam_betas
    lr = lr_at(config, step)
    bias1 = 1.0 - beta1**step
    bias2 = 1.0 - beta2**step
    with torch.no_grad():
        for name, p in params.items():
            g = grads[name]
            m = state.exp_avg[name]
            v = state.exp_avg_sq[name]
            m.mul_(beta1).add_(g, alpha=1.0 - beta1)
            v.mul_(beta2).addcmul_(g, g, value=1.0 - beta2)
            if config.weight_decay != 0.0:
                p.mul_(1.0 - lr * config.weight_decay)
            p.sub_(lr * (m / bias1) / (torch.sqrt(v / bias2) + config.adam_eps))
    state.step = step
    return state
