from dialdiff.diffusion.objective import loss_joint
from dialdiff.diffusion.optimizer import AdamWState, adamw_step, lr_at
from dialdiff.diffusion.samplers import (
    GaussianOraclePredictor,
    NoisePredictor,
    dpm_time_nodes,
    sample_ancestral,
    sample_dpm_solver,
)
from dialdiff.diffusion.schedule import NoiseSchedule, forward_noise, make_schedule, schedule_from_config

__all__ = [
    "AdamWState",
    "GaussianOraclePredictor",
    "NoisePredictor",
    "NoiseSchedule",
    "adamw_step",
    "dpm_time_nodes",
    "forward_noise",
    "loss_joint",
    "lr_at",
    "make_schedule",
    "sample_ancestral",
    "sample_dpm_solver",
    "schedule_from_config",
]
