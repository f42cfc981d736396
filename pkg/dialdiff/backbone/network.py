"""
Joint noise predictor eps_theta(x_tx, y_ty, t_x, t_y): a small pre-norm transformer over image patch tokens, projected
text tokens and one timestep token per modality, with a long skip from the first block into the last one.

Images are laid out [B, H, W, C] and text embeddings [B, L, D]; single samples (no batch dimension) are accepted and
returned unbatched.
"""

import logging
import math

import torch
from torch import nn

from dialdiff.config.app_settings import ModelConfig
from dialdiff.utils.exceptions import BackboneShapeException

_LOGGER = logging.getLogger(__name__)

type ParamGradients = dict[str, torch.Tensor]
type Timesteps = int | float | torch.Tensor


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64) / max(half, 1))
    args = t.to(torch.float64)[:, None] * freqs[None, :]
    emb = torch.cat([torch.cos(args), torch.sin(args)], dim=-1)
    if dim % 2 == 1:
        emb = torch.cat([emb, torch.zeros_like(emb[:, :1])], dim=-1)
    return emb


class TimestepEmbedder(nn.Module):
    """Sinusoidal features followed by a 2-layer perceptron, producing one token per sample."""

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.mlp = nn.Sequential(nn.Linear(dim, dim), nn.SiLU(), nn.Linear(dim, dim))

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        return self.mlp(sinusoidal_embedding(t, self.dim))


class Attention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.proj = nn.Linear(dim, dim)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        batch, num_tokens, dim = h.shape
        qkv = self.qkv(h).reshape(batch, num_tokens, 3, self.heads, self.head_dim).permute(2, 0, 3, 1, 4)
        q, k, v = qkv[0], qkv[1], qkv[2]
        weights = torch.softmax((q @ k.transpose(-2, -1)) / math.sqrt(self.head_dim), dim=-1)
        out = (weights @ v).transpose(1, 2).reshape(batch, num_tokens, dim)
        return self.proj(out)


class Block(nn.Module):
    def __init__(self, dim: int, heads: int, mlp_dim: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = Attention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(nn.Linear(dim, mlp_dim), nn.GELU(), nn.Linear(mlp_dim, dim))

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        h = h + self.attn(self.norm1(h))
        return h + self.mlp(self.norm2(h))


class JointNoisePredictor(nn.Module):
    """
    Token layout: [t_x token, t_y token, text tokens, image patch tokens]. The image read-out maps each patch token back
    to its `patch_size x patch_size x channels` pixels, the text read-out maps each text token back to `text_dim`.

    The long skip stores the first block's output and merges it into the last block's input through a learned linear
    map over the concatenation. It exists only when depth >= 2; `long_skip_enabled` switches it at runtime.
    """

    def __init__(self, config: ModelConfig, num_timesteps: int, seed: int = 0):
        super().__init__()
        self.config = config
        self.num_timesteps = num_timesteps
        self.image_shape: tuple[int, int, int] = config.image_shape
        self.text_shape: tuple[int, int] = config.text_shape
        self.grid = config.image_size // config.patch_size
        self.num_patches = self.grid * self.grid
        patch_dim = config.patch_size * config.patch_size * config.channels

        self.patch_embed = nn.Linear(patch_dim, config.dim)
        self.text_embed = nn.Linear(config.text_dim, config.dim)
        self.time_embed_x = TimestepEmbedder(config.dim)
        self.time_embed_y = TimestepEmbedder(config.dim)
        self.pos_embed = nn.Parameter(torch.zeros(1, 2 + config.text_len + self.num_patches, config.dim))
        self.blocks = nn.ModuleList([Block(config.dim, config.heads, config.mlp_dim) for _ in range(config.depth)])
        self.skip_linear = nn.Linear(2 * config.dim, config.dim) if config.depth >= 2 and config.long_skip else None
        self.long_skip_enabled = self.skip_linear is not None
        self.norm = nn.LayerNorm(config.dim)
        self.head_x = nn.Linear(config.dim, patch_dim)
        self.head_y = nn.Linear(config.dim, config.text_dim)
        self.to(torch.float64)
        self._init_weights(seed)
        _LOGGER.debug(f"JointNoisePredictor built with {num_parameters(self)} parameters (seed={seed}).")

    def _init_weights(self, seed: int) -> None:
        generator = torch.Generator().manual_seed(seed)
        std = self.config.init_std
        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    nn.init.trunc_normal_(module.weight, std=std, a=-2 * std, b=2 * std, generator=generator)
                    nn.init.zeros_(module.bias)
                elif isinstance(module, nn.LayerNorm):
                    nn.init.ones_(module.weight)
                    nn.init.zeros_(module.bias)
            nn.init.trunc_normal_(self.pos_embed, std=std, a=-2 * std, b=2 * std, generator=generator)
            for head in (self.head_x, self.head_y):
                nn.init.zeros_(head.weight)
                nn.init.zeros_(head.bias)

    def _patchify(self, x: torch.Tensor) -> torch.Tensor:
        batch, p, g, c = x.shape[0], self.config.patch_size, self.grid, self.config.channels
        return x.reshape(batch, g, p, g, p, c).permute(0, 1, 3, 2, 4, 5).reshape(batch, g * g, p * p * c)

    def _unpatchify(self, tokens: torch.Tensor) -> torch.Tensor:
        batch, p, g, c = tokens.shape[0], self.config.patch_size, self.grid, self.config.channels
        return tokens.reshape(batch, g, g, p, p, c).permute(0, 1, 3, 2, 4, 5).reshape(batch, g * p, g * p, c)

    def _timesteps(self, t: Timesteps, batch: int, name: str) -> torch.Tensor:
        t_tensor = torch.as_tensor(t, dtype=torch.float64)
        if t_tensor.ndim == 0:
            t_tensor = t_tensor.expand(batch)
        if t_tensor.shape != (batch,):
            raise BackboneShapeException(f"{name} must be a scalar or of shape ({batch},). Got {tuple(t_tensor.shape)}")
        if not bool(torch.all((t_tensor >= 0) & (t_tensor <= self.num_timesteps))):
            raise BackboneShapeException(f"{name} must lie in [0, {self.num_timesteps}]. Got {t_tensor.tolist()}")
        return t_tensor

    def forward(
        self, x_t: torch.Tensor, y_t: torch.Tensor, t_x: Timesteps, t_y: Timesteps
    ) -> tuple[torch.Tensor, torch.Tensor]:
        unbatched = x_t.ndim == 3
        if unbatched:
            x_t, y_t = x_t.unsqueeze(0), y_t.unsqueeze(0)
        if tuple(x_t.shape[1:]) != self.image_shape or x_t.ndim != 4:
            raise BackboneShapeException(f"x_t must have shape [B, {self.image_shape}]. Got {tuple(x_t.shape)}")
        if tuple(y_t.shape[1:]) != self.text_shape or y_t.ndim != 3:
            raise BackboneShapeException(f"y_t must have shape [B, {self.text_shape}]. Got {tuple(y_t.shape)}")
        if x_t.shape[0] != y_t.shape[0]:
            raise BackboneShapeException(f"Batch sizes differ: x_t {x_t.shape[0]} vs y_t {y_t.shape[0]}")
        batch = x_t.shape[0]
        tx_token = self.time_embed_x(self._timesteps(t_x, batch, "t_x")).unsqueeze(1)
        ty_token = self.time_embed_y(self._timesteps(t_y, batch, "t_y")).unsqueeze(1)
        text_tokens = self.text_embed(y_t.to(torch.float64))
        image_tokens = self.patch_embed(self._patchify(x_t.to(torch.float64)))
        h = torch.cat([tx_token, ty_token, text_tokens, image_tokens], dim=1) + self.pos_embed

        skip: torch.Tensor | None = None
        last = len(self.blocks) - 1
        for i, block in enumerate(self.blocks):
            if i == last and skip is not None and self.skip_linear is not None and self.long_skip_enabled:
                h = self.skip_linear(torch.cat([h, skip], dim=-1))
            h = block(h)
            if i == 0:
                skip = h
        h = self.norm(h)

        text_len = self.text_shape[0]
        eps_y = self.head_y(h[:, 2 : 2 + text_len])
        eps_x = self._unpatchify(self.head_x(h[:, 2 + text_len :]))
        if unbatched:
            return eps_x.squeeze(0), eps_y.squeeze(0)
        return eps_x, eps_y


def num_parameters(model: nn.Module) -> int:
    """Trainable parameter count; buffers (the frozen text embedding) are not counted."""
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def forward(
    model: JointNoisePredictor, x_t: torch.Tensor, y_t: torch.Tensor, t_x: Timesteps, t_y: Timesteps
) -> tuple[torch.Tensor, torch.Tensor]:
    """Inference-mode prediction `(eps_x_hat, eps_y_hat)`, outputs shaped like the inputs."""
    with torch.no_grad():
        return model(x_t, y_t, t_x, t_y)


def collect_gradients(
    model: nn.Module, output: torch.Tensor | tuple[torch.Tensor, ...], grad_out: tuple[torch.Tensor, ...] | None = None
) -> ParamGradients:
    """
    Reverse-mode gradients of `output` (a scalar, or the inner product with `grad_out`) for every trainable parameter.
    Parameters the output does not depend on get zero gradients.
    """
    named = [(name, p) for name, p in model.named_parameters() if p.requires_grad]
    outputs = output if isinstance(output, tuple) else (output,)
    if not any(o.requires_grad for o in outputs):
        return {name: torch.zeros_like(p) for name, p in named}
    grads = torch.autograd.grad(
        outputs=outputs, inputs=[p for _, p in named], grad_outputs=grad_out, allow_unused=True
    )
    return {
        name: (g.detach() if g is not None else torch.zeros_like(p)) for (name, p), g in zip(named, grads, strict=True)
    }


def backward(
    model: JointNoisePredictor,
    x_t: torch.Tensor,
    y_t: torch.Tensor,
    t_x: Timesteps,
    t_y: Timesteps,
    grad_out: tuple[torch.Tensor, torch.Tensor],
) -> ParamGradients:
    """Exact gradients of <grad_out, forward(model, x_t, y_t, t_x, t_y)> with respect to every trainable parameter."""
    with torch.enable_grad():
        eps_x, eps_y = model(x_t, y_t, t_x, t_y)
        if grad_out[0].shape != eps_x.shape or grad_out[1].shape != eps_y.shape:
            raise BackboneShapeException(
                f"grad_out shapes {tuple(grad_out[0].shape)}, {tuple(grad_out[1].shape)} do not match outputs "
                f"{tuple(eps_x.shape)}, {tuple(eps_y.shape)}"
            )
        return collect_gradients(model, (eps_x, eps_y), (grad_out[0].to(eps_x.dtype), grad_out[1].to(eps_y.dtype)))
