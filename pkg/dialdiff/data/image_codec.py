"""
Conversion between 8-bit RGB files (PNG or binary PPM) and 16x16x3 float64 tensors in [-1, 1]. Pixel p maps to
2p/255 - 1; decoding larger files centre-crops them to a square and box-downsamples to 16x16.
"""

import logging
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from dialdiff.utils.constants import IMAGE_CHANNELS, IMAGE_SIZE, IMAGE_SUFFIXES
from dialdiff.utils.exceptions import ImageCodecException

_LOGGER = logging.getLogger(__name__)

_PIL_FORMATS = {".png": "PNG", ".ppm": "PPM"}


def _center_square(image: Image.Image) -> Image.Image:
    width, height = image.size
    side = min(width, height)
    left = (width - side) // 2
    top = (height - side) // 2
    return image.crop((left, top, left + side, top + side))


def pixels_to_tensor(pixels: np.ndarray) -> torch.Tensor:
    """uint8 [H, W, C] -> float64 in [-1, 1]."""
    return torch.from_numpy(pixels.astype(np.float64) * (2.0 / 255.0) - 1.0)


def tensor_to_pixels(image: torch.Tensor) -> np.ndarray:
    """float64 [H, W, C] (clamped into [-1, 1]) -> uint8, rounding to the nearest level."""
    scaled = (image.detach().to(torch.float64).clamp(-1.0, 1.0) + 1.0) * (255.0 / 2.0)
    return np.rint(scaled.numpy()).astype(np.uint8)


def decode_image(path: Path, size: int = IMAGE_SIZE) -> torch.Tensor:
    try:
        with Image.open(path) as raw:
            image = raw.convert("RGB")
    except (OSError, UnidentifiedImageError) as ex:
        raise ImageCodecException(f"Cannot read image {path}: {ex}") from ex
    if min(image.size) < size:
        raise ImageCodecException(f"Image {path} is {image.size[0]}x{image.size[1]}; at least {size}x{size} is needed.")
    if image.size != (size, size):
        _LOGGER.debug(f"Cropping and downsampling {path} from {image.size} to {size}x{size}")
        image = _center_square(image).resize((size, size), resample=Image.Resampling.BOX)
    return pixels_to_tensor(np.asarray(image, dtype=np.uint8))


def encode_image(image: torch.Tensor, path: Path) -> Path:
    """Writes a [H, W, 3] tensor as PNG or binary PPM (P6), picked from the file suffix."""
    suffix = path.suffix.lower()
    if suffix not in IMAGE_SUFFIXES:
        raise ImageCodecException(f"Unsupported image suffix {path.suffix!r}; expected one of {sorted(IMAGE_SUFFIXES)}")
    if image.ndim != 3 or image.shape[2] != IMAGE_CHANNELS:
        raise ImageCodecException(f"Expected an [H, W, {IMAGE_CHANNELS}] image. Got shape {tuple(image.shape)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(tensor_to_pixels(image)).save(path, format=_PIL_FORMATS[suffix])
    return path


def image_grid(rows: list[list[torch.Tensor]], scale: int = 4, pad: int = 2) -> Image.Image:
    """Tiles images (row-major, equal sizes) into one sheet, nearest-neighbour upscaled by `scale`."""
    if not rows or not rows[0]:
        raise ImageCodecException("Cannot build an empty image grid.")
    height, width = rows[0][0].shape[0] * scale, rows[0][0].shape[1] * scale
    num_cols = max(len(row) for row in rows)
    sheet = Image.new(
        "RGB", (num_cols * (width + pad) + pad, len(rows) * (height + pad) + pad), color=(255, 255, 255)
    )
    for r, row in enumerate(rows):
        for c, image in enumerate(row):
            tile = Image.fromarray(tensor_to_pixels(image)).resize(
                (width, height), resample=Image.Resampling.NEAREST
            )
            sheet.paste(tile, (pad + c * (width + pad), pad + r * (height + pad)))
    return sheet
