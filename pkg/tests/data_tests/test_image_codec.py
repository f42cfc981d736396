import re
from pathlib import Path

import numpy as np
import pytest
import torch
from PIL import Image

from dialdiff.data.image_codec import decode_image, encode_image, image_grid, pixels_to_tensor, tensor_to_pixels
from dialdiff.utils.exceptions import ImageCodecException


@pytest.mark.parametrize("suffix", [".png", ".ppm"])
def test_encode_decode_is_pixel_exact(tmp_path: Path, suffix: str) -> None:
    pixels = np.random.default_rng(0).integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
    image = pixels_to_tensor(pixels)
    path = encode_image(image, tmp_path / f"img{suffix}")
    decoded = decode_image(path)
    assert decoded.dtype == torch.float64
    assert torch.equal(decoded, image)
    assert np.array_equal(tensor_to_pixels(decoded), pixels)


def test_pixel_mapping_endpoints() -> None:
    pixels = np.array([[[0, 255, 0]]], dtype=np.uint8)
    assert pixels_to_tensor(pixels).tolist() == [[[-1.0, 1.0, -1.0]]]
    assert tensor_to_pixels(torch.tensor([[[-3.0, 2.0, 0.0]]])).tolist() == [[[0, 255, 128]]]


def test_black_file_decodes_to_minus_one(tmp_path: Path) -> None:
    Image.new("RGB", (16, 16), color=(0, 0, 0)).save(tmp_path / "black.png")
    assert torch.equal(decode_image(tmp_path / "black.png"), torch.full((16, 16, 3), -1.0, dtype=torch.float64))


def test_larger_files_are_box_downsampled(tmp_path: Path) -> None:
    pixels = np.zeros((32, 32, 3), dtype=np.uint8)
    pixels[:, :16] = 255
    Image.fromarray(pixels).save(tmp_path / "half.png")
    decoded = decode_image(tmp_path / "half.png")
    assert decoded.shape == (16, 16, 3)
    assert bool(torch.all(decoded[:, :8] == 1.0))
    assert bool(torch.all(decoded[:, 8:] == -1.0))


def test_non_square_files_are_centre_cropped(tmp_path: Path) -> None:
    pixels = np.zeros((32, 48, 3), dtype=np.uint8)
    pixels[:, 8:40] = 255
    Image.fromarray(pixels).save(tmp_path / "wide.png")
    assert bool(torch.all(decode_image(tmp_path / "wide.png") == 1.0))


def test_decode_errors(tmp_path: Path) -> None:
    Image.new("RGB", (8, 8)).save(tmp_path / "small.png")
    with pytest.raises(ImageCodecException, match=re.escape("at least 16x16 is needed")):
        _ = decode_image(tmp_path / "small.png")
    (tmp_path / "garbage.png").write_bytes(b"not an image")
    with pytest.raises(ImageCodecException, match=re.escape("Cannot read image")):
        _ = decode_image(tmp_path / "garbage.png")
    with pytest.raises(ImageCodecException, match=re.escape("Cannot read image")):
        _ = decode_image(tmp_path / "missing.png")


def test_encode_errors(tmp_path: Path) -> None:
    with pytest.raises(ImageCodecException, match=re.escape("Unsupported image suffix '.jpg'")):
        _ = encode_image(torch.zeros(16, 16, 3), tmp_path / "img.jpg")
    with pytest.raises(ImageCodecException, match=re.escape("Expected an [H, W, 3] image")):
        _ = encode_image(torch.zeros(16, 16, 1), tmp_path / "img.png")


def test_image_grid_layout() -> None:
    white = torch.ones(16, 16, 3, dtype=torch.float64)
    black = -white
    sheet = image_grid([[white, black, white], [black, white, black]])
    assert sheet.size == (3 * (64 + 2) + 2, 2 * (64 + 2) + 2)
    assert sheet.getpixel((2, 2)) == (255, 255, 255)
    assert sheet.getpixel((2 + 66, 2)) == (0, 0, 0)
    with pytest.raises(ImageCodecException, match=re.escape("empty image grid")):
        _ = image_grid([])
