"""Image loading, grayscale conversion and binarization.

Images are plain numpy arrays: RGB images are ``uint8`` arrays of shape
``(H, W, 3)``, grayscale images are ``float64`` arrays of shape ``(H, W)``
with values in [0, 255], binary images are ``bool`` arrays of shape ``(H, W)``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# BT.601 weights in thousandths; integer accumulation keeps gray triples exact.
LUMA_WEIGHTS_MILLI = np.array([299, 587, 114], dtype=np.int64)
DEFAULT_THRESHOLD = 128.0
SUPPORTED_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm")


class ImageFormatError(ValueError):
    """Raised when an image file cannot be decoded."""


def load_image(path: str | Path) -> np.ndarray:
    """Decode a PNG or binary PGM/PPM file into an ``(H, W, 3)`` uint8 array.

    Grayscale files are returned with the gray channel replicated three times.
    """
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise ImageFormatError(f"unsupported image format: {path.name}")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("L", "RGB", "RGBA", "P", "1", "LA"):
                raise ImageFormatError(f"unsupported pixel mode {im.mode!r} in {path.name}")
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot decode {path}: {exc}") from exc
    if rgb.shape[0] == 0 or rgb.shape[1] == 0:
        raise ImageFormatError(f"zero-dimension image: {path}")
    return check_rgb(rgb)


def save_image(path: str | Path, img: np.ndarray) -> None:
    Image.fromarray(np.asarray(check_rgb(img), dtype=np.uint8)).save(path)


def check_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must have at least one pixel")
    if img.dtype != np.uint8 and (np.any(img < 0) or np.any(img > 255)):
        raise ValueError("channel values must lie in [0, 255]")
    return img


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma, kept as unrounded reals."""
    img = check_rgb(img)
    if np.issubdtype(img.dtype, np.integer):
        return (img.astype(np.int64) @ LUMA_WEIGHTS_MILLI) / 1000.0
    return (img.astype(np.float64) @ LUMA_WEIGHTS_MILLI) / 1000.0


def binarize(gray: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Pixels at or above ``threshold`` become True."""
    if not 0.0 <= threshold <= 255.0:
        raise ValueError(f"threshold must lie in [0, 255], got {threshold}")
    return np.asarray(gray) >= threshold


def list_corpus(directory: str | Path) -> list[Path]:
    """Image files in ``directory`` sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in SUPPORTED_SUFFIXES)
