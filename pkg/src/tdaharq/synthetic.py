"""Deterministic synthetic image corpus: smooth backgrounds with random shapes."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imageio import save_image


def synthetic_image(rng: np.random.Generator, size: int = 32) -> np.ndarray:
    """One RGB image with a color gradient, a few disks/rings/bars and light texture."""
    u, v = np.indices((size, size), dtype=np.float64) / max(size - 1, 1)
    c0, c1 = rng.uniform(0, 255, 3), rng.uniform(0, 255, 3)
    angle = rng.uniform(0, 2 * np.pi)
    t = (np.cos(angle) * u + np.sin(angle) * v + 1.0) / 2.0
    img = c0 + (c1 - c0) * t[..., None]

    for _ in range(rng.integers(2, 6)):
        color = rng.uniform(0, 255, 3)
        kind = rng.integers(3)
        cu, cv = rng.uniform(0.1, 0.9, 2)
        if kind == 0:
            r = rng.uniform(0.08, 0.3)
            region = (u - cu) ** 2 + (v - cv) ** 2 <= r * r
        elif kind == 1:
            r = rng.uniform(0.15, 0.35)
            d = np.sqrt((u - cu) ** 2 + (v - cv) ** 2)
            region = np.abs(d - r) <= rng.uniform(0.03, 0.08)
        else:
            hu, hv = rng.uniform(0.04, 0.3, 2)
            region = (np.abs(u - cu) <= hu) & (np.abs(v - cv) <= hv)
        img[region] = color

    img += rng.normal(0, 4.0, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def synthetic_corpus(n: int, seed: int = 0, size: int = 32) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [synthetic_image(rng, size) for _ in range(n)]


def smooth_gradient(size: int = 32, seed: int = 0) -> np.ndarray:
    """A shape-free smooth color ramp, the easy case for block transforms."""
    rng = np.random.default_rng(seed)
    u, v = np.indices((size, size), dtype=np.float64) / max(size - 1, 1)
    a, b, c = rng.uniform(30, 220, (3, 3))
    img = a + (b - a) * u[..., None] * 0.5 + (c - a) * v[..., None] * 0.5
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def write_corpus(directory: str | Path, n: int, seed: int = 0, size: int = 32) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(synthetic_corpus(n, seed, size)):
        path = directory / f"img_{i:04d}.png"
        save_image(path, img)
        paths.append(path)
    return paths
