"""Per-pixel filtration values for height, radial and grayscale filtrations.

Pixel coordinates are ``(u, v) = (row, column)``, zero-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Default filtration parameters of the TDA encoder (32x32 inputs).
DEFAULT_DIRECTIONS: tuple[tuple[float, float], ...] = (
    (1, 0), (0, 1), (1, 1), (1, -1), (-1, 1), (-1, -1), (-1, 0), (0, -1),
)
DEFAULT_CENTERS: tuple[tuple[int, int], ...] = (
    (23, 7), (23, 15), (23, 23), (7, 23), (7, 15), (7, 7), (15, 23), (15, 15), (15, 7),
)
REFERENCE_SIZE = 32


@dataclass(frozen=True)
class FiltrationMap:
    """Filtration value of every pixel plus the largest value the map can assign."""

    values: np.ndarray
    ceiling: float
    name: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"filtration values must be a non-empty 2-D grid, got {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ceiling", float(self.ceiling))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _grid(shape):
    u, v = np.indices(shape, dtype=np.float64)
    return u, v


def height_filtration(mask: np.ndarray, direction) -> FiltrationMap:
    """Height filtration of a binary image along ``direction``.

    Active pixels get their projection onto the unit direction, shifted so the
    smallest projection over the whole grid is 0. Inactive pixels get the
    largest shifted projection over the grid, so the background enters last.
    """
    mask = np.asarray(mask, dtype=bool)
    psi = np.asarray(direction, dtype=np.float64)
    norm = np.hypot(psi[0], psi[1])
    if norm == 0:
        raise ValueError("direction must be non-zero")
    u, v = _grid(mask.shape)
    proj = (psi[0] / norm) * u + (psi[1] / norm) * v
    proj -= proj.min()
    ceiling = proj.max()
    values = np.where(mask, proj, ceiling)
    return FiltrationMap(values, ceiling, f"height({_fmt(direction[0])},{_fmt(direction[1])})")


def radial_filtration(mask: np.ndarray, center) -> FiltrationMap:
    """Euclidean distance to ``center`` on active pixels; the farthest grid distance elsewhere."""
    mask = np.asarray(mask, dtype=bool)
    uc, vc = center
    h, w = mask.shape
    if not (0 <= uc < h and 0 <= vc < w):
        raise ValueError(f"center {center} outside a {h}x{w} grid")
    u, v = _grid(mask.shape)
    dist = np.hypot(u - uc, v - vc)
    ceiling = dist.max()
    values = np.where(mask, dist, ceiling)
    return FiltrationMap(values, ceiling, f"radial({uc},{vc})")


def grayscale_filtration(gray: np.ndarray) -> FiltrationMap:
    gray = np.asarray(gray, dtype=np.float64)
    return FiltrationMap(gray, gray.max(), "grayscale")


def scale_center(center, shape, reference: int = REFERENCE_SIZE) -> tuple[int, int]:
    """Map a center given for ``reference``-sized grids onto a grid of ``shape``.

    Centers are used verbatim on reference-sized grids and scaled
    proportionally (rounded half up, clipped inside the grid) otherwise.
    """
    h, w = shape
    u = center[0] if h == reference else int(np.floor(center[0] * h / reference + 0.5))
    v = center[1] if w == reference else int(np.floor(center[1] * w / reference + 0.5))
    return min(max(u, 0), h - 1), min(max(v, 0), w - 1)


def default_filtrations(mask: np.ndarray, directions=DEFAULT_DIRECTIONS,
                        centers=DEFAULT_CENTERS) -> list[FiltrationMap]:
    """Height filtrations for every direction, then radial filtrations for every center."""
    maps = [height_filtration(mask, d) for d in directions]
    maps += [radial_filtration(mask, scale_center(c, mask.shape)) for c in centers]
    return maps


def _fmt(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)
