"""Analog image codec interface, the block-DCT reference codec and frame assembly.

A frame of ``k`` complex channel uses carries ``k - 14`` payload symbols
followed by 14 symbols holding the 28 standardized topological features.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

import numpy as np
from scipy.fft import dctn, idctn

from .signatures import FeatureStats

FEATURE_SYMBOLS = 14
BLOCK = 8
# compression dimension C -> rate C / (2 * PATCH_DIM); C = 32 gives R = 1/3
PATCH_DIM = 48


@dataclass(frozen=True)
class CodecBudget:
    """Channel-use budget of one frame for an ``height x width`` RGB image."""

    height: int
    width: int
    k: int
    feature_symbols: int = FEATURE_SYMBOLS

    def __post_init__(self):
        if self.k <= self.feature_symbols:
            raise ValueError(f"k={self.k} leaves no payload after {self.feature_symbols} feature symbols")
        if not 0 < self.rate <= 1:
            raise ValueError(f"compression rate {self.rate} outside (0, 1]")

    @classmethod
    def from_rate(cls, height: int, width: int, rate: float, **kw) -> "CodecBudget":
        m = height * width * 3
        return cls(height, width, int(round(rate * 2 * m)), **kw)

    @classmethod
    def from_compression_dim(cls, height: int, width: int, c: int, **kw) -> "CodecBudget":
        return cls.from_rate(height, width, c / (2 * PATCH_DIM), **kw)

    @property
    def m(self) -> int:
        return self.height * self.width * 3

    @property
    def rate(self) -> float:
        return self.k / (2 * self.m)

    @property
    def payload_reals(self) -> int:
        return 2 * (self.k - self.feature_symbols)

    @property
    def feature_reals(self) -> int:
        return 2 * self.feature_symbols


class Codec(Protocol):
    """Maps an RGB image to ``budget.payload_reals`` reals and back."""

    def encode(self, img: np.ndarray, budget: CodecBudget) -> np.ndarray: ...

    def decode(self, payload: np.ndarray, budget: CodecBudget) -> np.ndarray: ...


class CodecBudgetError(ValueError):
    pass


@lru_cache(maxsize=None)
def zigzag(n: int = BLOCK) -> np.ndarray:
    """Flat indices of an ``n x n`` block in JPEG zig-zag order."""
    cells = sorted(((u, v) for u in range(n) for v in range(n)),
                   key=lambda uv: (uv[0] + uv[1], uv[1] if (uv[0] + uv[1]) % 2 == 0 else uv[0]))
    return np.array([u * n + v for u, v in cells])


@lru_cache(maxsize=None)
def coefficient_scale(n: int = BLOCK) -> np.ndarray:
    """Per-position divisor bringing raw 8-bit DCT coefficients to roughly unit spread."""
    u, v = np.indices((n, n))
    return 1024.0 / (1.0 + u + v)


def _padded_shape(h, w):
    return -(-h // BLOCK) * BLOCK, -(-w // BLOCK) * BLOCK


@lru_cache(maxsize=64)
def _priority(h: int, w: int) -> np.ndarray:
    """Transmission order of all coefficients in a (3, n_blocks, 64) array.

    Low zig-zag positions of every block and channel go first, so each block
    gets at least ``floor(payload / (3 * n_blocks))`` coefficients.
    """
    ph, pw = _padded_shape(h, w)
    nb = (ph // BLOCK) * (pw // BLOCK)
    zz = zigzag()
    c, b = np.meshgrid(np.arange(3), np.arange(nb), indexing="ij")
    order = [(c.ravel() * nb + b.ravel()) * 64 + z for z in zz]
    return np.concatenate(order)


class DctCodec:
    """8x8 block DCT per color channel, coefficients sent in zig-zag priority."""

    name = "dct-ref"

    @staticmethod
    def _blocks(h, w):
        ph, pw = _padded_shape(h, w)
        return ph // BLOCK, pw // BLOCK

    def encode(self, img: np.ndarray, budget: CodecBudget) -> np.ndarray:
        img = np.asarray(img)
        h, w = img.shape[:2]
        if (h, w) != (budget.height, budget.width):
            raise ValueError(f"image {h}x{w} does not match budget {budget.height}x{budget.width}")
        bh, bw = self._blocks(h, w)
        if budget.payload_reals < 3 * bh * bw:
            raise CodecBudgetError(
                f"payload of {budget.payload_reals} reals cannot carry the {3 * bh * bw} DC terms")
        x = np.pad(img.astype(np.float64), ((0, bh * BLOCK - h), (0, bw * BLOCK - w), (0, 0)), mode="edge")
        # (3, bh, bw, 8, 8)
        blocks = x.transpose(2, 0, 1).reshape(3, bh, BLOCK, bw, BLOCK).transpose(0, 1, 3, 2, 4)
        coef = dctn(blocks, axes=(3, 4), norm="ortho") / coefficient_scale()
        flat = coef.reshape(-1)
        take = _priority(h, w)[: budget.payload_reals]
        payload = np.zeros(budget.payload_reals)
        payload[: take.size] = flat[take]
        return payload

    def decode(self, payload: np.ndarray, budget: CodecBudget) -> np.ndarray:
        payload = np.asarray(payload, dtype=np.float64)
        if payload.shape != (budget.payload_reals,):
            raise ValueError(f"payload length {payload.size} does not match budget {budget.payload_reals}")
        h, w = budget.height, budget.width
        bh, bw = self._blocks(h, w)
        flat = np.zeros(3 * bh * bw * 64)
        take = _priority(h, w)[: budget.payload_reals]
        flat[take] = payload[: take.size]
        coef = flat.reshape(3, bh, bw, BLOCK, BLOCK) * coefficient_scale()
        blocks = idctn(coef, axes=(3, 4), norm="ortho")
        x = blocks.transpose(0, 1, 3, 2, 4).reshape(3, bh * BLOCK, bw * BLOCK).transpose(1, 2, 0)
        return np.clip(np.rint(x[:h, :w]), 0, 255).astype(np.uint8)


CODECS = {DctCodec.name: DctCodec}


def get_codec(name: str) -> Codec:
    try:
        return CODECS[name]()
    except KeyError:
        raise ValueError(f"unknown codec {name!r}; available: {sorted(CODECS)}") from None


def codec_encode(img: np.ndarray, budget: CodecBudget) -> np.ndarray:
    return DctCodec().encode(img, budget)


def codec_decode(payload: np.ndarray, budget: CodecBudget) -> np.ndarray:
    return DctCodec().decode(payload, budget)


def assemble_frame(payload: np.ndarray, features: np.ndarray, stats: FeatureStats | None) -> np.ndarray:
    """Pack payload reals and standardized features into complex symbols (payload first)."""
    if stats is None:
        raise ValueError("feature standardization stats are required")
    payload = np.asarray(payload, dtype=np.float64)
    z = stats.standardize(features)
    if z.size % 2 or payload.size % 2:
        raise ValueError("payload and feature lengths must be even")
    reals = np.concatenate([payload, z])
    return reals[0::2] + 1j * reals[1::2]


def disassemble_frame(received: np.ndarray, h: complex, stats: FeatureStats, n_features: int,
                      gain: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Equalize by ``h * gain`` and split a frame into payload and de-standardized features.

    ``gain`` is the transmitter's power-normalization factor, assumed known to
    the receiver like the channel state.
    """
    x = np.asarray(received) / (h * gain)
    reals = np.empty(2 * x.size)
    reals[0::2] = x.real
    reals[1::2] = x.imag
    split = reals.size - n_features
    return reals[:split], stats.restore(reals[split:])
