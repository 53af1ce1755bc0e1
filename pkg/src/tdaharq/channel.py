"""Power normalization and AWGN / Rayleigh block-fading channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHANNEL_KINDS = ("awgn", "rayleigh")


@dataclass(frozen=True)
class ChannelSpec:
    kind: str = "awgn"
    snr_db: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {CHANNEL_KINDS}")

    @property
    def noise_variance(self) -> float:
        return sigma_from_snr(self.snr_db, self.kind)


def slot_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def power_normalize(x: np.ndarray) -> np.ndarray:
    """Scale ``x`` to squared norm ``k = len(x)``."""
    x = np.asarray(x, dtype=np.complex128)
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ValueError("cannot normalize a zero-norm block")
    return np.sqrt(x.size) * x / norm


def sigma_from_snr(snr_db: float, kind: str = "awgn") -> float:
    """Complex noise variance for unit average symbol power.

    The Rayleigh gain has unit mean power, so ``kind`` does not change the value.
    """
    if kind not in CHANNEL_KINDS:
        raise ValueError(f"unknown channel kind {kind!r}")
    return float(10.0 ** (-snr_db / 10.0))


def complex_noise(rng: np.random.Generator, size: int, variance: float) -> np.ndarray:
    """Circular complex Gaussian samples with total variance ``variance``."""
    std = np.sqrt(variance / 2.0)
    return std * rng.standard_normal(size) + 1j * std * rng.standard_normal(size)


def rayleigh_gain(rng: np.random.Generator) -> complex:
    return complex(complex_noise(rng, 1, 1.0)[0])


def transmit(y: np.ndarray, spec: ChannelSpec, rng: np.random.Generator) -> tuple[np.ndarray, complex]:
    """Send one block; returns the received block and the channel gain used.

    The Rayleigh gain is drawn once and held for the whole block.
    """
    y = np.asarray(y, dtype=np.complex128)
    h = rayleigh_gain(rng) if spec.kind == "rayleigh" else 1.0 + 0.0j
    noise = complex_noise(rng, y.size, spec.noise_variance)
    return h * y + noise, h


def realized_snr_db(signal: np.ndarray, noise: np.ndarray) -> float:
    return float(10.0 * np.log10(np.sum(np.abs(signal) ** 2) / np.sum(np.abs(noise) ** 2)))
