"""Incremental-knowledge HARQ sessions with TDA-based ACK/NAK decisions.

The transmitter encodes an image once into a power-normalized frame. Every
attempt sends that same frame, keeps all received copies, combines them by
maximum-ratio combining, decodes, recomputes the topological features of the
reconstruction and lets the detector decide whether to stop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSpec, power_normalize, slot_rng, transmit
from .codec import Codec, CodecBudget, DctCodec, assemble_frame, disassemble_frame
from .detector import DetectorModel, decide, tda_distance
from .metrics import ms_ssim, psnr
from .tda import TdaEncoder


@dataclass(frozen=True)
class HarqConfig:
    channel: ChannelSpec
    budget: CodecBudget
    n_max: int = 3
    chi: float | None = None  # None defers to the detector model's threshold

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")


@dataclass
class HarqSession:
    """Receiver state: the buffer of ``(received block, channel gain)`` pairs and the ACK flag."""

    n_max: int
    buffer: list[tuple[np.ndarray, complex]] = field(default_factory=list)
    zeta: int = 0

    @property
    def attempts(self) -> int:
        return len(self.buffer)

    @property
    def done(self) -> bool:
        return self.zeta == 1 or self.attempts >= self.n_max

    def receive(self, block: np.ndarray, h: complex) -> None:
        if self.done:
            raise RuntimeError("session already finished")
        self.buffer.append((np.asarray(block), complex(h)))


@dataclass
class SessionResult:
    image_id: str
    snr_db: float
    channel: str
    rate: float
    attempts: int
    zeta: int
    zeta_trace: list[int]
    psnr: list[float]
    ms_ssim: list[float]
    distance: list[float]
    reconstruction: np.ndarray | None = field(default=None, repr=False)

    def to_record(self) -> dict:
        return {
            "image_id": self.image_id,
            "snr_db": self.snr_db,
            "channel": self.channel,
            "R": self.rate,
            "attempts": self.attempts,
            "zeta": self.zeta,
            "zeta_trace": self.zeta_trace,
            "psnr": self.psnr,
            "ms_ssim": self.ms_ssim,
            "distance": self.distance,
        }


def combine(buffer) -> np.ndarray:
    """Maximum-ratio combination of the buffered receptions."""
    if not buffer:
        raise ValueError("cannot combine an empty buffer")
    num = sum(np.conj(h) * block for block, h in buffer)
    den = sum(abs(h) ** 2 for _, h in buffer)
    return num / den


def pad_view(buffer, n_max: int, k: int) -> np.ndarray:
    """Buffered blocks laid end to end and zero-padded to ``k * n_max`` symbols."""
    if len(buffer) > n_max:
        raise ValueError(f"buffer holds {len(buffer)} blocks, more than n_max={n_max}")
    out = np.zeros(k * n_max, dtype=np.complex128)
    for j, (block, _) in enumerate(buffer):
        out[j * k:(j + 1) * k] = block
    return out


def prepare_frame(img, budget: CodecBudget, model: DetectorModel, codec: Codec,
                  features: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
    """Encode once: returns the normalized frame, its normalization gain and the sent features."""
    payload = codec.encode(img, budget)
    f_tx = model.mask.apply(features)
    frame = assemble_frame(payload, f_tx, model.stats)
    y = power_normalize(frame)
    gain = float(np.sqrt(frame.size) / np.linalg.norm(frame))
    return y, gain, f_tx


def run_session(img: np.ndarray, cfg: HarqConfig, model: DetectorModel, *,
                encoder: TdaEncoder | None = None, codec: Codec | None = None,
                key: tuple[int, ...] = (), image_id: str = "",
                features: np.ndarray | None = None, keep_reconstruction: bool = False) -> SessionResult:
    """Run one HARQ exchange for ``img``.

    Attempt ``j`` draws its channel realization from ``(cfg.channel.seed, *key, j)``.
    ``features`` may carry the precomputed full feature vector of ``img``.
    After ``n_max`` NAKs the last reconstruction is kept with ``zeta = 0``.
    """
    encoder = encoder or TdaEncoder()
    codec = codec or DctCodec()
    chi = model.chi if cfg.chi is None else cfg.chi
    if features is None:
        features = encoder.features(img)
    y, gain, _ = prepare_frame(img, cfg.budget, model, codec, features)
    n_feat = len(model.mask)

    session = HarqSession(cfg.n_max)
    trace, psnrs, ssims, dists = [], [], [], []
    x_hat = None
    while not session.done:
        j = session.attempts + 1
        received, h = transmit(y, cfg.channel, slot_rng(cfg.channel.seed, *key, j))
        session.receive(received, h)
        payload_hat, f_tx_hat = disassemble_frame(combine(session.buffer), 1.0, model.stats, n_feat, gain)
        x_hat = codec.decode(payload_hat, cfg.budget)
        f_rx = model.mask.apply(encoder.features(x_hat))
        dist = tda_distance(f_tx_hat, f_rx, model)
        session.zeta = decide(dist, chi)
        trace.append(session.zeta)
        psnrs.append(psnr(img, x_hat))
        ssims.append(ms_ssim(img, x_hat))
        dists.append(dist)

    return SessionResult(image_id, cfg.channel.snr_db, cfg.channel.kind, cfg.budget.rate,
                         session.attempts, session.zeta, trace, psnrs, ssims, dists,
                         x_hat if keep_reconstruction else None)
