"""ACK/NAK decisions from transmitted vs. recomputed topological features."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signatures import FeatureStats, SelectionMask, pearson_select

MIN_CORPUS = 50
DEFAULT_ACCEPTANCE = 0.95
DEFAULT_QUALITY_TARGET = 25.0
# Power normalization and equalization are not bit-exact inverses; differences
# below this are round-off, not channel damage.
DISTANCE_FLOOR = 1e-12


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorModel:
    """Selected features, their standardization stats and the acceptance threshold ``chi``."""

    mask: SelectionMask
    stats: FeatureStats
    chi: float
    distance: str = "rms"

    def __post_init__(self):
        if self.stats.mean.shape != (len(self.mask),):
            raise ValueError("stats must cover every selected feature")
        if self.distance != "rms":
            raise ValueError(f"unsupported distance {self.distance!r}")

    def with_chi(self, chi: float) -> "DetectorModel":
        return DetectorModel(self.mask, self.stats, chi, self.distance)

    def to_dict(self) -> dict:
        return {
            "mask": list(self.mask.indices),
            "mask_bound": self.mask.bound,
            "means": self.stats.mean.tolist(),
            "stds": self.stats.std.tolist(),
            "chi": self.chi,
            "distance": self.distance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorModel":
        mask = SelectionMask(tuple(int(i) for i in data["mask"]), float(data.get("mask_bound", 0.0)))
        stats = FeatureStats(np.array(data["means"], float), np.array(data["stds"], float))
        return cls(mask, stats, float(data["chi"]), data.get("distance", "rms"))

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        payload = dict(extra or {})
        payload.update(self.to_dict())
        Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "DetectorModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def tda_distance(f_tx: np.ndarray, f_rx: np.ndarray, model: DetectorModel) -> float:
    """Root-mean-square of the standardized feature differences; round-off level results read as 0."""
    f_tx, f_rx = np.asarray(f_tx, dtype=np.float64), np.asarray(f_rx, dtype=np.float64)
    if f_tx.shape != f_rx.shape or f_tx.shape != (len(model.mask),):
        raise ValueError(f"feature lengths {f_tx.shape} / {f_rx.shape} do not match the mask ({len(model.mask)})")
    z = (f_tx - f_rx) / model.stats.std
    d = float(np.sqrt(np.mean(z * z)))
    return 0.0 if d < DISTANCE_FLOOR else d


def decide(distance: float, chi: float) -> int:
    """ACK (1) when the distance does not exceed ``chi``."""
    return int(distance <= chi)


def calibrate_threshold(distances, psnrs, quality_target: float = DEFAULT_QUALITY_TARGET,
                        acceptance: float = DEFAULT_ACCEPTANCE) -> float:
    """Smallest ``chi`` accepting at least ``acceptance`` of the reconstructions that
    reach ``quality_target`` dB."""
    distances = np.asarray(distances, dtype=np.float64)
    good = np.sort(distances[np.asarray(psnrs, dtype=np.float64) >= quality_target])
    if good.size == 0:
        raise CalibrationError(f"no reconstruction reaches the {quality_target} dB quality target")
    need = math.ceil(acceptance * good.size - 1e-9)
    return float(good[max(need, 1) - 1])


def fit_selection(features: np.ndarray, k: int) -> tuple[SelectionMask, FeatureStats]:
    mask = pearson_select(features, k)
    return mask, FeatureStats.fit(mask.apply(features))


def calibrate(corpus, budget, channel, *, encoder=None, codec=None, k: int = 28,
              quality_target: float = DEFAULT_QUALITY_TARGET, acceptance: float = DEFAULT_ACCEPTANCE,
              features: np.ndarray | None = None, report: dict | None = None) -> DetectorModel:
    """Fit the feature selection, standardization and threshold on ``corpus``.

    Each image goes once through a noiseless link and once through ``channel``;
    ``chi`` is set so that ``acceptance`` of the reconstructions meeting
    ``quality_target`` are accepted. ``features`` may carry the precomputed full
    feature matrix of the corpus. When ``report`` is given it receives the
    calibration distances and PSNRs.
    """
    from dataclasses import replace

    from .harq import HarqConfig, run_session
    from .tda import TdaEncoder

    corpus = list(corpus)
    if len(corpus) < MIN_CORPUS:
        raise CalibrationError(f"calibration needs at least {MIN_CORPUS} images, got {len(corpus)}")
    encoder = encoder or TdaEncoder()
    if features is None:
        features = np.array([encoder.features(img) for img in corpus])
    mask, stats = fit_selection(features, k)
    provisional = DetectorModel(mask, stats, math.inf)

    distances, psnrs = [], []
    links = [replace(channel, snr_db=math.inf), channel]
    for li, link in enumerate(links):
        cfg = HarqConfig(link, budget, n_max=1)
        for i, img in enumerate(corpus):
            res = run_session(img, cfg, provisional, encoder=encoder, codec=codec,
                              key=(li, i), features=features[i])
            distances.append(res.distance[0])
            psnrs.append(res.psnr[0])
    chi = calibrate_threshold(distances, psnrs, quality_target, acceptance)
    if report is not None:
        report.update(distances=distances, psnrs=psnrs)
    return provisional.with_chi(chi)
