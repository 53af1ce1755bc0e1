"""The TDA encoder: image -> binary mask -> 17 filtrations -> diagrams -> feature vector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cubical import PersistenceDiagram, compute_persistence
from .filtration import (
    DEFAULT_CENTERS,
    DEFAULT_DIRECTIONS,
    FiltrationMap,
    height_filtration,
    radial_filtration,
    scale_center,
)
from .imageio import DEFAULT_THRESHOLD, binarize, to_grayscale
from .signatures import SignatureConfig, TopoFeatureVector, vectorize

FULL_FEATURES = 476
SELECTED_FEATURES = 28


@dataclass(frozen=True)
class TdaEncoder:
    directions: tuple = DEFAULT_DIRECTIONS
    centers: tuple = DEFAULT_CENTERS
    threshold: float = DEFAULT_THRESHOLD
    signatures: SignatureConfig = field(default_factory=SignatureConfig)

    @property
    def n_filtrations(self) -> int:
        return len(self.directions) + len(self.centers)

    @property
    def n_features(self) -> int:
        return self.n_filtrations * self.signatures.block_size

    def filtration_names(self) -> list[str]:
        probe = np.ones((32, 32), bool)
        return [fm.name for fm in self.filtrations(probe)]

    def filtrations(self, mask: np.ndarray) -> list[FiltrationMap]:
        maps = [height_filtration(mask, d) for d in self.directions]
        for c in self.centers:
            fm = radial_filtration(mask, scale_center(c, mask.shape))
            # keep the configured label so layouts agree across image sizes
            maps.append(FiltrationMap(fm.values, fm.ceiling, f"radial({c[0]},{c[1]})"))
        return maps

    def mask(self, img: np.ndarray) -> np.ndarray:
        return binarize(to_grayscale(img), self.threshold)

    def diagrams(self, img: np.ndarray) -> list[PersistenceDiagram]:
        return [compute_persistence(fm) for fm in self.filtrations(self.mask(img))]

    def encode(self, img: np.ndarray) -> TopoFeatureVector:
        return vectorize(self.diagrams(img), self.signatures)

    def features(self, img: np.ndarray) -> np.ndarray:
        return self.encode(img).values
