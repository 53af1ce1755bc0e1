"""Persistence signatures, feature-vector assembly and Pearson feature selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cubical import PersistenceDiagram

SQRT2_2 = np.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class SignatureConfig:
    """Parameters of the per-filtration signature block.

    Per homology dimension a block holds ``betti_samples`` Betti-curve values,
    one landscape amplitude per layer, one heat-kernel amplitude per bandwidth,
    one Wasserstein amplitude per order, the bottleneck amplitude and the
    persistent entropy.
    """

    wasserstein_orders: tuple[float, ...] = (1, 2)
    landscape_layers: tuple[int, ...] = (1, 2)
    heat_bandwidths: tuple[float, ...] = (10, 15)
    betti_samples: int = 6
    landscape_points: int = 100
    heat_grid: int = 32
    dims: tuple[int, ...] = (0, 1)

    def __post_init__(self):
        for name in ("wasserstein_orders", "landscape_layers", "heat_bandwidths", "dims"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, value)
        if min(self.betti_samples, self.landscape_points, self.heat_grid) < 1:
            raise ValueError("sample counts must be at least 1")
        if min(self.wasserstein_orders) < 1:
            raise ValueError("Wasserstein orders must be >= 1")
        if min(self.landscape_layers) < 1:
            raise ValueError("landscape layers must be >= 1")
        if min(self.heat_bandwidths) <= 0:
            raise ValueError("heat-kernel bandwidths must be positive")

    def block_layout(self) -> list[tuple[str, object]]:
        """(signature name, parameter) for each entry of one homology-dimension block."""
        layout: list[tuple[str, object]] = [("betti", i) for i in range(self.betti_samples)]
        layout += [("landscape", lam) for lam in self.landscape_layers]
        layout += [("heat", kappa) for kappa in self.heat_bandwidths]
        layout += [("wasserstein", p) for p in self.wasserstein_orders]
        layout += [("bottleneck", None), ("entropy", None)]
        return layout

    @property
    def block_size(self) -> int:
        return len(self.dims) * len(self.block_layout())


@dataclass(frozen=True)
class TopoFeatureVector:
    """Concatenated signature values with a (filtration, q, name, parameter) label per entry."""

    values: np.ndarray
    layout: tuple[tuple[str, int, str, object], ...]

    def __len__(self) -> int:
        return self.values.size

    def header(self) -> list[str]:
        return [column_name(entry) for entry in self.layout]

    def index(self, filtration: str, q: int, name: str, param=None) -> int:
        return self.layout.index((filtration, q, name, param))


def column_name(entry) -> str:
    filtration, q, name, param = entry
    suffix = "" if param is None else f"_{param}"
    return f"{filtration}:H{q}:{name}{suffix}"


# -- individual signatures -------------------------------------------------

def _lifetimes(pd: PersistenceDiagram, q: int) -> np.ndarray:
    sel = pd.dims == q
    return pd.deaths[sel] - pd.births[sel]


def wasserstein_amplitude(pd: PersistenceDiagram, p: float, q: int) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    life = _lifetimes(pd, q)
    if life.size == 0:
        return 0.0
    return float(SQRT2_2 * np.sum(life ** p) ** (1.0 / p))


def bottleneck_amplitude(pd: PersistenceDiagram, q: int) -> float:
    life = _lifetimes(pd, q)
    return float(SQRT2_2 * life.max()) if life.size else 0.0


def betti_curve(pd: PersistenceDiagram, level: float, q: int) -> int:
    """Number of closed bars ``[b, d]`` containing ``level``."""
    bars = pd.intervals(q)
    return int(np.count_nonzero((bars[:, 0] <= level) & (level <= bars[:, 1])))


def _tents(bars: np.ndarray, points: np.ndarray) -> np.ndarray:
    # (n_bars, n_points); zero outside (b, d), peak at the midpoint
    rise = points[None, :] - bars[:, :1]
    fall = bars[:, 1:] - points[None, :]
    return np.maximum(np.minimum(rise, fall), 0.0)


def _layers(bars: np.ndarray, points: np.ndarray, layers) -> np.ndarray:
    """Landscape layers at ``points``; one row per requested layer."""
    out = np.zeros((len(layers), points.size))
    if bars.shape[0] == 0:
        return out
    tents = -np.sort(-_tents(bars, points), axis=0)
    for row, lam in enumerate(layers):
        if lam <= tents.shape[0]:
            out[row] = tents[lam - 1]
    return out


def landscape_value(pd: PersistenceDiagram, layer: int, point: float, q: int) -> float:
    """Value of the ``layer``-th largest tent function at ``point``."""
    if layer < 1:
        raise ValueError("layer must be >= 1")
    return float(_layers(pd.intervals(q), np.array([float(point)]), (layer,))[0, 0])


def _heat(bars: np.ndarray, kappa: float, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Heat kernel on the grid ``r x s``; the Gaussians factor per axis."""
    if bars.shape[0] == 0:
        return np.zeros((r.size, s.size))
    b, d = bars[:, 0], bars[:, 1]
    scale = 8.0 * kappa
    rb = np.exp(-((r[:, None] - b[None, :]) ** 2) / scale)
    rd = np.exp(-((r[:, None] - d[None, :]) ** 2) / scale)
    sb = np.exp(-((s[:, None] - b[None, :]) ** 2) / scale)
    sd = np.exp(-((s[:, None] - d[None, :]) ** 2) / scale)
    return (rb @ sd.T - rd @ sb.T) / (np.pi * scale)


def heat_kernel_value(pd: PersistenceDiagram, kappa: float, r: float, s: float, q: int) -> float:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return float(_heat(pd.intervals(q), kappa, np.array([float(r)]), np.array([float(s)]))[0, 0])


def persistent_entropy(pd: PersistenceDiagram, q: int) -> float:
    """Shannon entropy (natural log) of the normalized lifetimes; 0 when they sum to 0."""
    life = _lifetimes(pd, q)
    total = life.sum()
    if total <= 0:
        return 0.0
    prob = life[life > 0] / total
    return float(-np.sum(prob * np.log(prob)))


# -- amplitudes used in the feature vector ---------------------------------

def betti_levels(ceiling: float, count: int) -> np.ndarray:
    return np.linspace(0.0, ceiling, count)


def landscape_amplitude(pd: PersistenceDiagram, layer: int, q: int, points: int = 100) -> float:
    """L2 norm of one landscape layer sampled uniformly on [0, ceiling]."""
    return float(_landscape_amplitudes(pd.intervals(q), pd.ceiling, (layer,), points)[0])


def heat_amplitude(pd: PersistenceDiagram, kappa: float, q: int, grid: int = 32) -> float:
    """L2 norm of the heat kernel over a ``grid x grid`` lattice spanning [0, ceiling]^2."""
    if pd.ceiling <= 0:
        return 0.0
    xs = np.linspace(0.0, pd.ceiling, grid)
    cell = (xs[1] - xs[0]) ** 2 if grid > 1 else 1.0
    return float(np.sqrt(np.sum(_heat(pd.intervals(q), kappa, xs, xs) ** 2) * cell))


def _landscape_amplitudes(bars, ceiling, layers, points):
    if ceiling <= 0 or bars.shape[0] == 0:
        return np.zeros(len(layers))
    xs = np.linspace(0.0, ceiling, points)
    step = xs[1] - xs[0] if points > 1 else 1.0
    values = _layers(bars, xs, layers)
    return np.sqrt(np.sum(values ** 2, axis=1) * step)


def _heat_amplitudes(bars, ceiling, kappas, grid):
    if ceiling <= 0 or bars.shape[0] == 0:
        return np.zeros(len(kappas))
    xs = np.linspace(0.0, ceiling, grid)
    cell = (xs[1] - xs[0]) ** 2 if grid > 1 else 1.0
    sq_b = (xs[:, None] - bars[None, :, 0]) ** 2
    sq_d = (xs[:, None] - bars[None, :, 1]) ** 2
    out = np.empty(len(kappas))
    for i, kappa in enumerate(kappas):
        # r and s share one lattice, so the kernel is (M - M^T) / (8 pi kappa)
        scale = 8.0 * kappa
        m = np.exp(-sq_b / scale) @ np.exp(-sq_d / scale).T
        out[i] = np.sqrt(np.sum((m - m.T) ** 2) * cell) / (np.pi * scale)
    return out


def signature_block(pd: PersistenceDiagram, q: int, cfg: SignatureConfig) -> np.ndarray:
    """Signature entries of one diagram and homology dimension, in ``block_layout`` order."""
    bars = pd.intervals(q)
    life = bars[:, 1] - bars[:, 0]
    levels = betti_levels(pd.ceiling, cfg.betti_samples)
    betti = np.count_nonzero((bars[:, :1] <= levels) & (levels <= bars[:, 1:]), axis=0)
    parts = [
        betti.astype(np.float64),
        _landscape_amplitudes(bars, pd.ceiling, cfg.landscape_layers, cfg.landscape_points),
        _heat_amplitudes(bars, pd.ceiling, cfg.heat_bandwidths, cfg.heat_grid),
        [SQRT2_2 * np.sum(life ** p) ** (1.0 / p) if life.size else 0.0 for p in cfg.wasserstein_orders],
        [SQRT2_2 * life.max() if life.size else 0.0],
        [persistent_entropy(pd, q)],
    ]
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


def vectorize(diagrams, cfg: SignatureConfig = SignatureConfig(),
              names: list[str] | None = None) -> TopoFeatureVector:
    """Concatenate signature blocks of ``diagrams`` in the given filtration order.

    ``names`` fixes the expected filtrations; a mismatch with the diagram names
    raises ``ValueError``.
    """
    diagrams = list(diagrams)
    if names is not None:
        got = [pd.name for pd in diagrams]
        if got != list(names):
            missing = [n for n in names if n not in got]
            raise ValueError(f"diagrams do not match configured filtrations (missing {missing}, got {got})")
    block = cfg.block_layout()
    values, layout = [], []
    for pd in diagrams:
        for q in cfg.dims:
            values.append(signature_block(pd, q, cfg))
            layout += [(pd.name, q, name, param) for name, param in block]
    vec = np.concatenate(values) if values else np.zeros(0)
    return TopoFeatureVector(vec, tuple(layout))


def recompute_entry(pd: PersistenceDiagram, entry, cfg: SignatureConfig = SignatureConfig()) -> float:
    """Evaluate one feature-vector entry from its layout label alone."""
    _, q, name, param = entry
    if name == "betti":
        return float(betti_curve(pd, betti_levels(pd.ceiling, cfg.betti_samples)[param], q))
    if name == "landscape":
        return landscape_amplitude(pd, param, q, cfg.landscape_points)
    if name == "heat":
        return heat_amplitude(pd, param, q, cfg.heat_grid)
    if name == "wasserstein":
        return wasserstein_amplitude(pd, param, q)
    if name == "bottleneck":
        return bottleneck_amplitude(pd, q)
    if name == "entropy":
        return persistent_entropy(pd, q)
    raise KeyError(name)


# -- selection and standardization -----------------------------------------

@dataclass(frozen=True)
class SelectionMask:
    """Retained feature indices (ascending) and the greedy correlation bound of the run."""

    indices: tuple[int, ...]
    bound: float = 0.0

    def __len__(self) -> int:
        return len(self.indices)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[..., list(self.indices)]

    def to_json(self) -> str:
        return json.dumps({"indices": list(self.indices), "bound": self.bound})

    @classmethod
    def from_json(cls, text: str) -> "SelectionMask":
        data = json.loads(text)
        if isinstance(data, list):
            return cls(tuple(int(i) for i in data))
        return cls(tuple(int(i) for i in data["indices"]), float(data.get("bound", 0.0)))


def pearson_select(samples: np.ndarray, k: int) -> SelectionMask:
    """Greedy least-correlated subset of ``k`` feature columns.

    Starts from the highest-variance column, then repeatedly adds the column
    whose largest absolute Pearson correlation with the chosen set is smallest.
    Constant columns are never chosen; ties go to the lowest index. ``bound`` is
    the largest correlation accepted along the way, so every chosen pair has
    absolute correlation at most ``bound``.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a 2-D sample matrix with at least two rows")
    var = x.var(axis=0)
    candidates = np.flatnonzero(np.ptp(x, axis=0) > 0)
    if k > candidates.size:
        raise ValueError(f"k={k} exceeds the {candidates.size} non-constant features")
    if k <= 0:
        return SelectionMask(())
    corr = np.abs(np.corrcoef(x[:, candidates], rowvar=False))
    corr = np.atleast_2d(corr)
    chosen = [int(np.argmax(var[candidates]))]
    worst = corr[chosen[0]].copy()
    taken = np.zeros(candidates.size, bool)
    taken[chosen[0]] = True
    bound = 0.0
    while len(chosen) < k:
        score = np.where(taken, np.inf, worst)
        nxt = int(np.argmin(score))
        bound = max(bound, float(score[nxt]))
        chosen.append(nxt)
        taken[nxt] = True
        worst = np.maximum(worst, corr[nxt])
    return SelectionMask(tuple(sorted(int(candidates[c]) for c in chosen)), bound)


@dataclass(frozen=True)
class FeatureStats:
    """Per-feature mean and standard deviation used to standardize features."""

    mean: np.ndarray
    std: np.ndarray = field()

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape:
            raise ValueError("mean and std must have the same shape")
        if np.any(std <= 0):
            raise ValueError("standard deviations must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def fit(cls, samples: np.ndarray) -> "FeatureStats":
        x = np.asarray(samples, dtype=np.float64)
        std = x.std(axis=0)
        return cls(x.mean(axis=0), np.where(std > 0, std, 1.0))

    def standardize(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values) - self.mean) / self.std

    def restore(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"means": self.mean.tolist(), "stds": self.std.tolist()}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "FeatureStats":
        data = json.loads(Path(path).read_text())
        return cls(np.array(data["means"]), np.array(data["stds"]))
