"""Brute-force checks for the cubical persistence engine.

These share no code with the reduction path: Betti numbers come from a
union-find over the sublevel graph plus the Euler characteristic, and the
bottleneck distance from an exact matching on small diagrams.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .cubical import PersistenceDiagram
from .filtration import FiltrationMap

MAX_ORACLE_POINTS = 64


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return True


def sublevel_counts(values: np.ndarray, eta: float) -> tuple[int, int, int]:
    """Vertices, edges and squares of the sublevel complex at ``eta``."""
    inside = np.asarray(values) <= eta
    v = int(inside.sum())
    e = int((inside[:, :-1] & inside[:, 1:]).sum() + (inside[:-1, :] & inside[1:, :]).sum())
    f = int((inside[:-1, :-1] & inside[:-1, 1:] & inside[1:, :-1] & inside[1:, 1:]).sum())
    return v, e, f


def betti_at(fm: FiltrationMap | np.ndarray, eta: float) -> tuple[int, int]:
    """``(beta0, beta1)`` of the sublevel complex at ``eta``."""
    values = fm.values if isinstance(fm, FiltrationMap) else np.asarray(fm, dtype=float)
    h, w = values.shape
    inside = values <= eta
    ids = {p: i for i, p in enumerate(zip(*np.nonzero(inside)))}
    uf = UnionFind(len(ids))
    for (u, v), i in ids.items():
        for nb in ((u + 1, v), (u, v + 1)):
            j = ids.get(nb)
            if j is not None:
                uf.union(i, j)
    n_v, n_e, n_f = sublevel_counts(values, eta)
    beta0 = uf.components
    return beta0, beta0 - (n_v - n_e + n_f)


# -- bottleneck distance -----------------------------------------------------

def _points(pd: PersistenceDiagram, q: int, essential: bool) -> np.ndarray:
    sel = (pd.dims == q) & (pd.essential == essential)
    return np.column_stack([pd.births[sel], pd.deaths[sel]])


def _linf(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2)


def _perfect_matching_exists(adj: np.ndarray) -> bool:
    if adj.shape[0] == 0:
        return True
    match = maximum_bipartite_matching(csr_matrix(adj.astype(np.int8)), perm_type="column")
    return bool(np.all(match >= 0))


def _bottleneck_finite(a: np.ndarray, b: np.ndarray) -> float:
    n, m = len(a), len(b)
    if n == 0 and m == 0:
        return 0.0
    cross = _linf(a, b) if n and m else np.zeros((n, m))
    diag_a = (a[:, 1] - a[:, 0]) / 2 if n else np.zeros(0)
    diag_b = (b[:, 1] - b[:, 0]) / 2 if m else np.zeros(0)
    candidates = np.unique(np.concatenate([cross.ravel(), diag_a, diag_b, [0.0]]))

    def feasible(delta):
        # rows: points of a, then diagonal slots for b; columns: points of b, then diagonal slots for a
        adj = np.zeros((n + m, m + n), bool)
        adj[:n, :m] = cross <= delta
        adj[:n, m:] = np.diag(diag_a <= delta) if n else adj[:n, m:]
        adj[n:, :m] = np.diag(diag_b <= delta) if m else adj[n:, :m]
        adj[n:, m:] = True
        return _perfect_matching_exists(adj)

    lo, hi = 0, candidates.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def bottleneck_distance(a: PersistenceDiagram, b: PersistenceDiagram, q: int) -> float:
    """Exact bottleneck distance between the degree-``q`` parts of two small diagrams.

    Essential points are matched only among themselves; a different number of
    essential classes gives ``inf``.
    """
    fa, fb = _points(a, q, False), _points(b, q, False)
    ea, eb = _points(a, q, True), _points(b, q, True)
    if max(len(fa) + len(ea), len(fb) + len(eb)) > MAX_ORACLE_POINTS:
        raise ValueError(f"bottleneck oracle is limited to {MAX_ORACLE_POINTS} points per diagram")
    if len(ea) != len(eb):
        return float("inf")
    ess = 0.0
    if len(ea):
        ess = min(float(np.max(np.abs(ea[list(p)] - eb).max(axis=1)))
                  for p in itertools.permutations(range(len(ea))))
    return max(ess, _bottleneck_finite(fa, fb))


def oracle_levels(values: np.ndarray) -> np.ndarray:
    """Every distinct value, the midpoints between them and one level below the minimum."""
    u = np.unique(np.asarray(values, dtype=np.float64))
    return np.concatenate([[u[0] - 1.0], u, (u[:-1] + u[1:]) / 2])


def betti_mismatches(fm: FiltrationMap, pd: PersistenceDiagram) -> list[tuple[float, tuple, tuple]]:
    """Levels where the diagram's Betti numbers disagree with :func:`betti_at`."""
    bad = []
    for eta in oracle_levels(fm.values):
        got = (pd.betti(0, eta), pd.betti(1, eta))
        want = betti_at(fm, eta)
        if got != want:
            bad.append((float(eta), got, want))
    return bad
