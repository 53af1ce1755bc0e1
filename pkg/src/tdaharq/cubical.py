"""Filtered cubical complexes of 2-D images and their persistence diagrams.

Pixels are 0-cubes, 4-adjacent pixel pairs are 1-cubes and unit squares of
four pixels are 2-cubes (the V-construction). A cube enters the filtration at
the largest value among its pixels. Cubes are ordered by ``(value, dimension,
sorted vertex ids)``, which puts every face before its cofaces.

The boundary matrix is reduced over Z/2 with the standard column algorithm,
processing dimensions from the top down and clearing the columns of cubes that
are already known to be births.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from numba import njit

from .filtration import FiltrationMap


class Cube(NamedTuple):
    dim: int
    vertices: tuple[tuple[int, int], ...]
    value: float


class _GridCells(NamedTuple):
    dims: np.ndarray
    key1: np.ndarray
    key2: np.ndarray
    vertices: np.ndarray  # (n_cells, 4) vertex ids, padded by repeating the first vertex
    n_vertices: np.ndarray  # number of real vertices per cell
    facets: np.ndarray  # (n_cells, 4) facet cell ids, -1 padded
    lex_order: np.ndarray  # cell ids sorted by (dimension, sorted vertex ids)


@lru_cache(maxsize=32)
def _grid_cells(h: int, w: int) -> _GridCells:
    """Cell layout of an ``h x w`` grid; only the values change between filtrations."""
    pix = np.arange(h * w, dtype=np.int64).reshape(h, w)
    n_v = h * w

    hor_a = pix[:, :-1].ravel()
    ver_a = pix[:-1, :].ravel()
    edge_a = np.concatenate([hor_a, ver_a])
    edge_b = np.concatenate([hor_a + 1, ver_a + w])
    n_h, n_e = hor_a.size, edge_a.size

    sq = pix[:-1, :-1].ravel()
    n_s = sq.size
    n = n_v + n_e + n_s

    dims = np.concatenate([np.zeros(n_v, np.int64), np.ones(n_e, np.int64), np.full(n_s, 2, np.int64)])
    key1 = np.concatenate([pix.ravel(), edge_a, sq])
    key2 = np.concatenate([np.full(n_v, -1, np.int64), edge_b, sq + 1])

    vertices = np.empty((n, 4), np.int64)
    vertices[:n_v] = pix.ravel()[:, None]
    vertices[n_v:n_v + n_e, 0] = edge_a
    vertices[n_v:n_v + n_e, 1] = edge_b
    vertices[n_v:n_v + n_e, 2:] = edge_a[:, None]
    vertices[n_v + n_e:] = np.stack([sq, sq + 1, sq + w, sq + w + 1], axis=1)
    n_vertices = np.concatenate([np.ones(n_v, np.int64), np.full(n_e, 2, np.int64), np.full(n_s, 4, np.int64)])

    facets = np.full((n, 4), -1, np.int64)
    facets[n_v:n_v + n_e, 0] = edge_a
    facets[n_v:n_v + n_e, 1] = edge_b
    if n_s:
        # edge ids: horizontal edge at pixel p is n_v + row*(w-1) + col,
        # vertical edge at pixel p is n_v + n_h + p
        r, c = np.divmod(sq, w)
        top = n_v + r * (w - 1) + c
        bottom = n_v + (r + 1) * (w - 1) + c
        left = n_v + n_h + sq
        right = n_v + n_h + sq + 1
        facets[n_v + n_e:] = np.stack([top, bottom, left, right], axis=1)

    lex_order = np.lexsort((key2, key1, dims))
    for arr in (dims, key1, key2, vertices, n_vertices, facets, lex_order):
        arr.setflags(write=False)
    return _GridCells(dims, key1, key2, vertices, n_vertices, facets, lex_order)


@dataclass(frozen=True)
class FilteredComplex:
    """Cubes of an image grid in filtration order.

    ``values[j]`` is the entry threshold of the ``j``-th cube, ``order[j]`` its
    cell id in the grid layout and ``rank`` the inverse permutation.
    """

    shape: tuple[int, int]
    order: np.ndarray
    dims: np.ndarray
    values: np.ndarray
    rank: np.ndarray
    ceiling: float

    def __len__(self) -> int:
        return self.order.size

    def cube(self, j: int) -> Cube:
        cells = _grid_cells(*self.shape)
        cid = self.order[j]
        w = self.shape[1]
        ids = cells.vertices[cid, : cells.n_vertices[cid]]
        return Cube(int(self.dims[j]), tuple((int(p // w), int(p % w)) for p in sorted(ids)),
                    float(self.values[j]))

    def count(self, eta: float) -> tuple[int, int, int]:
        """Number of vertices, edges and squares in the sublevel complex at ``eta``."""
        present = self.dims[self.values <= eta]
        return tuple(int(np.count_nonzero(present == d)) for d in range(3))


@dataclass(frozen=True)
class BoundaryMatrix:
    """Z/2 boundary matrix stored column-wise: rows of column ``j`` are
    ``indices[indptr[j]:indptr[j + 1]]`` in ascending order."""

    indptr: np.ndarray
    indices: np.ndarray
    dims: np.ndarray

    @classmethod
    def from_columns(cls, columns, dims) -> "BoundaryMatrix":
        cols = [sorted(set(c)) for c in columns]
        indptr = np.zeros(len(cols) + 1, np.int64)
        indptr[1:] = np.cumsum([len(c) for c in cols])
        indices = np.array([i for c in cols for i in c], dtype=np.int64)
        return cls(indptr, indices, np.asarray(dims, dtype=np.int64))

    @property
    def n_columns(self) -> int:
        return self.indptr.size - 1

    def column(self, j: int) -> np.ndarray:
        return self.indices[self.indptr[j]:self.indptr[j + 1]]


@dataclass(frozen=True)
class Reduction:
    """Reduced boundary matrix plus its pivot structure.

    ``low[j]`` is the pivot row of reduced column ``j`` or -1 for a zero column.
    """

    low: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    def column(self, j: int) -> np.ndarray:
        return self.indices[self.indptr[j]:self.indptr[j + 1]]

    def pairs(self) -> list[tuple[int, int]]:
        cols = np.flatnonzero(self.low >= 0)
        return list(zip(self.low[cols].tolist(), cols.tolist()))

    def unpaired(self) -> np.ndarray:
        is_birth = np.zeros(self.low.size, bool)
        is_birth[self.low[self.low >= 0]] = True
        return np.flatnonzero((self.low < 0) & ~is_birth)


@dataclass(frozen=True)
class PersistenceDiagram:
    """Persistence intervals of one filtration.

    Essential classes are capped at ``ceiling``; zero-length finite intervals
    are not stored.
    """

    dims: np.ndarray
    births: np.ndarray
    deaths: np.ndarray
    essential: np.ndarray
    ceiling: float
    name: str = ""

    @classmethod
    def from_intervals(cls, intervals: dict, ceiling: float, essential: dict | None = None,
                       name: str = "") -> "PersistenceDiagram":
        """Build a diagram from ``{q: [(birth, death), ...]}``."""
        essential = essential or {}
        dims, births, deaths, ess = [], [], [], []
        for q, items in intervals.items():
            flags = essential.get(q, [False] * len(items))
            for (b, d), e in zip(items, flags):
                dims.append(q)
                births.append(b)
                deaths.append(d)
                ess.append(e)
        return cls(np.array(dims, np.int64), np.array(births, float), np.array(deaths, float),
                   np.array(ess, bool), float(ceiling), name)

    def intervals(self, q: int) -> np.ndarray:
        sel = self.dims == q
        return np.column_stack([self.births[sel], self.deaths[sel]])

    def sorted_intervals(self, q: int) -> list[tuple[float, float, bool]]:
        sel = self.dims == q
        return sorted(zip(self.births[sel].tolist(), self.deaths[sel].tolist(),
                          self.essential[sel].tolist()))

    def betti(self, q: int, eta: float) -> int:
        """Rank of ``H_q`` of the sublevel complex at ``eta``.

        Finite intervals are half-open ``[b, d)``; essential ones never close.
        """
        sel = self.dims == q
        b, d, e = self.births[sel], self.deaths[sel], self.essential[sel]
        return int(np.count_nonzero((b <= eta) & (e | (eta < d))))

    def __len__(self) -> int:
        return self.dims.size


def build_complex(fm: FiltrationMap, rng: np.random.Generator | None = None) -> FilteredComplex:
    """Order every cube of the grid by entry value, then dimension, then vertex ids.

    With ``rng`` the vertex-id tie-break is replaced by a random permutation,
    which is still a valid filtration order.
    """
    h, w = fm.shape
    cells = _grid_cells(h, w)
    f = np.ascontiguousarray(fm.values, dtype=np.float64).ravel()
    if rng is None:
        order, vals = _filtration_order(f, cells.vertices, cells.lex_order)
    else:
        vals = f[cells.vertices].max(axis=1)
        order = np.lexsort((rng.permutation(vals.size), cells.dims, vals))
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return FilteredComplex((h, w), order, cells.dims[order], vals[order], rank, fm.ceiling)


@njit(cache=True)
def _filtration_order(f, vertices, lex_order):
    """Cells sorted by value with ties kept in ``lex_order``.

    Cube values are maxima of pixel values, so a dense rank of the pixels
    turns the sort into a stable counting sort over the cells.
    """
    pix_order = np.argsort(f, kind="mergesort")
    prank = np.empty(f.size, np.int64)
    r = 0
    for i in range(f.size):
        if i > 0 and f[pix_order[i]] != f[pix_order[i - 1]]:
            r += 1
        prank[pix_order[i]] = r
    n = vertices.shape[0]
    crank = np.empty(n, np.int64)
    vals = np.empty(n)
    for c in range(n):
        best = vertices[c, 0]
        for t in range(1, 4):
            if prank[vertices[c, t]] > prank[best]:
                best = vertices[c, t]
        crank[c] = prank[best]
        vals[c] = f[best]
    counts = np.zeros(r + 2, np.int64)
    for c in range(n):
        counts[crank[c] + 1] += 1
    for i in range(r + 1):
        counts[i + 1] += counts[i]
    order = np.empty(n, np.int64)
    for i in range(n):
        c = lex_order[i]
        order[counts[crank[c]]] = c
        counts[crank[c]] += 1
    return order, vals


def boundary_matrix(fc: FilteredComplex) -> BoundaryMatrix:
    cells = _grid_cells(*fc.shape)
    indptr, indices, ok = _assemble_boundary(fc.order, fc.rank, cells.facets)
    if not ok:
        raise RuntimeError("boundary matrix references a face that does not precede its coface")
    return BoundaryMatrix(indptr, indices, fc.dims)


@njit(cache=True)
def _assemble_boundary(order, rank, facets):
    n = order.size
    indptr = np.zeros(n + 1, np.int64)
    for j in range(n):
        c = 0
        for t in range(4):
            if facets[order[j], t] >= 0:
                c += 1
        indptr[j + 1] = indptr[j] + c
    indices = np.empty(indptr[n], np.int64)
    ok = True
    for j in range(n):
        p = indptr[j]
        for t in range(4):
            f = facets[order[j], t]
            if f < 0:
                continue
            r = rank[f]
            if r >= j:
                ok = False
            # insertion sort keeps each column ascending
            q = p
            while q > indptr[j] and indices[q - 1] > r:
                indices[q] = indices[q - 1]
                q -= 1
            indices[q] = r
            p += 1
    return indptr, indices, ok


@njit(cache=True)
def _xor_into(a, na, pool, start, nb, out):
    """Symmetric difference of sorted ``a[:na]`` and ``pool[start:start+nb]`` into ``out``."""
    i = j = n = 0
    while i < na and j < nb:
        x = a[i]
        y = pool[start + j]
        if x < y:
            out[n] = x
            i += 1
            n += 1
        elif x > y:
            out[n] = y
            j += 1
            n += 1
        else:
            i += 1
            j += 1
    while i < na:
        out[n] = a[i]
        i += 1
        n += 1
    while j < nb:
        out[n] = pool[start + j]
        j += 1
        n += 1
    return n


@njit(cache=True)
def _reduce_columns(indptr, indices, dims, clearing):
    n = dims.size
    low = np.full(n, -1, np.int64)
    owner = np.full(n, -1, np.int64)
    cleared = np.zeros(n, np.bool_)
    # reduced columns live in an append-only pool; unreduced ones point at the input
    pool = np.empty(max(2 * indices.size, 16), np.int64)
    pool[:indices.size] = indices
    used = indices.size
    start = indptr[:-1].copy()
    length = indptr[1:] - indptr[:-1]
    work = np.empty(n + 1, np.int64)
    scratch = np.empty(n + 1, np.int64)

    top = 0
    for j in range(n):
        top = max(top, dims[j])
    if clearing:
        passes = np.arange(top, 0, -1)
    else:
        passes = np.full(1, -1)

    for d in passes:
        for j in range(n):
            if (d >= 0 and dims[j] != d) or cleared[j] or length[j] == 0:
                continue
            k = owner[pool[start[j] + length[j] - 1]]
            if k < 0:
                piv = pool[start[j] + length[j] - 1]
            else:
                m = length[j]
                work[:m] = pool[start[j]:start[j] + m]
                while m > 0:
                    k = owner[work[m - 1]]
                    if k < 0:
                        break
                    m = _xor_into(work, m, pool, start[k], length[k], scratch)
                    work, scratch = scratch, work
                if used + m > pool.size:
                    grown = np.empty(2 * (used + m), np.int64)
                    grown[:used] = pool[:used]
                    pool = grown
                pool[used:used + m] = work[:m]
                start[j] = used
                length[j] = m
                used += m
                if m == 0:
                    continue
                piv = work[m - 1]
            low[j] = piv
            owner[piv] = j
            if clearing:
                cleared[piv] = True
                length[piv] = 0

    out_ptr = np.zeros(n + 1, np.int64)
    for j in range(n):
        out_ptr[j + 1] = out_ptr[j] + length[j]
    out_idx = np.empty(out_ptr[n], np.int64)
    for j in range(n):
        out_idx[out_ptr[j]:out_ptr[j + 1]] = pool[start[j]:start[j] + length[j]]
    return low, out_ptr, out_idx


def reduce(bm: BoundaryMatrix, clearing: bool = True) -> Reduction:
    """Column-reduce ``bm`` over Z/2.

    With ``clearing`` the top dimension is reduced first and the columns of
    cubes found as pivots are zeroed without reduction. The pairing is the same
    either way.
    """
    low, indptr, indices = _reduce_columns(bm.indptr, bm.indices, bm.dims, clearing)
    return Reduction(low, indptr, indices)


def persistence_diagram(fc: FilteredComplex, reduction: Reduction, name: str = "") -> PersistenceDiagram:
    low = reduction.low
    deaths = np.flatnonzero(low >= 0)
    births = low[deaths]
    keep = fc.values[births] < fc.values[deaths]
    births, deaths = births[keep], deaths[keep]

    ess = reduction.unpaired()
    ess = ess[fc.dims[ess] < 2]

    dims = np.concatenate([fc.dims[births], fc.dims[ess]])
    b = np.concatenate([fc.values[births], fc.values[ess]])
    d = np.concatenate([fc.values[deaths], np.full(ess.size, fc.ceiling)])
    essential = np.concatenate([np.zeros(births.size, bool), np.ones(ess.size, bool)])
    return PersistenceDiagram(dims, b, d, essential, fc.ceiling, name)


def compute_persistence(fm: FiltrationMap) -> PersistenceDiagram:
    """Diagram of a filtration map: build, boundary, reduce, read off intervals."""
    fc = build_complex(fm)
    return persistence_diagram(fc, reduce(boundary_matrix(fc)), fm.name)


def diagram_to_jsonl(pd: PersistenceDiagram) -> str:
    """One JSON record per interval, floats with 17 significant digits."""
    lines = []
    for q, b, d, e in zip(pd.dims.tolist(), pd.births.tolist(), pd.deaths.tolist(), pd.essential.tolist()):
        lines.append(f'{{"q": {q}, "birth": {b:.17g}, "death": {d:.17g}, "essential": {str(e).lower()}}}')
    return "\n".join(lines) + ("\n" if lines else "")


# -- brute-force oracles (implemented independently in tdaharq.oracles) ------

def betti_at(fm: FiltrationMap, eta: float) -> tuple[int, int]:
    """``(beta0, beta1)`` of the sublevel complex at ``eta`` by union-find and Euler characteristic."""
    from .oracles import betti_at as _betti_at
    return _betti_at(fm, eta)


def bottleneck_distance(a: PersistenceDiagram, b: PersistenceDiagram, q: int) -> float:
    """Exact bottleneck distance for diagrams of at most 64 points."""
    from .oracles import bottleneck_distance as _bottleneck
    return _bottleneck(a, b, q)
