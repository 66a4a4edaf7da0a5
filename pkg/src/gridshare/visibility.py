"""Natural visibility graphs of univariate series.

Points (m, b_m) and (n, b_n), m < n, are linked when every intermediate
point p lies strictly below the chord between them. The comparison is done
in cross-multiplied form

    (b_p - b_n) * (n - m) < (b_m - b_n) * (n - p)

so both builders evaluate exactly the same floating point expression.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._accel import jit
from .errors import InputError


@dataclass(frozen=True, eq=False)
class VisibilityGraph:
    """Undirected simple graph on series indices.

    ``edges`` is an (E, 2) int64 array with ``edges[:, 0] < edges[:, 1]``,
    sorted lexicographically.
    """

    node_count: int
    edges: np.ndarray

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    def edge_set(self) -> set:
        return set(map(tuple, self.edges.tolist()))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.node_count)

    def __eq__(self, other):
        if not isinstance(other, VisibilityGraph):
            return NotImplemented
        return self.node_count == other.node_count and np.array_equal(self.edges, other.edges)

    __hash__ = None

    def to_networkx(self):
        import networkx as nx
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.edges.tolist())
        return g


@jit
def _sees(b, m, n, p):
    return (b[p] - b[n]) * (n - m) < (b[m] - b[n]) * (n - p)


@jit
def _naive_kernel(b):
    n = b.shape[0]
    out = np.empty((n * (n - 1) // 2, 2), dtype=np.int64)
    k = 0
    for m in range(n - 1):
        for j in range(m + 1, n):
            ok = True
            for p in range(m + 1, j):
                if not _sees(b, m, j, p):
                    ok = False
                    break
            if ok:
                out[k, 0] = m
                out[k, 1] = j
                k += 1
    return out[:k]


@jit
def _fast_kernel(b):
    """Divide and conquer on the maximum of each segment.

    The maximum of [lo, hi] blocks every pair straddling it, so only its own
    links are found by an outward scan; then both halves recurse. During a
    scan the most recently visible point is the one that must be cleared by
    the next candidate (it has the steepest chord from the pivot).
    """
    n = b.shape[0]
    out = np.empty((n * (n - 1) // 2, 2), dtype=np.int64)
    k = 0
    stack = np.empty((2 * n + 2, 2), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = n - 1
    top = 1
    while top > 0:
        top -= 1
        lo = stack[top, 0]
        hi = stack[top, 1]
        if lo >= hi:
            continue
        piv = lo
        for i in range(lo + 1, hi + 1):
            if b[i] > b[piv]:
                piv = i
        # rightwards: pivot is the left end m
        horizon = -1
        for j in range(piv + 1, hi + 1):
            if horizon < 0 or _sees(b, piv, j, horizon):
                out[k, 0] = piv
                out[k, 1] = j
                k += 1
                horizon = j
        # leftwards: pivot is the right end n
        horizon = -1
        for j in range(piv - 1, lo - 1, -1):
            if horizon < 0 or _sees(b, j, piv, horizon):
                out[k, 0] = j
                out[k, 1] = piv
                k += 1
                horizon = j
        stack[top, 0] = lo
        stack[top, 1] = piv - 1
        top += 1
        stack[top, 0] = piv + 1
        stack[top, 1] = hi
        top += 1
    return out[:k]


def _validate(series) -> np.ndarray:
    b = np.ascontiguousarray(series, dtype=np.float64)
    if b.ndim != 1:
        raise InputError("series must be one-dimensional")
    if b.size < 2:
        raise InputError("visibility graph needs at least 2 points")
    if not np.all(np.isfinite(b)):
        raise InputError("series contains non-finite values")
    return b


def _sorted(node_count, edges):
    if edges.shape[0]:
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
    edges = np.ascontiguousarray(edges, dtype=np.int64)
    edges.setflags(write=False)
    return VisibilityGraph(node_count, edges)


def build_visibility(series) -> VisibilityGraph:
    """Reference builder: tests every intermediate point of every pair."""
    b = _validate(series)
    return _sorted(b.size, _naive_kernel(b))


def build_visibility_fast(series) -> VisibilityGraph:
    """Divide-and-conquer builder; same output as :func:`build_visibility`."""
    b = _validate(series)
    return _sorted(b.size, _fast_kernel(b))


def write_edge_list(graph: VisibilityGraph, path) -> None:
    lines = [f"{m} {n}" for m, n in graph.edges.tolist()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_edge_list(path, node_count: int | None = None) -> VisibilityGraph:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            m, n = (int(t) for t in line.split())
        except ValueError:
            raise InputError(f"line {lineno}: expected 'm n', got {line!r}") from None
        if m == n or m < 0 or n < 0:
            raise InputError(f"line {lineno}: invalid edge {m} {n}")
        pairs.append((min(m, n), max(m, n)))
    edges = np.array(sorted(set(pairs)), dtype=np.int64).reshape(-1, 2)
    if node_count is None:
        node_count = int(edges.max()) + 1 if edges.size else 0
    return _sorted(node_count, edges)
