"""Monte Carlo bond percolation: giant-cluster strength, susceptibility and
the threshold where susceptibility peaks.

For a graph with E edges the removal fraction runs over p = e/E,
e = 0..E. Each trial draws one uniformly random edge ordering from its own
seed stream ``(seed, trial)``; the last e edges of that ordering form the
removed set for every e. Each removed set is therefore a uniform e-subset,
and a whole sweep costs one union-find pass (edges are added back in
order). Per-p sums of S and S^2 are integers, so the reduction is exact and
independent of how trials are batched.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._accel import jit
from .errors import ConfigError, DegenerateError, InputError
from .visibility import VisibilityGraph, build_visibility_fast

DEFAULT_TRIALS = 1000
NORMALIZATIONS = ("mean", "literal")
_BATCH = 64


@jit
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@jit
def _sweep_kernel(edges, node_count, perms, s_sum, s2_sum):
    """Accumulate largest-cluster sums for a batch of edge orderings.

    ``perms[t]`` lists edge indices; with e edges removed the retained edges
    are ``perms[t, :E - e]``.
    """
    n_edges = edges.shape[0]
    parent = np.empty(node_count, dtype=np.int64)
    size = np.empty(node_count, dtype=np.int64)
    for t in range(perms.shape[0]):
        for i in range(node_count):
            parent[i] = i
            size[i] = 1
        best = 1
        s_sum[n_edges] += 1
        s2_sum[n_edges] += 1
        for k in range(n_edges):
            idx = perms[t, k]
            ra = _find(parent, edges[idx, 0])
            rb = _find(parent, edges[idx, 1])
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
                if size[ra] > best:
                    best = size[ra]
            e = n_edges - k - 1
            s_sum[e] += best
            s2_sum[e] += best * best


def trial_permutation(seed: int, trial: int, n_edges: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(trial),)))
    return rng.permutation(n_edges)


def cluster_moments(edges: np.ndarray, node_count: int, trials: int, seed: int):
    """Sums over trials of S and S^2 per removal count (int64 arrays, len E+1)."""
    edges = np.ascontiguousarray(edges, dtype=np.int64)
    n_edges = edges.shape[0]
    s_sum = np.zeros(n_edges + 1, dtype=np.int64)
    s2_sum = np.zeros(n_edges + 1, dtype=np.int64)
    for start in range(0, trials, _BATCH):
        stop = min(trials, start + _BATCH)
        perms = np.stack([trial_permutation(seed, t, n_edges) for t in range(start, stop)])
        _sweep_kernel(edges, node_count, perms.astype(np.int64), s_sum, s2_sum)
    return s_sum, s2_sum


def strength_and_susceptibility(s_sum, s2_sum, node_count, edge_count, trials,
                                normalization="mean"):
    """Turn cluster-size sums into (strength, susceptibility) arrays.

    ``mean`` averages over trials: P = <S>/N, chi = (<S^2>/N^2 - P^2)/P.
    ``literal`` keeps the printed 1/(N E) and 1/(N^2 E) factors on the raw
    trial sums. Points with P = 0 get chi = 0.
    """
    if normalization not in NORMALIZATIONS:
        raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")
    s_sum = np.asarray(s_sum, dtype=float)
    s2_sum = np.asarray(s2_sum, dtype=float)
    n = float(node_count)
    denom = float(trials) if normalization == "mean" else float(edge_count)
    strength = s_sum / (n * denom)
    second = s2_sum / (n * n * denom)
    chi = np.zeros_like(strength)
    ok = strength > 0
    chi[ok] = (second[ok] - strength[ok] ** 2) / strength[ok]
    return strength, chi


@dataclass(frozen=True, eq=False)
class PercolationCurve:
    p_grid: np.ndarray
    strength: np.ndarray
    susceptibility: np.ndarray
    threshold: float
    trials: int
    seed: int
    node_count: int
    edge_count: int
    s_sum: np.ndarray
    s2_sum: np.ndarray
    normalization: str = "mean"

    def mean_cluster(self) -> np.ndarray:
        return self.s_sum / self.trials

    def std_error(self) -> np.ndarray:
        """Standard error of the mean largest-cluster size per grid point."""
        m1 = self.s_sum / self.trials
        var = np.maximum(self.s2_sum / self.trials - m1 ** 2, 0.0)
        return np.sqrt(var / self.trials)

    def renormalized(self, normalization: str) -> "PercolationCurve":
        strength, chi = strength_and_susceptibility(
            self.s_sum, self.s2_sum, self.node_count, self.edge_count, self.trials,
            normalization)
        return PercolationCurve(self.p_grid, strength, chi,
                                argmax_threshold(self.p_grid, strength, chi), self.trials,
                                self.seed, self.node_count, self.edge_count, self.s_sum,
                                self.s2_sum, normalization)


def argmax_threshold(p_grid, strength, chi) -> float:
    """Removal fraction of maximal susceptibility, ties to the smallest p.

    Points where the strength is zero are skipped; a curve with no defined
    point has no threshold. A flat susceptibility resolves to its first
    defined point.
    """
    p_grid, strength, chi = map(np.asarray, (p_grid, strength, chi))
    defined = np.nonzero(strength > 0)[0]
    if defined.size == 0:
        raise DegenerateError("susceptibility undefined at every grid point")
    return float(p_grid[defined[int(np.argmax(chi[defined]))]])


def percolation_threshold(curve: PercolationCurve) -> float:
    return argmax_threshold(curve.p_grid, curve.strength, curve.susceptibility)


def percolation_curve(graph: VisibilityGraph, trials: int = DEFAULT_TRIALS, seed: int = 0,
                      normalization: str = "mean") -> PercolationCurve:
    """Sample strength and susceptibility at every removal count e = 0..E."""
    if int(trials) != trials or trials < 1:
        raise ConfigError("trials must be a positive integer")
    if graph.node_count < 2 or graph.edge_count < 1:
        raise InputError("percolation needs at least 2 nodes and 1 edge")
    trials = int(trials)
    s_sum, s2_sum = cluster_moments(graph.edges, graph.node_count, trials, seed)
    strength, chi = strength_and_susceptibility(
        s_sum, s2_sum, graph.node_count, graph.edge_count, trials, normalization)
    p_grid = np.arange(graph.edge_count + 1) / graph.edge_count
    return PercolationCurve(p_grid, strength, chi, argmax_threshold(p_grid, strength, chi),
                            trials, int(seed), graph.node_count, graph.edge_count,
                            s_sum, s2_sum, normalization)


def resilience_of_series(series, trials: int = DEFAULT_TRIALS, seed: int = 0) -> float:
    """Percolation threshold of the natural visibility graph of ``series``."""
    if len(series) < 3:
        raise InputError("resilience needs a series of at least 3 points")
    return percolation_curve(build_visibility_fast(series), trials, seed).threshold


def curve_to_csv(curve: PercolationCurve, path=None) -> str:
    buf = io.StringIO()
    buf.write("e,p,strength,susceptibility\n")
    for e, (p, s, c) in enumerate(zip(curve.p_grid.tolist(), curve.strength.tolist(),
                                      curve.susceptibility.tolist())):
        buf.write(f"{e},{p!r},{s!r},{c!r}\n")
    buf.write(f"threshold,{curve.threshold!r}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text
