"""Finite weighted graphs, their transition matrices, and structural constants.

Vertices are dense integer indices 0..m-1. Builders document their index
layout so every downstream quantity is reproducible bit-for-bit.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "WeightedGraph",
    "DegreeWeightBounds",
    "TransitionMatrix",
    "StationaryDistribution",
    "build_torus",
    "build_tree_ball",
    "build_complete",
    "build_cycle_with_chords",
    "build_cycle",
    "transition_matrix",
    "stationary_distribution",
    "structural_report",
    "dump_edge_list",
    "load_edge_list",
]


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with symmetric positive edge weights.

    `edges` holds one (u, v, w) triple per undirected edge with u < v,
    sorted lexicographically. No self-loops.
    """

    vertex_count: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        if self.vertex_count < 1:
            raise ValueError("vertex_count must be positive")
        seen = set()
        for u, v, w in self.edges:
            if not (0 <= u < v < self.vertex_count):
                raise ValueError(f"bad edge ({u}, {v}): need 0 <= u < v < m")
            if w <= 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((self.vertex_count, self.vertex_count))
        for u, v, w in self.edges:
            W[u, v] = w
            W[v, u] = w
        W.setflags(write=False)
        return W

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=np.int64)
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        deg.setflags(write=False)
        return deg

    @cached_property
    def neighbors(self) -> tuple[np.ndarray, ...]:
        """Sorted neighbor index array per vertex."""
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(np.array(sorted(a), dtype=np.int64) for a in adj)


@dataclass(frozen=True)
class DegreeWeightBounds:
    """Structural constants: degree range and inverse-weight range over edges."""

    max_degree: int
    min_degree: int
    inv_weight_min: float  # min of 1/w over edges
    inv_weight_max: float  # max of 1/w over edges


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic walk matrix with zero diagonal."""

    size: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        E = self.entries
        if E.shape != (self.size, self.size):
            raise ValueError("entries shape does not match size")
        if np.any(np.diag(E) != 0.0):
            raise ValueError("diagonal must be exactly zero")
        if np.max(np.abs(E.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("rows must sum to 1 within 1e-12")
        E.setflags(write=False)


@dataclass(frozen=True)
class StationaryDistribution:
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = self.weights
        if np.any(w <= 0):
            raise ValueError("stationary weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("stationary weights must sum to 1 within 1e-12")
        w.setflags(write=False)


def _from_pairs(m: int, pairs: set[tuple[int, int]], weight: float = 1.0) -> WeightedGraph:
    edges = tuple((u, v, weight) for u, v in sorted(pairs))
    return WeightedGraph(m, edges)


def build_torus(dim: int, side: int) -> WeightedGraph:
    """Discrete torus (Z/side)^dim with unit weights.

    Index layout is mixed-radix: vertex (p_1, ..., p_dim) maps to
    sum_i p_i * side^(dim-i). For side = 2 the two parallel edges of each
    lattice direction collapse to a single unit-weight edge, so degrees
    are dim instead of 2*dim there.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if side < 2:
        raise ValueError("side must be >= 2")
    m = side**dim
    pairs: set[tuple[int, int]] = set()
    radix = [side**(dim - 1 - i) for i in range(dim)]
    for v in range(m):
        coords = [(v // radix[i]) % side for i in range(dim)]
        for i in range(dim):
            nb = coords.copy()
            nb[i] = (coords[i] + 1) % side
            u = sum(c * r for c, r in zip(nb, radix))
            if u != v:
                pairs.add((min(u, v), max(u, v)))
    return _from_pairs(m, pairs)


def build_cycle(n: int) -> WeightedGraph:
    """Cycle on n vertices; alias for build_torus(1, n)."""
    return build_torus(1, n)


def build_tree_ball(degree: int, radius: int) -> WeightedGraph:
    """Ball of the infinite degree-regular tree, unit weights.

    Vertices in breadth-first generation order: root 0, then each level
    left to right. The root has `degree` children; every other internal
    vertex has degree-1 children; leaves sit at distance `radius`.
    """
    if degree < 2:
        raise ValueError("degree must be >= 2")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    pairs: set[tuple[int, int]] = set()
    frontier = [0]
    next_index = 1
    for level in range(radius):
        new_frontier = []
        for v in frontier:
            n_children = degree if level == 0 else degree - 1
            for _ in range(n_children):
                pairs.add((v, next_index))
                new_frontier.append(next_index)
                next_index += 1
        frontier = new_frontier
    return _from_pairs(next_index, pairs)


def build_complete(n: int) -> WeightedGraph:
    if n < 2:
        raise ValueError("n must be >= 2")
    return _from_pairs(n, {(u, v) for u in range(n) for v in range(u + 1, n)})


def build_cycle_with_chords(n: int) -> WeightedGraph:
    """Cycle on 3n vertices plus a chord across each consecutive triple.

    Edges: ring {i, i+1 mod 3n} plus chords {3i, 3i+2} for i = 0..n-1, so
    each triple (3i, 3i+1, 3i+2) forms a triangle. 4n edges, degrees
    alternate 3, 2, 3 along each triple. Unit weights.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    m = 3 * n
    pairs = {(i, i + 1) for i in range(m - 1)} | {(0, m - 1)}
    pairs |= {(3 * i, 3 * i + 2) for i in range(n)}
    return _from_pairs(m, pairs)


def transition_matrix(g: WeightedGraph) -> TransitionMatrix:
    """Walk matrix Q with Q[x, y] = w_xy / sum_z w_xz."""
    strength = g.weight_matrix.sum(axis=1)
    isolated = np.flatnonzero(strength == 0.0)
    if isolated.size:
        raise ValueError(f"vertex {int(isolated[0])} is isolated")
    Q = g.weight_matrix / strength[:, None]
    return TransitionMatrix(g.vertex_count, Q)


def stationary_distribution(g: WeightedGraph) -> StationaryDistribution:
    """pi_z proportional to the total weight at z; uniform on regular graphs."""
    strength = g.weight_matrix.sum(axis=1)
    isolated = np.flatnonzero(strength == 0.0)
    if isolated.size:
        raise ValueError(f"vertex {int(isolated[0])} is isolated")
    return StationaryDistribution(strength / strength.sum())


def _connected(g: WeightedGraph) -> bool:
    if g.vertex_count == 1:
        return True
    seen = np.zeros(g.vertex_count, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in g.neighbors[v]:
            if not seen[u]:
                seen[u] = True
                queue.append(int(u))
    return bool(seen.all())


def _bipartite(g: WeightedGraph) -> bool:
    color = np.full(g.vertex_count, -1, dtype=np.int8)
    for start in range(g.vertex_count):
        if color[start] >= 0:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for u in g.neighbors[v]:
                if color[u] < 0:
                    color[u] = 1 - color[v]
                    queue.append(int(u))
                elif color[u] == color[v]:
                    return False
    return True


def structural_report(g: WeightedGraph) -> tuple[DegreeWeightBounds, bool, bool]:
    """(degree/weight bounds, connected, bipartite).

    Edgeless graphs report zero degrees and inverse-weight range [1, 1].
    """
    if g.edges:
        ws = np.array([w for _, _, w in g.edges])
        bounds = DegreeWeightBounds(
            max_degree=int(g.degrees.max()),
            min_degree=int(g.degrees.min()),
            inv_weight_min=float(1.0 / ws.max()),
            inv_weight_max=float(1.0 / ws.min()),
        )
    else:
        bounds = DegreeWeightBounds(0, 0, 1.0, 1.0)
    return bounds, _connected(g), _bipartite(g)


def dump_edge_list(g: WeightedGraph) -> str:
    """Serialize as "m edge_count" header plus one "u v w" line per edge.

    Weights use repr (shortest round-trip decimal), so load(dump(g)) == g.
    """
    lines = [f"{g.vertex_count} {g.edge_count}"]
    lines += [f"{u} {v} {w!r}" for u, v, w in g.edges]
    return "\n".join(lines) + "\n"


def load_edge_list(text: str) -> WeightedGraph:
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty edge-list text")
    head = rows[0].split()
    if len(head) != 2:
        raise ValueError("header must be 'm_vertices edge_count'")
    m, n_edges = int(head[0]), int(head[1])
    if len(rows) - 1 != n_edges:
        raise ValueError(f"header claims {n_edges} edges, found {len(rows) - 1}")
    edges = []
    for ln in rows[1:]:
        u, v, w = ln.split()
        edges.append((int(u), int(v), float(w)))
    return WeightedGraph(m, tuple(sorted(edges)))
