"""Slow independent reference computations the tests compare against.

Nothing here may call into the code paths it checks: masses come from literal
walk enumeration, covering DPs are re-derived without the return constraint,
tails come from mpmath/log-domain formulas. Keep it that way.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy.special import exp1

from loopcover.graphs import WeightedGraph, transition_matrix

_CHUNK = 1 << 21


def enumerate_loop_masses(g: WeightedGraph, k_max: int,
                          transitive: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Raw closed-walk weight sums by explicit enumeration.

    Returns (W, C) with W[k] = sum over pointed closed walks of length k of
    the product of transition entries, C[k] the same restricted to walks that
    visit every vertex. Index 0..k_max; entries 0 and 1 stay zero. The loop
    measure of length k is then W[k] * x^k / k.

    transitive=True asserts the caller knows the graph is vertex-transitive:
    per-start sums then agree across starts, so only start 0 is enumerated
    and the totals are scaled by m. Every loop through start 0 is still
    walked literally.
    """
    Q = transition_matrix(g).entries
    m = g.vertex_count
    nbr_lists = [np.flatnonzero(Q[v] > 0) for v in range(m)]
    deg = np.array([len(nl) for nl in nbr_lists])
    width = int(deg.max())
    # ragged neighbor rows padded to a rectangle so each extension is one
    # reshape; padding carries weight exactly 0.0 and is compressed away
    # before it can spawn children
    nbr_pad = np.zeros((m, width), dtype=np.int64)
    wgt_pad = np.zeros((m, width))
    for v, nl in enumerate(nbr_lists):
        nbr_pad[v, : len(nl)] = nl
        wgt_pad[v, : len(nl)] = Q[v, nl]
    regular = bool((deg == width).all())
    full = (1 << m) - 1
    W = np.zeros(k_max + 1)
    C = np.zeros(k_max + 1)
    bit = 1 << np.arange(m, dtype=np.int64)

    for start in ((0,) if transitive else range(m)):
        # stack of walk batches (t, endpoint, visited, weight)
        stack = [(0, np.array([start]), bit[start:start + 1].copy(),
                  np.ones(1))]
        while stack:
            t, v, mask, w = stack.pop()
            new_v = nbr_pad[v].ravel()
            new_w = (w[:, None] * wgt_pad[v]).ravel()
            new_mask = np.repeat(mask, width)
            if not regular:
                live = new_w > 0.0
                new_v, new_w, new_mask = new_v[live], new_w[live], new_mask[live]
            new_mask |= bit[new_v]
            closed = new_v == start
            W[t + 1] += new_w[closed].sum()
            C[t + 1] += new_w[closed & (new_mask == full)].sum()
            if t + 1 < k_max:
                for lo in range(0, len(new_v), _CHUNK):
                    sl = slice(lo, lo + _CHUNK)
                    stack.append((t + 1, new_v[sl], new_mask[sl], new_w[sl]))
    W[:2] = 0.0
    C[:2] = 0.0
    if transitive:
        W *= m
        C *= m
    return W, C


def subset_trace_covered(g: WeightedGraph, k_max: int) -> np.ndarray:
    """Covering closed-walk sums by inclusion-exclusion over visited subsets.

    N[k] = sum over non-empty S of (-1)^(m-|S|) Tr((Q restricted to S)^k);
    a third route, independent of both the enumeration and the package DP.
    """
    Q = transition_matrix(g).entries
    m = g.vertex_count
    N = np.zeros(k_max + 1)
    for mask in range(1, 1 << m):
        idx = [v for v in range(m) if mask >> v & 1]
        sign = -1.0 if (m - len(idx)) % 2 else 1.0
        sub = Q[np.ix_(idx, idx)]
        power = np.eye(len(idx))
        for k in range(1, k_max + 1):
            power = power @ sub
            N[k] += sign * np.trace(power)
    return N


def free_walk_cover_prob(g: WeightedGraph, k: int) -> float:
    """P(a stationary-start free walk with k vertices covers the graph).

    X_0 uniform over vertices, k-1 unconditioned steps, no return
    requirement; the comparison bracket for the conditional bridge law.
    """
    Q = transition_matrix(g).entries
    m = g.vertex_count
    full = (1 << m) - 1
    masks = np.arange(full + 1)
    # F[v, mask] = P(X_t = v, visited = mask)
    F = np.zeros((m, full + 1))
    for v in range(m):
        F[v, 1 << v] = 1.0 / m
    for _ in range(k - 1):
        G = np.zeros_like(F)
        for v in range(m):
            for z in np.flatnonzero(Q[v] > 0):
                z = int(z)
                # several source masks can land on the same target mask
                np.add.at(G[z], masks | (1 << z), Q[v, z] * F[v])
        F = G
    return float(F[:, full].sum())


def modified_geometric_tail(c: float, t: int) -> float:
    """P(eta >= t) by Euler-Maclaurin on sum x^p / p, x = 1/(1+c).

    Accurate to O(delta^2) relative with delta = ln(1+c); exact enough for
    every regime the tests touch (delta <= 0.03).
    """
    delta = math.log1p(c)
    z = -math.log(c) + math.log1p(c) - 1.0 / (1.0 + c)
    tail = float(exp1(delta * t)) + math.exp(-delta * t) / (2.0 * t)
    return tail / z


def modified_geometric_tail_exact(c: float, t: int) -> float:
    """Same tail via the Lerch transcendent at 50 digits."""
    with mpmath.workdps(50):
        x = 1.0 / (mpmath.mpf(1) + c)
        z = -mpmath.log(c) + mpmath.log(1 + c) - 1 / (1 + mpmath.mpf(c))
        tail = mpmath.power(x, t) * mpmath.lerchphi(x, 1, t)
        return float(tail / z)


def cycle_partial_mass_trig(n: int, K: int) -> float:
    """(1/n) sum_{k=2}^K Tr Q^k / k on the n-cycle from the cosine spectrum."""
    lam = np.cos(2.0 * np.pi * np.arange(n) / n)
    acc = np.zeros(n)
    p = lam * lam
    for k in range(2, K + 1):
        acc += p / k
        p = p * lam
    return float(acc.sum()) / n


def sobol_torus_j(dim: int, log2_points: int = 23, seed: int = 1905) -> float:
    """Quasi-MC estimate of -E ln(1 - mean cos) on (0,1)^dim, scrambled Sobol."""
    from scipy.stats import qmc

    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    pts = sampler.random_base2(m=log2_points)
    s = np.cos(2.0 * np.pi * pts).mean(axis=1)
    return float(-np.log1p(-s).mean())


def random_connected_graph(rng: np.random.Generator, m: int,
                           weighted: bool = False) -> WeightedGraph:
    """Random spanning tree plus a few extra edges; optionally random weights."""
    edges = {}
    order = rng.permutation(m)
    for i in range(1, m):
        u = int(order[i])
        v = int(order[rng.integers(0, i)])
        edges[(min(u, v), max(u, v))] = 1.0
    extra = int(rng.integers(0, m))
    for _ in range(extra):
        u, v = map(int, rng.integers(0, m, size=2))
        if u != v:
            edges[(min(u, v), max(u, v))] = 1.0
    if weighted:
        for key in edges:
            edges[key] = float(rng.uniform(0.5, 2.0))
    return WeightedGraph(m, tuple((u, v, w) for (u, v), w in sorted(edges.items())))


def harmonic(n: int) -> float:
    return math.fsum(1.0 / i for i in range(1, n + 1))
