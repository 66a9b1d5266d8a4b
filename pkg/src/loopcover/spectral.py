"""Spectra of reversible walk matrices and the bound machinery built on them.

Everything here works through the symmetric conjugate S = D Q D^{-1} with
D = diag(sqrt(pi)): reversibility makes S symmetric, so a symmetric
eigensolver applies and the spectrum is provably real.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .graphs import (
    StationaryDistribution,
    TransitionMatrix,
    WeightedGraph,
    structural_report,
)

__all__ = [
    "Spectrum",
    "EmpiricalSpectralDistribution",
    "PathSystem",
    "OddLoopSystem",
    "eigenvalues",
    "esd",
    "trace_power",
    "log_det_functional",
    "partial_loop_mass_rate",
    "poincare_bound",
    "odd_loop_bound",
    "trace_tail_check",
    "return_probability_bound_check",
    "interlacing_bracket_check",
    "default_path_system",
    "default_odd_loop_system",
    "stationary_from_transition",
    "spectrum_cover_functional",
    "kolmogorov_distance",
    "spectrum_to_csv",
    "esd_to_csv",
    "TraceTailReport",
    "ReturnProbabilityReport",
    "InterlacingReport",
]

_SLACK = 1e-9


@dataclass(frozen=True)
class Spectrum:
    """Real eigenvalues sorted non-decreasing, with multiplicity."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = self.values
        if np.any(np.diff(v) < 0):
            raise ValueError("eigenvalues must be sorted non-decreasing")
        if v.min() < -1 - _SLACK or v.max() > 1 + _SLACK:
            raise ValueError("eigenvalues must lie in [-1, 1] within 1e-9")
        if abs(v.max() - 1.0) > _SLACK:
            raise ValueError("largest eigenvalue must be 1 (connected graph)")
        if abs(v.sum()) > 1e-8:
            raise ValueError("trace must vanish (zero diagonal)")
        v.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def second_largest(self) -> float:
        return float(self.values[-2])

    @property
    def smallest(self) -> float:
        return float(self.values[0])


@dataclass(frozen=True)
class EmpiricalSpectralDistribution:
    """Uniform measure on the spectrum: mass 1/m at each eigenvalue."""

    support: np.ndarray

    def __post_init__(self) -> None:
        if abs(float(self.support.mean())) > 1e-8:
            raise ValueError("spectral measure must have mean 0")
        self.support.setflags(write=False)

    @property
    def mass(self) -> float:
        return 1.0 / len(self.support)

    def cdf(self, grid: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.support, grid, side="right") / len(self.support)


@dataclass(frozen=True)
class PathSystem:
    """One self-avoiding path per unordered vertex pair, keyed (x, y) with x < y."""

    paths: dict[tuple[int, int], tuple[int, ...]]


@dataclass(frozen=True)
class OddLoopSystem:
    """One odd closed walk through each vertex, keyed by its base vertex."""

    loops: dict[int, tuple[int, ...]]


def _symmetrized(Q: TransitionMatrix, pi: StationaryDistribution) -> np.ndarray:
    bad = np.max(np.abs(pi.weights[:, None] * Q.entries - pi.weights[None, :] * Q.entries.T))
    if bad > 1e-8:
        raise ValueError(f"detailed balance violated by {bad:.3e}")
    s = np.sqrt(pi.weights)
    S = (s[:, None] / s[None, :]) * Q.entries
    return 0.5 * (S + S.T)


def stationary_from_transition(Q: TransitionMatrix) -> StationaryDistribution:
    """Recover pi from a reversible Q by balancing ratios along a spanning tree."""
    n = Q.size
    E = Q.entries
    pi = np.zeros(n)
    pi[0] = 1.0
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in np.flatnonzero(E[x] > 0):
            if not seen[y]:
                # detailed balance: pi_y = pi_x Q[x,y] / Q[y,x]
                pi[y] = pi[x] * E[x, y] / E[y, x]
                seen[y] = True
                queue.append(int(y))
    if not seen.all():
        raise ValueError("transition matrix is not irreducible")
    return StationaryDistribution(pi / pi.sum())


def eigenvalues(Q: TransitionMatrix, pi: StationaryDistribution) -> Spectrum:
    """Spectrum of Q via the pi-conjugated symmetric form."""
    vals = np.linalg.eigvalsh(_symmetrized(Q, pi))
    return Spectrum(np.sort(vals))


def esd(spectrum: Spectrum) -> EmpiricalSpectralDistribution:
    return EmpiricalSpectralDistribution(spectrum.values.copy())


def trace_power(Q: TransitionMatrix, k: int, pi: StationaryDistribution | None = None) -> float:
    """Tr Q^k as the k-th power sum of the spectrum."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if pi is None:
        pi = stationary_from_transition(Q)
    lam = eigenvalues(Q, pi).values
    return float(np.sum(lam**k))


def log_det_functional(Q: TransitionMatrix, rho: float,
                       pi: StationaryDistribution | None = None) -> float:
    """Per-vertex log-determinant -(1/m) sum_i ln(1 - rho*lambda_i), rho in [0, 1)."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if pi is None:
        pi = stationary_from_transition(Q)
    lam = eigenvalues(Q, pi).values
    return float(-np.log1p(-rho * lam).sum() / Q.size)


def partial_loop_mass_rate(Q: TransitionMatrix, K: int,
                           pi: StationaryDistribution | None = None) -> float:
    """(1/m) sum_{k=2}^{K} Tr Q^k / k, the killing-free short-loop mass per vertex."""
    if K < 2:
        raise ValueError("K must be >= 2")
    if pi is None:
        pi = stationary_from_transition(Q)
    lam = eigenvalues(Q, pi).values
    v = lam * lam
    acc = v.sum() / 2.0
    for k in range(3, K + 1):
        v = v * lam
        acc += v.sum() / k
    return float(acc / Q.size)


# ---------------------------------------------------------------------------
# path / odd-loop systems and the eigenvalue bounds they certify


def _bfs_parents(g: WeightedGraph, root: int) -> np.ndarray:
    parent = np.full(g.vertex_count, -1, dtype=np.int64)
    parent[root] = root
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in g.neighbors[v]:  # sorted, so ties break lexicographically
            if parent[u] < 0:
                parent[u] = v
                queue.append(int(u))
    return parent


def _tree_path(parent: np.ndarray, root: int, target: int) -> tuple[int, ...]:
    path = [target]
    while path[-1] != root:
        path.append(int(parent[path[-1]]))
    return tuple(reversed(path))


def default_path_system(g: WeightedGraph) -> PathSystem:
    """BFS shortest paths with lexicographic tie-breaking on neighbor index."""
    paths: dict[tuple[int, int], tuple[int, ...]] = {}
    for x in range(g.vertex_count):
        parent = _bfs_parents(g, x)
        if np.any(parent < 0):
            raise ValueError("graph is not connected")
        for y in range(x + 1, g.vertex_count):
            paths[(x, y)] = _tree_path(parent, x, y)
    return PathSystem(paths)


def _minimal_odd_closed_walk(g: WeightedGraph) -> tuple[int, ...]:
    """Edge-count-minimal odd closed walk, via BFS on the parity double cover."""
    best: tuple[int, ...] | None = None
    for r in range(g.vertex_count):
        # state (v, parity); search for (r, 1)
        parent: dict[tuple[int, int], tuple[int, int]] = {(r, 0): (r, 0)}
        queue = deque([(r, 0)])
        found = None
        while queue and found is None:
            v, p = queue.popleft()
            for u in g.neighbors[v]:
                state = (int(u), 1 - p)
                if state not in parent:
                    parent[state] = (v, p)
                    if state == (r, 1):
                        found = state
                        break
                    queue.append(state)
        if found is None:
            continue
        walk = [r]
        state = found
        while state != (r, 0):
            state = parent[state]
            walk.append(state[0])
        walk.reverse()
        if best is None or len(walk) < len(best):
            best = tuple(walk)
    if best is None:
        raise ValueError("no odd loop system exists")
    return best


def default_odd_loop_system(g: WeightedGraph) -> OddLoopSystem:
    """A globally minimal odd closed walk, reached and left by BFS paths.

    sigma_x = path(x -> r) + minimal odd walk at r + reversed path, which has
    odd edge count since the two path legs cancel mod 2.
    """
    core = _minimal_odd_closed_walk(g)
    r = core[0]
    parent = _bfs_parents(g, r)
    if np.any(parent < 0):
        raise ValueError("graph is not connected")
    loops: dict[int, tuple[int, ...]] = {}
    for x in range(g.vertex_count):
        leg = _tree_path(parent, r, x)        # r .. x
        to_r = tuple(reversed(leg))           # x .. r
        loops[x] = to_r + core[1:] + leg[1:]
    return OddLoopSystem(loops)


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _inverse_mean_weights(g: WeightedGraph) -> dict[tuple[int, int], float]:
    """1/w-bar per edge, where w-bar_xy = w_xy / sum over ordered pairs."""
    total = 2.0 * sum(w for _, _, w in g.edges)
    return {(u, v): total / w for u, v, w in g.edges}


def _walk_edges(walk: tuple[int, ...], g: WeightedGraph) -> list[tuple[int, int]]:
    keys = []
    lookup = {(u, v) for u, v, _ in g.edges}
    for a, b in zip(walk[:-1], walk[1:]):
        key = _edge_key(a, b)
        if key not in lookup:
            raise ValueError(f"walk uses non-edge {key}")
        keys.append(key)
    return keys


def poincare_bound(g: WeightedGraph, pi: StationaryDistribution,
                   paths: PathSystem) -> tuple[float, float]:
    """Path-congestion kappa and the certified bound on the second-largest eigenvalue.

    kappa = max over edges e of sum of |gamma_xy|_w pi_x pi_y over the pairs
    whose chosen path crosses e, with |gamma|_w the sum of 1/w-bar along the
    path. Returns (kappa, 1 - 1/kappa) and raises if the actual spectrum
    beats the certificate (which would mean a computation bug).
    """
    inv_wbar = _inverse_mean_weights(g)
    load: dict[tuple[int, int], float] = {k: 0.0 for k in inv_wbar}
    for (x, y), path in paths.paths.items():
        if path[0] != x or path[-1] != y:
            raise ValueError(f"path for ({x}, {y}) has wrong endpoints")
        if len(set(path)) != len(path):
            raise ValueError(f"path for ({x}, {y}) repeats a vertex")
        keys = _walk_edges(path, g)
        length_w = sum(inv_wbar[k] for k in keys)
        contrib = length_w * pi.weights[x] * pi.weights[y]
        for k in keys:
            load[k] += contrib
    kappa = max(load.values())
    bound = 1.0 - 1.0 / kappa
    from .graphs import transition_matrix

    beta1 = eigenvalues(transition_matrix(g), pi).second_largest
    if beta1 > bound + _SLACK:
        raise ValueError(f"Poincare bound violated: beta1={beta1} > {bound}")
    return kappa, bound


def odd_loop_bound(g: WeightedGraph, pi: StationaryDistribution,
                   loops: OddLoopSystem) -> tuple[float, float]:
    """Odd-walk congestion tau and the certified lower bound -1 + 2/tau.

    Edge loads count traversal multiplicity, which can only enlarge tau and
    so never overstates the bound.
    """
    _, _, bipartite = structural_report(g)
    if bipartite:
        raise ValueError("no odd loop system exists")
    inv_wbar = _inverse_mean_weights(g)
    load: dict[tuple[int, int], float] = {k: 0.0 for k in inv_wbar}
    for x in range(g.vertex_count):
        walk = loops.loops[x]
        if walk[0] != x or walk[-1] != x:
            raise ValueError(f"odd walk for {x} must start and end at {x}")
        keys = _walk_edges(walk, g)
        if len(keys) % 2 == 0:
            raise ValueError(f"walk for {x} has even edge count {len(keys)}")
        length_w = sum(inv_wbar[k] for k in keys)
        for k in keys:
            load[k] += pi.weights[x] * length_w
    tau = max(load.values())
    bound = -1.0 + 2.0 / tau
    from .graphs import transition_matrix

    beta_min = eigenvalues(transition_matrix(g), pi).smallest
    if beta_min < bound - _SLACK:
        raise ValueError(f"odd-loop bound violated: beta_min={beta_min} < {bound}")
    return tau, bound


# ---------------------------------------------------------------------------
# trace and return-probability checks


@dataclass(frozen=True)
class TraceTailReport:
    ks: tuple[int, ...]
    deviations: tuple[float, ...]
    bounds: tuple[float, ...]
    max_deviation: float
    holds: bool


def trace_tail_check(g: WeightedGraph, b: float) -> TraceTailReport:
    """Check |Tr Q^k - 1| <= m (1 - 2/(3 d m^2))^k on a ladder of k >= m^b.

    Requires a connected regular non-bipartite unit-weight graph (aperiodic,
    so the trace converges to the simple top eigenvalue's contribution).
    """
    if b <= 2:
        raise ValueError("b must be > 2")
    bounds_info, connected, bipartite = structural_report(g)
    if not connected:
        raise ValueError("graph must be connected")
    if bipartite:
        raise ValueError("bipartite graph: trace does not converge")
    if bounds_info.max_degree != bounds_info.min_degree:
        raise ValueError("graph must be regular")
    if any(w != 1.0 for _, _, w in g.edges):
        raise ValueError("graph must have unit weights")
    m = g.vertex_count
    d = bounds_info.max_degree
    from .graphs import transition_matrix

    lam = eigenvalues(transition_matrix(g), stationary_from_transition(transition_matrix(g))).values
    k0 = math.ceil(m**b)
    ks = (k0, k0 + 1, k0 + 2, 2 * k0, 4 * k0, 8 * k0)
    rate = 1.0 - 2.0 / (3.0 * d * m * m)
    devs, caps = [], []
    for k in ks:
        tr = float(np.sum(lam**k))
        devs.append(abs(tr - 1.0))
        caps.append(m * rate**k)
    max_dev = max(devs)
    holds = all(dev <= cap + _SLACK for dev, cap in zip(devs, caps))
    if not holds:
        raise ValueError(f"trace tail bound violated: {devs} vs {caps}")
    return TraceTailReport(ks, tuple(devs), tuple(caps), max_dev, holds)


@dataclass(frozen=True)
class ReturnProbabilityReport:
    k: int
    trace_value: float
    trace_bound: float
    trace_holds: bool
    per_vertex_max: float | None
    per_vertex_bound: float | None
    weighted: bool
    flagged: bool


def return_probability_bound_check(g: WeightedGraph, k: int) -> ReturnProbabilityReport:
    """Compare sum_x (Q^k)_xx against (14 D^2/d^2) max(m/sqrt(k), 1).

    Unit-weight graphs must satisfy the bound (violation raises); weighted
    graphs substitute D -> D/r, d -> d/R and only flag violations, since the
    exact weighted constants are unsettled. Regular unit-weight graphs also
    get the per-vertex check (Q^k)_xx <= 10 max(1/sqrt(k), 1/m).
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    bounds_info, connected, _ = structural_report(g)
    if not connected:
        raise ValueError("graph must be connected")
    from .graphs import transition_matrix

    Q = transition_matrix(g)
    pi = stationary_from_transition(Q)
    S = _symmetrized(Q, pi)
    lam, U = np.linalg.eigh(S)
    diag = (U * U) @ (lam**k)  # (Q^k)_xx: conjugation preserves the diagonal
    trace = float(diag.sum())
    m = g.vertex_count
    weighted = any(w != 1.0 for _, _, w in g.edges)
    D = float(bounds_info.max_degree)
    d = float(bounds_info.min_degree)
    if weighted:
        D = D / bounds_info.inv_weight_min
        d = d / bounds_info.inv_weight_max
    cap = 14.0 * D * D / (d * d) * max(m / math.sqrt(k), 1.0)
    trace_holds = trace <= cap + _SLACK
    flagged = weighted and not trace_holds
    if not weighted and not trace_holds:
        raise ValueError(f"return-probability bound violated: {trace} > {cap}")
    per_max = per_cap = None
    if not weighted and bounds_info.max_degree == bounds_info.min_degree:
        per_max = float(diag.max())
        per_cap = 10.0 * max(1.0 / math.sqrt(k), 1.0 / m)
        if per_max > per_cap + _SLACK:
            raise ValueError(f"per-vertex return bound violated: {per_max} > {per_cap}")
    return ReturnProbabilityReport(k, trace, cap, trace_holds, per_max, per_cap,
                                   weighted, flagged)


@dataclass(frozen=True)
class InterlacingReport:
    difference: float
    lower: float
    upper: float
    within: bool
    interlacing_ok: bool


def interlacing_bracket_check(Q_full: TransitionMatrix, subset, rho: float,
                              pi: StationaryDistribution | None = None) -> InterlacingReport:
    """Log-det difference between Q and a principal submatrix, with its bracket.

    ln det(1 - rho Q) - ln det(1 - rho Q|_A) must land in
    [(m-|A|) ln(1-rho), (m-|A|) ln(1+rho)], and the submatrix eigenvalues must
    interlace those of the conjugated symmetric form.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    idx = np.array(sorted(set(int(v) for v in subset)), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("subset must be nonempty")
    m = Q_full.size
    if idx[0] < 0 or idx[-1] >= m:
        raise ValueError("subset indices out of range")
    if pi is None:
        pi = stationary_from_transition(Q_full)
    S = _symmetrized(Q_full, pi)
    alpha = np.linalg.eigvalsh(S)
    beta = np.linalg.eigvalsh(S[np.ix_(idx, idx)])
    s = idx.size
    inter_ok = bool(
        np.all(alpha[:s] <= beta + _SLACK)
        and np.all(beta <= alpha[m - s:] + _SLACK)
    )
    full_ld = float(np.log1p(-rho * alpha).sum())
    sub_ld = float(np.log1p(-rho * beta).sum())
    diff = full_ld - sub_ld
    lower = (m - s) * math.log1p(-rho)
    upper = (m - s) * math.log1p(rho)
    within = lower - _SLACK <= diff <= upper + _SLACK
    if not within or not inter_ok:
        raise ValueError(
            f"interlacing bracket violated: diff={diff}, bracket=[{lower}, {upper}], "
            f"interlacing_ok={inter_ok}"
        )
    return InterlacingReport(diff, lower, upper, within, inter_ok)


# ---------------------------------------------------------------------------
# small analytics and exports


def spectrum_cover_functional(spectrum: Spectrum) -> float:
    """-(1/m) sum over non-top eigenvalues of ln(1 - lambda).

    The simple top eigenvalue 1 is excluded exactly once; an eigenvalue at -1
    contributes the finite -ln 2.
    """
    lam = spectrum.values[:-1]
    if lam.size and lam[-1] > 1.0 - 1e-9:
        raise ValueError("non-simple top eigenvalue: graph not connected?")
    return float(-np.log1p(-lam).sum() / spectrum.size)


def kolmogorov_distance(a: EmpiricalSpectralDistribution,
                        b: EmpiricalSpectralDistribution) -> float:
    grid = np.union1d(a.support, b.support)
    return float(np.abs(a.cdf(grid) - b.cdf(grid)).max())


def spectrum_to_csv(spectrum: Spectrum) -> str:
    lines = ["index,eigenvalue"]
    lines += [f"{i},{v!r}" for i, v in enumerate(spectrum.values.tolist())]
    return "\n".join(lines) + "\n"


def esd_to_csv(dist: EmpiricalSpectralDistribution) -> str:
    mass = dist.mass
    lines = ["support,mass"]
    lines += [f"{v!r},{mass!r}" for v in dist.support.tolist()]
    return "\n".join(lines) + "\n"
