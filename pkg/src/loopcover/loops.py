"""Loop measure with geometric killing: exact masses, bridge sampling, covering.

A pointed loop (xi_1, ..., xi_k) gets weight (1/k) (1+c)^{-k} prod Q[xi_i, xi_{i+1}]
with the product taken cyclically. Everything downstream is a functional of
that measure: the length law, the mass of the covering event (every vertex
visited), and Poisson soups of loops.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .errors import InfeasibleError
from .graphs import TransitionMatrix, WeightedGraph, transition_matrix
from .spectral import eigenvalues, stationary_from_transition

__all__ = [
    "KillingRate",
    "LoopLengthDistribution",
    "Loop",
    "CoverEstimate",
    "CoverMassResult",
    "LoopSoupSample",
    "CurvePoint",
    "loop_length_distribution",
    "total_mass",
    "sample_loop",
    "covers",
    "exact_cover_mass_dp",
    "mc_cover_prob",
    "conditional_cover_curve",
    "sample_loop_soup",
    "distribution_to_csv",
    "cover_estimate_to_json",
]

DP_MAX_VERTICES = 14
BRIDGE_MAX_LENGTH = 1_000_000
_DEFAULT_DP_K = 2048


@dataclass(frozen=True)
class KillingRate:
    """Per-step geometric damping c > 0; survival factor x = 1/(1+c)."""

    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError("killing rate must be positive")

    @property
    def survival(self) -> float:
        return 1.0 / (1.0 + self.rate)

    @classmethod
    def fixed(cls, c: float) -> KillingRate:
        return cls(c)

    @classmethod
    def exp_rate(cls, a: float, vertex_count: int) -> KillingRate:
        """c = e^{-a m}: the schedule whose decay rate per vertex is a."""
        return cls(math.exp(-a * vertex_count))

    @classmethod
    def power(cls, d: float, n: int) -> KillingRate:
        """c = n^{-d}."""
        return cls(float(n) ** (-d))

    @classmethod
    def beta(cls, beta: float, n: int) -> KillingRate:
        """c = beta / n."""
        return cls(beta / n)


@dataclass(frozen=True)
class LoopLengthDistribution:
    """Masses of loop lengths k = 2..K plus a rigorous bracket for the tail."""

    masses: np.ndarray  # masses[i] is the mass of length k = i + 2
    K: int
    tail_lower: float
    tail_upper: float
    killing: KillingRate

    def __post_init__(self) -> None:
        if np.any(self.masses < -1e-15):
            raise ValueError("negative loop mass")
        if self.tail_lower > self.tail_upper:
            raise ValueError("tail bracket inverted")
        self.masses.setflags(write=False)

    @property
    def mass_in_range(self) -> float:
        return float(self.masses.sum())

    @property
    def lengths(self) -> np.ndarray:
        return np.arange(2, self.K + 1)


@dataclass(frozen=True)
class Loop:
    """Pointed loop: the cyclic vertex sequence with a distinguished start."""

    vertices: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.vertices) < 2:
            raise ValueError("loops have length >= 2")

    @property
    def length(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class CoverEstimate:
    point: float
    half_width: float
    replicates: int
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.point <= 1.0:
            raise ValueError("estimate must lie in [0, 1]")
        if self.half_width < 0.0:
            raise ValueError("half_width must be non-negative")


@dataclass(frozen=True)
class CoverMassResult:
    """Exact covering mass plus the per-length decomposition from the subset DP.

    covered_mass and total_mass are closed-form exact (inclusion-exclusion of
    log-determinants over visited vertex subsets, no truncation). The per-k
    arrays come from the stepwise DP and stop at dp_k_max.
    """

    covered_mass: float
    total_mass: float
    conditional: np.ndarray     # P(cover | length = k), k = 2..dp_k_max
    per_k_covered: np.ndarray   # mu(cover, length = k)
    per_k_total: np.ndarray     # mu(length = k)
    dp_k_max: int
    killing: KillingRate

    @property
    def cover_probability(self) -> float:
        return self.covered_mass / self.total_mass


@dataclass(frozen=True)
class LoopSoupSample:
    loops: tuple[Loop, ...]
    intensity: float
    total_mass_used: float


@dataclass(frozen=True)
class CurvePoint:
    k: int
    estimate: CoverEstimate
    markov_lower: float | None


# ---------------------------------------------------------------------------
# masses


def _traces(Q: TransitionMatrix, K: int) -> np.ndarray:
    """Tr Q^k for k = 2..K, from the spectrum."""
    lam = eigenvalues(Q, stationary_from_transition(Q)).values
    out = np.empty(K - 1)
    v = lam * lam
    for i in range(K - 1):
        out[i] = v.sum()
        v = v * lam
    return out


def _tail_upper(m: int, x: float, K: int) -> float:
    # m * sum_{k>K} x^k / k <= m x^{K+1} / ((K+1)(1-x))
    return m * x ** (K + 1) / ((K + 1) * (1.0 - x))


def loop_length_distribution(Q: TransitionMatrix, c: KillingRate,
                             K: int) -> LoopLengthDistribution:
    """Mass of each length k in 2..K: Tr Q^k / (k (1+c)^k)."""
    if K < 2:
        raise ValueError("K must be >= 2")
    x = c.survival
    ks = np.arange(2, K + 1, dtype=np.float64)
    masses = _traces(Q, K) * np.exp(ks * math.log(x)) / ks
    # every trace is a sum of walk probabilities; negatives are solver noise
    np.maximum(masses, 0.0, out=masses)
    return LoopLengthDistribution(masses, K, 0.0, _tail_upper(Q.size, x, K), c)


def total_mass(Q: TransitionMatrix, c: KillingRate, K: int) -> tuple[float, float]:
    dist = loop_length_distribution(Q, c, K)
    return dist.mass_in_range, dist.tail_upper


def choose_truncation(Q: TransitionMatrix, c: KillingRate,
                      rel_tol: float = 1e-9) -> int:
    """Smallest doubling K whose tail bound is below rel_tol of the in-range mass.

    The mass is evaluated once at the base window; it can only grow with K, so
    testing later tails against the base mass is conservative and skips the
    trace recomputation (which would dominate for slow-killing rates).
    """
    K = 64
    mass, tail = total_mass(Q, c, K)
    while True:
        if mass > 0 and tail < rel_tol * mass:
            return K
        if K > 1 << 25:
            raise InfeasibleError(
                f"cannot truncate: killing rate {c.rate} needs K beyond 2^25"
            )
        K *= 2
        tail = _tail_upper(Q.size, c.survival, K)


# ---------------------------------------------------------------------------
# bridge sampler


class _BridgeSampler:
    """Length, base point, and bridge steps for one (Q, length law) pair.

    Keeps the symmetric eigendecomposition so diag(Q^k) is O(m^2) per length,
    and caches the per-base column family v_t = (Q^t) e_x while a base point
    repeats. Sequential by nature; replicate parallelism happens one level up.
    """

    def __init__(self, Q: TransitionMatrix, dist: LoopLengthDistribution):
        self.Q = Q.entries
        self.m = Q.size
        self.dist = dist
        pi = stationary_from_transition(Q)
        s = np.sqrt(pi.weights)
        S = (s[:, None] / s[None, :]) * Q.entries
        lam, U = np.linalg.eigh(0.5 * (S + S.T))
        self._lam = lam
        self._U2 = U * U  # diag(Q^k) = U2 @ lam^k
        self._cum = np.cumsum(dist.masses)
        self._columns: dict[tuple[int, int], np.ndarray] = {}

    def draw_length(self, rng: np.random.Generator) -> int:
        u = rng.random() * self._cum[-1]
        return int(np.searchsorted(self._cum, u, side="right")) + 2

    def diag_power(self, k: int) -> np.ndarray:
        d = self._U2 @ (self._lam**k)
        return np.maximum(d, 0.0)  # clip eigensolver noise on exact zeros

    def _column_family(self, x: int, k: int) -> np.ndarray:
        key = (x, k)
        if key not in self._columns:
            if len(self._columns) > 4:
                self._columns.clear()  # bound the cache; loops are short-lived
            vs = np.empty((k, self.m))
            v = np.zeros(self.m)
            v[x] = 1.0
            for t in range(k):
                vs[t] = v
                v = self.Q @ v
            self._columns[key] = vs
        return self._columns[key]

    def sample(self, rng: np.random.Generator, k: int | None = None) -> Loop:
        if k is None:
            k = self.draw_length(rng)
        if k > BRIDGE_MAX_LENGTH:
            raise InfeasibleError(
                f"bridge length {k} exceeds cap {BRIDGE_MAX_LENGTH}; "
                "use the DP/bound pathway"
            )
        diag = self.diag_power(k)
        tot = diag.sum()
        if tot <= 0.0:
            raise ValueError(f"no loops of length {k} exist (zero trace)")
        u = rng.random() * tot
        x = int(np.searchsorted(np.cumsum(diag), u, side="right"))
        x = min(x, self.m - 1)
        vs = self._column_family(x, k)
        verts = [x]
        y = x
        for j in range(1, k):
            # v_j = z leaves k - j steps to return to x
            wts = self.Q[y] * vs[k - j]
            s = wts.sum()
            if not s > 0.0 or not math.isfinite(s):
                raise ValueError(f"bridge weights degenerate at (k={k}, j={j})")
            u = rng.random() * s
            z = int(np.searchsorted(np.cumsum(wts), u, side="right"))
            y = min(z, self.m - 1)
            verts.append(y)
        return Loop(tuple(verts))


def sample_loop(Q: TransitionMatrix, dist: LoopLengthDistribution,
                rng: np.random.Generator, *, allow_truncated: bool = False) -> Loop:
    """One loop from the normalized measure restricted to lengths <= dist.K.

    Length is drawn proportional to dist.masses, the base point proportional
    to (Q^k)_xx, then each bridge step z with weight Q[y, z] (Q^{k-j-1})[z, x].
    """
    total = dist.mass_in_range
    if not allow_truncated and dist.tail_upper > 1e-9 * total:
        raise ValueError(
            "truncation tail exceeds 1e-9 of in-range mass; enlarge K or pass "
            "allow_truncated=True"
        )
    return _BridgeSampler(Q, dist).sample(rng)


def covers(loop: Loop, g: WeightedGraph) -> bool:
    """True iff the loop is valid for g and visits every vertex."""
    edge_set = {(u, v) for u, v, _ in g.edges}
    seq = loop.vertices
    for a, b in zip(seq, seq[1:] + seq[:1]):
        key = (a, b) if a < b else (b, a)
        if a == b or key not in edge_set:
            raise ValueError(f"loop step ({a}, {b}) is not an edge of the graph")
    return len(set(seq)) == g.vertex_count


# ---------------------------------------------------------------------------
# exact covering mass


def _subset_log_dets(Q: np.ndarray, x: float) -> tuple[float, float]:
    """(covered, total) masses by inclusion-exclusion over visited subsets.

    total = -ln det(I - xQ) = sum_k (x^k/k) Tr Q^k; restricting to loops that
    stay inside S replaces Q by its principal submatrix, and alternating over
    S isolates the loops visiting every vertex. Exact: no length truncation.
    """
    m = Q.shape[0]
    eye = np.eye(m)
    total = -np.linalg.slogdet(eye - x * Q)[1]
    terms = []
    for mask in range(1, 1 << m):
        idx = [i for i in range(m) if mask >> i & 1]
        sub = Q[np.ix_(idx, idx)]
        val = -np.linalg.slogdet(np.eye(len(idx)) - x * sub)[1]
        terms.append(val if (m - len(idx)) % 2 == 0 else -val)
    return math.fsum(terms), total


def _dp_per_length(Q: np.ndarray, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Visited-subset DP over (current vertex, visited set), one pass per start.

    Returns (sum_x P^x[X_k=x, covered], sum_x P^x[X_k=x]) for k = 2..k_max.
    The full-subset column is the natural absorbed state: once every bit is
    set, mass keeps evolving there and never leaves.
    """
    m = Q.shape[0]
    n_masks = 1 << m
    full = n_masks - 1
    masks = np.arange(n_masks)
    idx_no = [np.flatnonzero(((masks >> z) & 1) == 0) for z in range(m)]
    idx_has = [idx_no[z] | (1 << z) for z in range(m)]
    edges = [(y, int(z)) for y in range(m) for z in np.flatnonzero(Q[y] > 0)]
    covered = np.zeros(k_max + 1)
    returned = np.zeros(k_max + 1)
    for x in range(m):
        F = np.zeros((m, n_masks))
        F[x, 1 << x] = 1.0
        for k in range(1, k_max + 1):
            G = np.zeros((m, n_masks))
            for y, z in edges:
                row = Q[y, z] * F[y]
                G[z][idx_has[z]] += row[idx_has[z]] + row[idx_no[z]]
            F = G
            if k >= 2:
                covered[k] += F[x, full]
                returned[k] += F[x].sum()
    return covered[2:], returned[2:]


def exact_cover_mass_dp(g: WeightedGraph, c: KillingRate, K: int | None = None,
                        dp_k_max: int | None = None) -> CoverMassResult:
    """Exact covering mass, total mass, and the per-length conditional law.

    The DP runs over states (current vertex, visited subset) for lengths up to
    dp_k_max (default min(K, 2048)); the headline covered/total masses use the
    closed inclusion-exclusion form and carry no truncation error at all.
    Vertex counts above 14 are refused (subset state space).
    """
    m = g.vertex_count
    if m > DP_MAX_VERTICES:
        raise InfeasibleError(f"subset DP caps at {DP_MAX_VERTICES} vertices, got {m}")
    Q = transition_matrix(g)
    if K is None:
        K = choose_truncation(Q, c, rel_tol=1e-12)
    k_dp = min(K, _DEFAULT_DP_K if dp_k_max is None else dp_k_max)
    if k_dp < 2:
        raise ValueError("dp_k_max must be >= 2")
    x = c.survival
    covered_exact, total_exact = _subset_log_dets(Q.entries, x)
    cov_raw, ret_raw = _dp_per_length(Q.entries, k_dp)
    ks = np.arange(2, k_dp + 1, dtype=np.float64)
    damp = np.exp(ks * math.log(x)) / ks
    per_k_covered = cov_raw * damp
    per_k_total = ret_raw * damp
    with np.errstate(invalid="ignore", divide="ignore"):
        conditional = np.where(per_k_total > 0.0, per_k_covered / per_k_total, 0.0)
    return CoverMassResult(
        covered_mass=covered_exact,
        total_mass=total_exact,
        conditional=conditional,
        per_k_covered=per_k_covered,
        per_k_total=per_k_total,
        dp_k_max=k_dp,
        killing=c,
    )


# ---------------------------------------------------------------------------
# Monte Carlo estimators


def mc_cover_prob(g: WeightedGraph, c: KillingRate, budget: int,
                  seed: int) -> CoverEstimate:
    """Estimate the covering probability by sampling loops from the measure.

    Replicate r draws from substream (seed, r); the mean is accumulated in
    replicate order, so results do not depend on scheduling.
    """
    if budget < 100:
        raise ValueError("budget must be >= 100")
    Q = transition_matrix(g)
    K = choose_truncation(Q, c)
    dist = loop_length_distribution(Q, c, K)
    if dist.tail_upper > 1e-9 * dist.mass_in_range:
        raise ValueError("truncation tail too large; increase K")
    sampler = _BridgeSampler(Q, dist)
    m = g.vertex_count
    hits = 0
    for r in range(budget):
        loop = sampler.sample(substream(seed, r))
        if len(set(loop.vertices)) == m:
            hits += 1
    p = hits / budget
    p_tilde = (hits + 0.5) / (budget + 1.0)  # continuity guard
    half = 1.96 * math.sqrt(p_tilde * (1.0 - p_tilde) / budget)
    return CoverEstimate(p, half, budget, seed)


def conditional_cover_curve(g: WeightedGraph, ks, reps: int,
                            seed: int) -> list[CurvePoint]:
    """P(cover | length = k) for each requested k, by forced-length bridges.

    For regular unit-weight graphs each point also carries the Markov lower
    bound 1 - d m (m-1) / k from the cover-and-return expectation.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    ks = [int(k) for k in ks]
    if any(k < 2 for k in ks):
        raise ValueError("every k must be >= 2")
    Q = transition_matrix(g)
    from .graphs import structural_report
    from .spectral import _minimal_odd_closed_walk

    bounds, _, bipartite = structural_report(g)
    regular_unit = (
        bounds.max_degree == bounds.min_degree
        and all(w == 1.0 for _, _, w in g.edges)
    )
    # loops of odd length k exist iff some odd closed walk fits inside k;
    # deciding this structurally avoids misreading eigensolver noise on an
    # exactly-zero trace as positive mass
    odd_floor = None if bipartite else len(_minimal_odd_closed_walk(g)) - 1
    m = g.vertex_count
    dummy = loop_length_distribution(Q, KillingRate(1.0), 2)
    sampler = _BridgeSampler(Q, dummy)
    out: list[CurvePoint] = []
    for j, k in enumerate(ks):
        markov = None
        if regular_unit:
            markov = max(0.0, 1.0 - bounds.max_degree * m * (m - 1) / k)
        if k % 2 == 1 and (odd_floor is None or k < odd_floor):
            out.append(CurvePoint(k, CoverEstimate(0.0, 0.0, reps, seed), markov))
            continue
        hits = 0
        for r in range(reps):
            loop = sampler.sample(substream(seed, j * reps + r), k=k)
            if len(set(loop.vertices)) == m:
                hits += 1
        p = hits / reps
        p_tilde = (hits + 0.5) / (reps + 1.0)
        half = 1.96 * math.sqrt(p_tilde * (1.0 - p_tilde) / reps)
        out.append(CurvePoint(k, CoverEstimate(p, half, reps, seed), markov))
    return out


def sample_loop_soup(g: WeightedGraph, c: KillingRate, alpha: float,
                     seed: int, K: int | None = None) -> LoopSoupSample:
    """Poisson soup: count ~ Poisson(alpha * mass), loops i.i.d. from the measure.

    Thinning makes the covering-loop count within a soup exactly Poisson with
    mean alpha * covered_mass.
    """
    if not alpha > 0:
        raise ValueError("intensity scale alpha must be positive")
    Q = transition_matrix(g)
    if K is None:
        K = choose_truncation(Q, c)
    dist = loop_length_distribution(Q, c, K)
    if dist.tail_upper > 1e-9 * dist.mass_in_range:
        raise ValueError("truncation tail too large; increase K")
    mass = dist.mass_in_range
    count = int(substream(seed, 0).poisson(alpha * mass))
    sampler = _BridgeSampler(Q, dist)
    loops = tuple(sampler.sample(substream(seed, 1 + r)) for r in range(count))
    return LoopSoupSample(loops, alpha, mass)


# ---------------------------------------------------------------------------
# exports


def distribution_to_csv(dist: LoopLengthDistribution) -> str:
    lines = ["k,mass"]
    lines += [f"{k},{mass!r}" for k, mass in zip(dist.lengths.tolist(),
                                                 dist.masses.tolist())]
    return "\n".join(lines) + "\n"


def cover_estimate_to_json(est: CoverEstimate, truncation_k: int,
                           tail_upper: float) -> str:
    return json.dumps(
        {
            "estimate": est.point,
            "ci": est.half_width,
            "seed": est.seed,
            "budget": est.replicates,
            "truncation_k": truncation_k,
            "tail_upper": tail_upper,
        },
        sort_keys=True,
    )
