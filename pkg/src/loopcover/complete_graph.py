"""Cover-time simulation on complete graphs and the log-series length variable.

Covering by a single killed loop on the complete graph reduces to the event
{cover time <= eta} for an independent pair: a coupon-collector cover time
(a sum of geometrics, never a simulated walk) and a modified geometric
length eta supported on {2, 3, ...}. Everything here is built from that
decomposition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ._rng import substream
from .loops import CoverEstimate

__all__ = [
    "CoverTimeSample",
    "ModifiedGeometric",
    "BetaRegimeResult",
    "LaplaceTailReport",
    "sample_cover_time",
    "cover_time_array",
    "normalized_cover_array",
    "exact_cover_time_mean",
    "eta_pmf",
    "sample_eta",
    "sample_eta_array",
    "mc_complete_cover_prob",
    "gumbel_cdf",
    "gumbel_exp_moment",
    "beta_regime_estimate",
    "laplace_tail_bound_check",
]


@dataclass(frozen=True)
class CoverTimeSample:
    """One cover time of the n-point coupon collector, with its Gumbel rescaling."""

    n: int
    value: int
    normalized: float

    def __post_init__(self) -> None:
        if self.value < self.n - 1:
            raise ValueError(f"cover time {self.value} below the floor {self.n - 1}")


@dataclass(frozen=True)
class ModifiedGeometric:
    """Loop-length law on {2, 3, ...}: pmf(p) proportional to (1+c)^(-p)/p."""

    c: float

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ValueError("killing rate c must be positive")
        if self.c < 1e-300:
            raise ValueError("killing rate below 1e-300 is not representable")

    @cached_property
    def normalization(self) -> float:
        z = -math.log(self.c) + math.log1p(self.c) - 1.0 / (1.0 + self.c)
        if not z > 0:
            raise ValueError(f"normalization {z} must be positive")
        return z


def eta_pmf(mg: ModifiedGeometric, p: int) -> float:
    if p < 2:
        raise ValueError("the length variable is supported on p >= 2")
    log_mass = -p * math.log1p(mg.c) - math.log(p)
    return math.exp(log_mass) / mg.normalization


def sample_eta(mg: ModifiedGeometric, rng: np.random.Generator) -> int:
    """One draw by log-series inversion, rejecting p = 1.

    K = floor(1 + ln U1 / ln(1 - (1-x)^U2)) with x = 1/(1+c) is Kemp's
    sampler for the log-series law; conditioning on K >= 2 is the target.
    """
    lnw = math.log(mg.c) - math.log1p(mg.c)  # ln(1 - x)
    while True:
        u1 = 1.0 - rng.random()
        u2 = 1.0 - rng.random()
        lq = math.log1p(-math.exp(u2 * lnw))
        k = math.floor(1.0 + math.log(u1) / lq)
        if k >= 2.0:
            return int(k)


def sample_eta_array(mg: ModifiedGeometric, reps: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized rejection rounds of the same sampler; one stream, draw order."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    lnw = math.log(mg.c) - math.log1p(mg.c)
    out = np.empty(reps)
    filled = 0
    while filled < reps:
        need = reps - filled
        u1 = 1.0 - rng.random(need)
        u2 = 1.0 - rng.random(need)
        k = np.floor(1.0 + np.log(u1) / np.log1p(-np.exp(u2 * lnw)))
        good = k >= 2.0
        taken = int(good.sum())
        out[filled:filled + taken] = k[good]
        filled += taken
    return out


def _geom_log_survivals(n: int) -> np.ndarray:
    """ln(1 - p_i) for the non-deterministic coupons i = 2..n-1."""
    i = np.arange(2, n)
    return np.log((i - 1.0) / (n - 1.0))


def sample_cover_time(n: int, rng: np.random.Generator) -> CoverTimeSample:
    """Coupon-collector cover time: 1 + sum of geometrics ceil(ln U / ln(1-p)).

    Success probabilities are (n-i)/(n-1) for i = 1..n-1; the i = 1 coupon has
    p = 1 and contributes the leading deterministic 1. Uniforms are taken as
    1 - U to land in (0, 1]; the U = 1 endpoint is clamped to the floor 1.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    value = 1
    if n > 2:
        u = 1.0 - rng.random(n - 2)
        z = np.ceil(np.log(u) / _geom_log_survivals(n))
        value += int(np.maximum(z, 1.0).sum())
    return CoverTimeSample(n, value, (value - n * math.log(n)) / n)


def cover_time_array(n: int, reps: int, seed: int) -> np.ndarray:
    """reps cover times, replicate r drawn from substream(seed, r).

    The bulk path draws exponentials and uses ceil(E / -ln(1-p)), the same
    inversion law as sample_cover_time with E = -ln U.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    values = np.empty(reps)
    if n == 2:
        values.fill(1.0)
        return values
    # ceil(E * 1/rate): E > 0 a.s., so the geometric floor of 1 needs no clamp
    inv_rates = -1.0 / _geom_log_survivals(n)
    buf = np.empty(n - 2)
    for r in range(reps):
        gen = substream(seed, r)
        gen.standard_exponential(out=buf)
        np.multiply(buf, inv_rates, out=buf)
        np.ceil(buf, out=buf)
        values[r] = 1.0 + buf.sum()
    return values


@lru_cache(maxsize=4)
def _normalized_cover_cached(n: int, reps: int, seed: int) -> np.ndarray:
    out = (cover_time_array(n, reps, seed) - n * math.log(n)) / n
    out.setflags(write=False)
    return out


def normalized_cover_array(n: int, reps: int, seed: int) -> np.ndarray:
    """(C - n ln n)/n per replicate; cached because sweeps reuse the draws."""
    return _normalized_cover_cached(n, reps, seed)


def exact_cover_time_mean(n: int) -> float:
    """(n-1) * H_{n-1}, exact from the geometric decomposition."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return (n - 1) * math.fsum(1.0 / i for i in range(1, n))


def mc_complete_cover_prob(n: int, c: float, reps: int, seed: int) -> CoverEstimate:
    """Estimate P[cover time <= eta] from independent per-replicate draws."""
    if n < 3:
        raise ValueError("n must be >= 3")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    mg = ModifiedGeometric(c)
    inv_rates = -1.0 / _geom_log_survivals(n)
    buf = np.empty(n - 2)
    hits = 0
    for r in range(reps):
        gen = substream(seed, r)
        gen.standard_exponential(out=buf)
        np.multiply(buf, inv_rates, out=buf)
        np.ceil(buf, out=buf)
        cover = 1.0 + buf.sum()
        if cover <= sample_eta(mg, gen):
            hits += 1
    point = hits / reps
    p_tilde = (hits + 0.5) / (reps + 1.0)
    half_width = 1.96 * math.sqrt(p_tilde * (1.0 - p_tilde) / reps)
    return CoverEstimate(point, half_width, reps, seed)


def gumbel_cdf(t: float) -> float:
    return math.exp(-math.exp(-t))


def gumbel_exp_moment(beta: float) -> float:
    """E[exp(-beta * Gumbel)] = Gamma(1 + beta)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return math.gamma(1.0 + beta)


@dataclass(frozen=True)
class BetaRegimeResult:
    """MC estimate of E[exp(-beta * normalized cover time)] next to its limit."""

    estimate: float
    predicted: float
    replicates: int
    seed: int

    def __float__(self) -> float:
        return self.estimate


def beta_regime_estimate(beta: float, n: int, reps: int, seed: int) -> BetaRegimeResult:
    """Desk-scale proxy for the beta-killing covering probability.

    The probability itself decays like n^(-beta)/(ln n)^2 and cannot be hit
    by direct MC; its Gumbel-moment factor E[exp(-beta xi)] = Gamma(1+beta)
    can, and this estimates it from normalized cover times.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n < 100:
        raise ValueError("n must be >= 100")
    normalized = normalized_cover_array(n, reps, seed)
    estimate = float(np.exp(-beta * normalized).mean())
    return BetaRegimeResult(estimate, math.gamma(1.0 + beta), reps, seed)


@dataclass(frozen=True)
class LaplaceTailReport:
    n: int
    rate: float
    threshold: float
    empirical: float
    bound: float
    std_error: float
    replicates: int
    seed: int
    holds: bool


def laplace_tail_bound_check(
    n: int, lam: float, gamma: float, reps: int, seed: int
) -> LaplaceTailReport:
    """Check P[(C - (n-1)ln(n-1))/(n-1) <= gamma] <= exp(-lam e^(-gamma))/(1-lam).

    The empirical frequency may exceed the bound by at most 3 MC standard
    errors; beyond that the check raises.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError("lam must lie in [0, 1)")
    if not gamma < -1.0:
        raise ValueError("gamma must be < -1")
    values = cover_time_array(n, reps, seed)
    shifted = (values - (n - 1) * math.log(n - 1)) / (n - 1)
    hits = int((shifted <= gamma).sum())
    empirical = hits / reps
    bound = math.exp(-lam * math.exp(-gamma)) / (1.0 - lam)
    std_error = math.sqrt(empirical * (1.0 - empirical) / reps)
    holds = empirical <= bound + 3.0 * std_error
    report = LaplaceTailReport(
        n, lam, gamma, empirical, bound, std_error, reps, seed, holds
    )
    if not holds:
        raise ArithmeticError(
            f"tail bound violated: empirical {empirical} vs bound {bound} "
            f"(3 se = {3.0 * std_error})"
        )
    return report
