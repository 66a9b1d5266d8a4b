"""Closed-form spectra and limit objects for the torus, tree-ball, and complete families.

The central quantity is the short-loop rate: the integral of -ln(1 - x)
against a limiting spectral measure. It is the denominator ingredient of the
covering-probability limit rate/(rate + J).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.special import zeta as _hurwitz_zeta

from .graphs import DegreeWeightBounds
from .spectral import Spectrum

__all__ = [
    "LimitSpectrum",
    "SpectralAtom",
    "PhaseParameters",
    "JEstimate",
    "torus_eigenvalues",
    "torus_limit_J",
    "tree_char_poly",
    "tree_ball_limit_spectrum",
    "tree_ball_J",
    "tree_ball_j_from_atoms",
    "complete_trace",
    "predicted_cover_limit",
    "predicted_soup_covering_law",
    "complete_predicted_limit",
    "complete_beta_asymptotic",
    "j_range_check",
    "limit_spectrum_to_csv",
]


@dataclass(frozen=True)
class SpectralAtom:
    """One atom of an atomic limit spectrum, tagged by its (level, index) origin."""

    level: int      # M
    index: int      # i within the level
    theta: float    # root angle in (0, pi)
    location: float # eigenvalue position in [-1, 1]
    mass: float


@dataclass(frozen=True)
class LimitSpectrum:
    """Limiting spectral measure: atomic list, or a named parametric family."""

    kind: str  # "atomic" | "torus_product" | "arcsine"
    atoms: tuple[SpectralAtom, ...] = ()
    tail_mass: float = 0.0
    params: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind not in ("atomic", "torus_product", "arcsine"):
            raise ValueError(f"unknown limit-spectrum kind {self.kind!r}")
        if self.kind == "atomic":
            if any(a.mass <= 0 for a in self.atoms):
                raise ValueError("atom masses must be positive")
            total = math.fsum(a.mass for a in self.atoms) + self.tail_mass
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"atomic mass + tail = {total}, expected 1")

    @property
    def locations(self) -> np.ndarray:
        return np.array([a.location for a in self.atoms])

    @property
    def masses(self) -> np.ndarray:
        return np.array([a.mass for a in self.atoms])


@dataclass(frozen=True)
class PhaseParameters:
    """The two numbers the covering-probability limit depends on.

    decay_rate: limit of -ln(killing)/vertex_count, possibly +inf.
    short_loop_rate: -integral of ln(1-x) against the limit spectrum; > 0.
    """

    decay_rate: float
    short_loop_rate: float

    def __post_init__(self) -> None:
        if not self.short_loop_rate > 0:
            raise ValueError("short_loop_rate must be positive")


@dataclass(frozen=True)
class JEstimate:
    """Numeric value of the short-loop rate with a reported error estimate."""

    value: float
    error: float
    method: str

    def __float__(self) -> float:
        return self.value


def torus_eigenvalues(dim: int, side: int) -> Spectrum:
    """All side^dim eigenvalues (1/dim) sum_i cos(2 pi p_i / side), sorted."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if side < 3:
        raise ValueError("side must be >= 3 (side 2 collapses parallel edges)")
    base = np.cos(2.0 * np.pi * np.arange(side) / side)
    vals = reduce(np.add.outer, [base] * dim).ravel() / dim
    vals.sort()
    # pin the Perron root exactly; fp cosine sums drift at 1e-16
    vals[-1] = 1.0
    return Spectrum(vals)


# ---------------------------------------------------------------------------
# torus short-loop rate: quadrature and series


def _torus_grid_sum(dim: int, n: int) -> float:
    """Midpoint sum of -ln(1 - mean cosine) excluding the 2^dim corner cells."""
    pts = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    c = np.cos(pts)
    if dim == 1:
        f = -np.log1p(-c)
        total = float(f.sum() - f[0] - f[-1])
    else:
        total = 0.0
        inner = reduce(np.add.outer, [c] * (dim - 1)) if dim > 2 else c
        for i in range(n):
            slab = -np.log1p(-(c[i] + inner) / dim)
            total += float(slab.sum())
            if i in (0, n - 1):
                # peel the 2^(dim-1) corner cells of this boundary slab
                for corner in range(1 << (dim - 1)):
                    idx = tuple(-1 if corner >> b & 1 else 0 for b in range(dim - 1))
                    total -= float(slab[idx])
    return total / n**dim


def _corner_bracket(dim: int, h: float) -> tuple[float, float]:
    """Analytic bracket for the integral over the 2^dim excluded corner cubes.

    Inside a folded corner cube [0,h]^dim the integrand -ln g satisfies
    -ln(2 pi^2) - 2 ln max_i t_i <= -ln g <= ln(dim/8) - 2 ln max_i t_i,
    from 2t <= sin(pi t) <= pi t; the -2 ln max term integrates to
    h^dim (2/dim - 2 ln h).
    """
    base = h**dim * (2.0 / dim - 2.0 * math.log(h))
    lo = (1 << dim) * (base - h**dim * math.log(2.0 * math.pi**2))
    hi = (1 << dim) * (base + h**dim * math.log(dim / 8.0))
    return lo, hi


_QUAD_BASE_N = {1: 1 << 19, 2: 1 << 9, 3: 1 << 6}


def _torus_quadrature(dim: int) -> JEstimate:
    n0 = _QUAD_BASE_N.get(dim, 16)
    values = []
    for n in (n0, 2 * n0, 4 * n0):
        lo, hi = _corner_bracket(dim, 1.0 / n)
        values.append(_torus_grid_sum(dim, n) + 0.5 * (lo + hi))
    d1, d2 = abs(values[1] - values[0]), abs(values[2] - values[1])
    if d2 > d1 and d2 > 1e-12:
        raise ArithmeticError(
            f"quadrature not converging for dim={dim}: refinements {d1} then {d2}"
        )
    lo, hi = _corner_bracket(dim, 1.0 / (4 * n0))
    half_bracket = 0.5 * (hi - lo)
    # first-order Richardson: the leading error of the edge cells is ~ 1/n
    value = 2.0 * values[2] - values[1]
    return JEstimate(value, d2 + half_bracket, "quadrature")


# central-binomial asymptotic coefficients: C(2j,j)/4^j ~ (pi j)^(-1/2) *
# (1 - 1/(8j) + 1/(128 j^2) + 5/(1024 j^3) + ...)
_ARCSINE_TAIL_COEFFS = (1.0, -0.125, 1.0 / 128.0, 5.0 / 1024.0)


def _arcsine_series() -> JEstimate:
    """sum_{j>=1} m_{2j}/(2j) with a Hurwitz-zeta closed form for the tail."""
    cut = 4096
    term = 0.5  # m_2 = 1/2
    partial = []
    for j in range(1, cut + 1):
        partial.append(term / (2 * j))
        term *= (2 * j + 1) / (2 * j + 2)
    head = math.fsum(partial)
    tail = 0.0
    for r, coef in enumerate(_ARCSINE_TAIL_COEFFS):
        s = 1.5 + r
        tail += coef * float(_hurwitz_zeta(s, cut + 1))
    tail /= 2.0 * math.sqrt(math.pi)
    # next omitted coefficient is O(j^(-4)) inside the sum: bound its zeta weight
    err = 0.01 * float(_hurwitz_zeta(5.5, cut + 1)) / (2.0 * math.sqrt(math.pi))
    return JEstimate(head + tail, err + 1e-15, "series")


def torus_limit_J(dim: int, method: str = "quadrature") -> JEstimate:
    """Short-loop rate of the dim-dimensional torus family.

    dim=1 has the closed value ln 2; the series route (arcsine moments) is
    implemented for dim=1 only, quadrature for every dim.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if method == "quadrature":
        return _torus_quadrature(dim)
    if method == "series":
        if dim != 1:
            raise ValueError("series method covers dim=1 only; use quadrature")
        return _arcsine_series()
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# tree balls


def tree_char_poly(M: int, lam: float, d: int) -> float:
    """B_M(lam) by the two-term recurrence; B_M(1) = ((d-1)/d)^M."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if d < 3:
        raise ValueError("d must be >= 3")
    b_prev = lam                   # B_0
    b_cur = lam * lam - 1.0 / d    # B_1
    if M == 0:
        return b_prev
    if M == 1:
        return b_cur
    coef = (d - 1.0) / (d * d)
    for _ in range(M - 1):
        b_prev, b_cur = b_cur, lam * b_cur - coef * b_prev
    return b_cur


def _root_function(M: int, d: int, theta: float) -> float:
    return (d - 1.0) * math.sin((M + 2.0) * theta) - math.sin(M * theta)


def tree_ball_limit_spectrum(d: int, M_max: int) -> LimitSpectrum:
    """Atomic limit spectrum of growing degree-d tree balls, truncated at level M_max.

    Level M contributes M+1 atoms at (2 sqrt(d-1)/d) cos(theta) over the roots
    of (d-1) sin((M+2) theta) = sin(M theta), each of mass (d-2)^2/(d-1)^(M+2).
    Root brackets ]pi(2j+1)/(2M+4), pi(2j+3)/(2M+4)[ are sign-verified before
    bisection: the construction errors out rather than rescanning.
    """
    if d < 3:
        raise ValueError("d must be >= 3")
    if M_max < 0:
        raise ValueError("M_max must be >= 0")
    scale = 2.0 * math.sqrt(d - 1.0) / d
    atoms: list[SpectralAtom] = []
    for M in range(M_max + 1):
        denom = 2.0 * M + 4.0
        endpoints = [math.pi * (2 * j + 1) / denom for j in range(M + 2)]
        signs = [_root_function(M, d, t) for t in endpoints]
        for j, s in enumerate(signs):
            expected = 1.0 if j % 2 == 0 else -1.0
            if s * expected <= 0.0:
                raise ArithmeticError(
                    f"bracket endpoint sign check failed at M={M}, j={j}: {s}"
                )
        mass = (d - 2.0) ** 2 / float(d - 1) ** (M + 2)
        for j in range(M + 1):
            if M % 2 == 0 and j == M // 2:
                # both sines vanish at multiples of pi, so the middle root of
                # an even level is pi/2 exactly; emitting location 0.0 keeps
                # the mass stacked at zero off the +-1e-16 cosine fuzz
                atoms.append(SpectralAtom(M, j, 0.5 * math.pi, 0.0, mass))
                continue
            lo, hi = endpoints[j], endpoints[j + 1]
            f_lo = signs[j]
            while hi - lo > 1e-13:
                mid = 0.5 * (lo + hi)
                f_mid = _root_function(M, d, mid)
                if f_mid == 0.0:
                    lo = hi = mid
                elif (f_mid > 0.0) == (f_lo > 0.0):
                    lo, f_lo = mid, f_mid
                else:
                    hi = mid
            theta = 0.5 * (lo + hi)
            atoms.append(SpectralAtom(M, j, theta, scale * math.cos(theta), mass))
    q = 1.0 / (d - 1.0)
    # sum_{M > M_max} (M+1) q^(M+2) * (d-2)^2, closed form
    tail = ((d - 2.0) ** 2 * q ** (M_max + 3)
            * ((M_max + 2) * (1.0 - q) + q) / (1.0 - q) ** 2)
    return LimitSpectrum("atomic", tuple(atoms), tail)


def tree_ball_J(d: int) -> float:
    """Closed form: ln 2 for d=2, else ln(d/(d-1))/(d-1)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if d == 2:
        return math.log(2.0)
    return math.log(d / (d - 1.0)) / (d - 1.0)


def tree_ball_j_from_atoms(spectrum: LimitSpectrum) -> tuple[float, float, float]:
    """(value, lower, upper): atomic reconstruction with the tail bracketed.

    The tail mass sits somewhere in the support [-s, s], so its contribution
    to -ln(1-x) lies between -ln(1+s) and -ln(1-s) times the tail mass.
    """
    if spectrum.kind != "atomic":
        raise ValueError("atomic spectrum required")
    locs = spectrum.locations
    core = float(-(spectrum.masses * np.log1p(-locs)).sum())
    s = float(np.abs(locs).max()) if len(locs) else 1.0
    lo = core + spectrum.tail_mass * (-math.log1p(s))
    hi = core + spectrum.tail_mass * (-math.log1p(-s))
    return core, lo, hi


# ---------------------------------------------------------------------------
# complete graphs and phase predictions


def complete_trace(n: int, k: int) -> float:
    """Tr Q^k on the complete graph: 1 + (-1)^k/(n-1)^(k-1)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1.0 + (-1.0) ** k / float(n - 1) ** (k - 1)


def predicted_cover_limit(p: PhaseParameters) -> float:
    """Limit of the covering probability: 0, 1, or rate/(rate + J)."""
    a = p.decay_rate
    if a <= 0.0:
        return 0.0
    if math.isinf(a):
        return 1.0
    return a / (a + p.short_loop_rate)


def predicted_soup_covering_law(a: float) -> float:
    """Poisson mean of the covering-loop count in the unit-intensity soup."""
    if math.isnan(a):
        raise ValueError("rate must not be NaN")
    return max(a, 0.0)


def complete_predicted_limit(dexp: float) -> float:
    """Covering-probability limit on complete graphs with killing n^(-dexp)."""
    if math.isinf(dexp) and dexp > 0:
        return 1.0
    if dexp <= 1.0:
        return 0.0
    return 1.0 - 1.0 / dexp


def complete_beta_asymptotic(beta: float, n: int) -> float:
    """Gamma(1+beta) / (beta n^beta (ln n)^2), the covering-mass asymptotic."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n < 3:
        raise ValueError("n must be >= 3")
    return math.gamma(1.0 + beta) / (beta * n**beta * math.log(n) ** 2)


def j_range_check(J: float, bounds: DegreeWeightBounds) -> bool:
    """Membership of J in the structural bracket [r^2/(2 R^2 D^2), 28 D^2 R^2/(d^2 r^2)]."""
    r = bounds.inv_weight_min
    R = bounds.inv_weight_max
    D = bounds.max_degree
    d = bounds.min_degree
    lo = r * r / (2.0 * R * R * D * D)
    hi = 28.0 * D * D * R * R / (d * d * r * r)
    return lo - 1e-12 <= J <= hi + 1e-12


def limit_spectrum_to_csv(spectrum: LimitSpectrum) -> str:
    if spectrum.kind != "atomic":
        raise ValueError("CSV export covers atomic spectra")
    lines = ["M,i,theta,lambda,mass"]
    lines += [
        f"{a.level},{a.index},{a.theta!r},{a.location!r},{a.mass!r}"
        for a in spectrum.atoms
    ]
    lines.append(f"tail,,,,{spectrum.tail_mass!r}")
    return "\n".join(lines) + "\n"
