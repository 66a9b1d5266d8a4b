"""Release gates, one test per criterion.

Every test prints a verdict line carrying its measured numbers; conftest
repeats the pass/fail outcomes in the terminal summary. Gates the current
finite sizes cannot meet fail honestly with the measurement in the assertion
message instead of being loosened.
"""
import math

import numpy as np
from scipy.stats import chisquare, poisson

from loopcover.complete_graph import (
    beta_regime_estimate,
    laplace_tail_bound_check,
    mc_complete_cover_prob,
    normalized_cover_array,
)
from loopcover.graphs import (
    WeightedGraph,
    build_complete,
    build_cycle,
    build_cycle_with_chords,
    build_torus,
    build_tree_ball,
    stationary_distribution,
    structural_report,
    transition_matrix,
)
from loopcover.limits import (
    complete_trace,
    torus_limit_J,
    tree_ball_J,
    tree_ball_j_from_atoms,
    tree_ball_limit_spectrum,
)
from loopcover.loops import (
    KillingRate,
    covers,
    exact_cover_mass_dp,
    sample_loop_soup,
)
from loopcover.spectral import (
    default_odd_loop_system,
    default_path_system,
    eigenvalues,
    esd,
    interlacing_bracket_check,
    kolmogorov_distance,
    log_det_functional,
    odd_loop_bound,
    partial_loop_mass_rate,
    poincare_bound,
    return_probability_bound_check,
    trace_power,
    trace_tail_check,
)
from oracles import enumerate_loop_masses, random_connected_graph

# shared with test_complete_graph so the big simulation is computed once
# per pytest process (normalized_cover_array caches on (n, reps, seed))
BIG_N, BIG_REPS, BIG_SEED = 100_000, 100_000, 71
MID_N = 10_000


def _verdict(num: int, label: str, ok: bool, detail: str) -> None:
    print(f"criterion {num:02d} {label}: {'PASS' if ok else 'FAIL'} ({detail})")


# ---------------------------------------------------------------------------
# 1: per-length covering masses against literal walk enumeration


def _small_corpus():
    """(name, graph, vertex-transitive) with m <= 8: named families + 20 random."""
    out = []
    for n in range(3, 9):
        out.append((f"cycle-{n}", build_cycle(n), True))
        out.append((f"complete-{n}", build_complete(n), True))
    for d, r in ((2, 1), (2, 2), (2, 3), (3, 1), (4, 1), (5, 1), (6, 1), (7, 1)):
        out.append((f"tree-ball-{d}-{r}", build_tree_ball(d, r), False))
    rng = np.random.default_rng(414)
    for i in range(20):
        m = 3 + int(rng.integers(0, 6))
        g = random_connected_graph(rng, m, weighted=bool(i % 2))
        out.append((f"random-{i}-m{m}", g, False))
    return out


def test_criterion_01_exact_oracle_equivalence():
    c = KillingRate.fixed(1.0)
    x = c.survival
    ks = np.arange(2, 11, dtype=np.float64)
    damp = x**ks / ks
    worst, worst_case, checked = 0.0, "", 0
    for name, g, transitive in _small_corpus():
        raw_w, raw_c = enumerate_loop_masses(g, 10, transitive=transitive)
        res = exact_cover_mass_dp(g, c, K=10, dp_k_max=10)
        for label, dp_side, raw in (("covered", res.per_k_covered, raw_c),
                                    ("total", res.per_k_total, raw_w)):
            gap = float(np.abs(dp_side - raw[2:] * damp).max())
            if gap > worst:
                worst, worst_case = gap, f"{name}/{label}"
        checked += 1
    ok = worst <= 1e-12
    _verdict(1, "exact-oracle equivalence", ok,
             f"{checked} graphs, max |dp - enumeration| = {worst:.2e} "
             f"at {worst_case}, required <= 1e-12")
    assert checked == 40
    assert ok, f"per-length mass gap {worst:.3e} at {worst_case} exceeds 1e-12"


# ---------------------------------------------------------------------------
# 2: closed-form complete-graph traces against both numeric routes


def test_criterion_02_trace_identities():
    worst = 0.0
    for n in range(2, 9):
        Q = transition_matrix(build_complete(n))
        pi = stationary_distribution(build_complete(n))
        power = np.eye(n)
        for k in range(1, 21):
            power = power @ Q.entries
            closed = complete_trace(n, k)
            worst = max(worst,
                        abs(trace_power(Q, k, pi) - closed),
                        abs(float(np.trace(power)) - closed))
    ok = worst <= 1e-9
    _verdict(2, "trace identities", ok,
             f"n <= 8, k <= 20, max |route gap| = {worst:.2e}, required <= 1e-9")
    assert ok, f"trace route gap {worst:.3e} exceeds 1e-9"


# ---------------------------------------------------------------------------
# 3: one-dimensional limit functional, two analytic routes + finite proxy


def test_criterion_03_torus_limit_and_cycle_proxy():
    ln2 = math.log(2.0)
    quad_gap = abs(float(torus_limit_J(1, method="quadrature")) - ln2)
    series_gap = abs(float(torus_limit_J(1, method="series")) - ln2)
    rates = {}
    for n in (64, 128, 256, 512):
        # truncate at the diffusive scale n^2, past which the per-vertex
        # short-loop mass has saturated
        rates[n] = partial_loop_mass_rate(transition_matrix(build_cycle(n)), n * n)
    proxy_gap = abs(rates[512] - ln2)
    ok = quad_gap <= 1e-6 and series_gap <= 1e-6 and proxy_gap <= 0.02
    _verdict(3, "torus limit functional", ok,
             f"quadrature gap {quad_gap:.1e}, series gap {series_gap:.1e} "
             f"(required <= 1e-6); cycle proxy gap at n=512 = {proxy_gap:.5f} "
             f"(required <= 0.02)")
    assert quad_gap <= 1e-6, f"quadrature route off by {quad_gap:.2e}"
    assert series_gap <= 1e-6, f"series route off by {series_gap:.2e}"
    assert proxy_gap <= 0.02, (
        f"cycle rate at n=512 is {rates[512]:.6f}, gap {proxy_gap:.5f}; "
        f"full ladder {[round(r, 6) for r in rates.values()]}"
    )


# ---------------------------------------------------------------------------
# 4: tree limit functional, closed form vs atomic reconstruction


def test_criterion_04_tree_limit_reconstruction():
    closed = tree_ball_J(3)
    target = 0.5 * math.log(1.5)
    spectrum = tree_ball_limit_spectrum(3, 60)
    core, lo, hi = tree_ball_j_from_atoms(spectrum)
    mass_gap = abs(float(spectrum.masses.sum()) + spectrum.tail_mass - 1.0)
    recon_gap = abs(core - target)
    ok = (abs(closed - target) <= 1e-15 and recon_gap <= 1e-6
          and mass_gap <= 1e-12)
    _verdict(4, "tree limit reconstruction", ok,
             f"closed form gap {abs(closed - target):.1e}; reconstruction gap "
             f"{recon_gap:.2e} (required <= 1e-6, bracket width {hi - lo:.1e}); "
             f"mass defect {mass_gap:.2e} (required <= 1e-12)")
    assert abs(closed - target) <= 1e-15
    assert recon_gap <= 1e-6, f"atomic reconstruction {core!r} vs {target!r}"
    assert mass_gap <= 1e-12, f"atom+tail mass off by {mass_gap:.3e}"


# ---------------------------------------------------------------------------
# 5: covering probability of the cycle family at its critical decay rate


def test_criterion_05_cycle_phase_point():
    probs = {}
    for n in (8, 10, 12):
        c = KillingRate.exp_rate(math.log(2.0), n)
        g = build_cycle(n)
        # headline masses are closed-form; skip the per-length DP entirely
        probs[n] = exact_cover_mass_dp(g, c, K=2, dp_k_max=2).cover_probability
    monotone = probs[8] < probs[10] < probs[12] < 0.5
    gap = 0.5 - probs[12]
    ok = monotone and gap < 0.1
    _verdict(5, "cycle phase point", ok,
             f"P = {probs[8]:.6f}, {probs[10]:.6f}, {probs[12]:.6f}; "
             f"gap to 0.5 at n=12 = {gap:.4f}, required < 0.1")
    assert monotone, f"approach to 0.5 is not monotone: {probs}"
    assert gap < 0.1, (
        f"measured gap {gap:.4f} (P_12 = {probs[12]:.6f}) vs required < 0.1; "
        f"the gap ladder is 0.1994 (n=8), 0.1808 (n=10), 0.1613 (n=12), "
        f"shrinking about 0.02 per size step, so a gap under 0.1 needs n "
        f"near 24 while the subset state space caps exact evaluation at "
        f"n = 14; left failing rather than loosened"
    )


# ---------------------------------------------------------------------------
# 6: Poisson law of the covering-loop count inside sampled soups


def test_criterion_06_soup_covering_law():
    g = build_cycle(4)
    c = KillingRate.fixed(0.5)
    alpha = 16.0
    mean = alpha * exact_cover_mass_dp(g, c).covered_mass
    soups = 10_000
    counts = np.zeros(soups, dtype=np.int64)
    for s in range(soups):
        soup = sample_loop_soup(g, c, alpha, seed=7_000_000 + s)
        counts[s] = sum(covers(loop, g) for loop in soup.loops)
    # bins need expected >= 5, including the lumped tail
    k_hi = 0
    while (soups * poisson.pmf(k_hi + 1, mean) >= 5.0
           and soups * poisson.sf(k_hi + 1, mean) >= 5.0):
        k_hi += 1
    observed = np.array([(counts == k).sum() for k in range(k_hi + 1)]
                        + [(counts > k_hi).sum()], dtype=np.float64)
    pmf = poisson.pmf(np.arange(k_hi + 1), mean)
    expected = soups * np.append(pmf, 1.0 - pmf.sum())
    stat, p_value = chisquare(observed, expected)
    ok = p_value > 0.01
    _verdict(6, "soup covering law", ok,
             f"mean {mean:.4f}, bins 0..{k_hi}+tail, observed {observed.astype(int).tolist()}, "
             f"chi2 = {stat:.2f}, p = {p_value:.4f}, required > 0.01")
    assert ok, f"chi-square p = {p_value:.5f} against mean {mean:.5f}"


# ---------------------------------------------------------------------------
# 7: cover-vs-lifetime probability regimes at polynomial killing


def test_criterion_07_complete_graph_regimes():
    n, reps = 2000, 100_000
    point = {}
    for d in (0.5, 2.0, 4.0):
        point[d] = mc_complete_cover_prob(n, float(n) ** (-d), reps, seed=2026).point
    gap2 = abs(point[2.0] - 0.5)
    gap4 = abs(point[4.0] - 0.75)
    ok = point[0.5] < 0.02 and gap2 <= 0.03 and gap4 <= 0.03
    _verdict(7, "complete-graph regimes", ok,
             f"d=0.5: {point[0.5]:.4f} (required < 0.02); d=2: {point[2.0]:.4f} "
             f"gap {gap2:.4f}, d=4: {point[4.0]:.4f} gap {gap4:.4f} "
             f"(required <= 0.03)")
    assert point[0.5] < 0.02, f"d=0.5 regime: {point[0.5]:.4f}"
    assert gap2 <= 0.03 and gap4 <= 0.03, (
        f"measured {point[2.0]:.4f} vs 0.5 (gap {gap2:.4f}) and {point[4.0]:.4f} "
        f"vs 0.75 (gap {gap4:.4f}), both over the 0.03 tolerance; the deficit "
        f"decays only logarithmically in n (still about 0.12 for d=2 at "
        f"n = 10^5), so no simulatable n reaches 0.03; left failing rather "
        f"than loosened"
    )


# ---------------------------------------------------------------------------
# 8: Gumbel moment and distribution-function point of the cover time


def test_criterion_08_gumbel_moment_and_cdf_point():
    result = beta_regime_estimate(1.0, BIG_N, BIG_REPS, BIG_SEED)
    moment_gap = abs(result.estimate - 1.0)
    normalized = normalized_cover_array(MID_N, BIG_REPS, BIG_SEED)
    freq = float((normalized <= 0.0).mean())
    cdf_gap = abs(freq - math.exp(-1.0))
    ok = moment_gap <= 0.05 and cdf_gap <= 0.01
    _verdict(8, "gumbel moment and cdf point", ok,
             f"E[exp(-xi)] = {result.estimate:.4f} (gap {moment_gap:.4f}, "
             f"required <= 0.05); P[xi <= 0] = {freq:.4f} vs 1/e "
             f"(gap {cdf_gap:.4f}, required <= 0.01)")
    assert moment_gap <= 0.05, f"moment estimate {result.estimate:.5f}"
    assert cdf_gap <= 0.01, f"cdf point {freq:.5f} vs {math.exp(-1.0):.5f}"


# ---------------------------------------------------------------------------
# 9: every certified bound on a 100-graph corpus, zero violations


def _bound_corpus():
    graphs = []
    for n in range(3, 13):
        graphs.append(build_complete(n))
        graphs.append(build_cycle(n))
    for d, r in ((2, 1), (2, 2), (2, 3), (2, 4), (2, 5), (3, 1), (3, 2),
                 (4, 1), (5, 1), (6, 1), (7, 1)):
        graphs.append(build_tree_ball(d, r))
    for n in (2, 3, 4):
        graphs.append(build_cycle_with_chords(n))
    graphs.append(build_torus(2, 3))
    rng = np.random.default_rng(909)
    while len(graphs) < 100:
        m = 3 + int(rng.integers(0, 10))
        graphs.append(random_connected_graph(rng, m, weighted=bool(rng.integers(0, 2))))
    return graphs


def test_criterion_09_bound_suite():
    graphs = _bound_corpus()
    assert len(graphs) == 100 and max(g.vertex_count for g in graphs) <= 12
    rng = np.random.default_rng(910)
    violations: list[str] = []
    ran = dict.fromkeys(
        ("poincare", "odd-loop", "return", "trace-tail", "laplace", "interlacing"), 0
    )
    for i, g in enumerate(graphs):
        pi = stationary_distribution(g)
        Q = transition_matrix(g)
        info, _, bipartite = structural_report(g)
        unit = all(w == 1.0 for _, _, w in g.edges)
        try:
            poincare_bound(g, pi, default_path_system(g))
            ran["poincare"] += 1
        except ValueError as e:
            violations.append(f"graph {i}: poincare: {e}")
        if not bipartite:
            try:
                odd_loop_bound(g, pi, default_odd_loop_system(g))
                ran["odd-loop"] += 1
            except ValueError as e:
                violations.append(f"graph {i}: odd-loop: {e}")
        for k in (2, 9, 25):
            try:
                report = return_probability_bound_check(g, k)
                ran["return"] += 1
                if report.flagged:
                    violations.append(f"graph {i}: return flagged at k={k}")
            except ValueError as e:
                violations.append(f"graph {i}: return k={k}: {e}")
        if unit and not bipartite and info.max_degree == info.min_degree:
            try:
                trace_tail_check(g, 2.5)
                ran["trace-tail"] += 1
            except ValueError as e:
                violations.append(f"graph {i}: trace-tail: {e}")
        subset = rng.choice(g.vertex_count,
                            size=1 + int(rng.integers(0, g.vertex_count - 1)),
                            replace=False)
        for rho in (0.3, 0.7):
            try:
                interlacing_bracket_check(Q, subset, rho, pi)
                ran["interlacing"] += 1
            except ValueError as e:
                violations.append(f"graph {i}: interlacing rho={rho}: {e}")
    # the cover-time tail bound runs once per complete-family size
    for j, n in enumerate(range(3, 13)):
        try:
            laplace_tail_bound_check(n, 0.5, -2.0, 20_000, seed=5150 + j)
            ran["laplace"] += 1
        except ArithmeticError as e:
            violations.append(f"laplace n={n}: {e}")
    ok = not violations
    coverage = ", ".join(f"{k}={v}" for k, v in ran.items())
    _verdict(9, "bound suite", ok,
             f"{len(violations)} violations on 100 graphs; runs: {coverage}")
    assert ran["poincare"] == 100 and ran["interlacing"] == 200
    assert ran["return"] == 300 and ran["laplace"] == 10
    assert ran["trace-tail"] >= 16 and ran["odd-loop"] >= 40
    assert ok, "violations:\n" + "\n".join(violations)


# ---------------------------------------------------------------------------
# 10: chord deletion moves the log-det functional less than its budget


def test_criterion_10_stability():
    ks_ladder = []
    worst_ratio, worst_at = 0.0, ""
    for n in (16, 32, 64):
        g_full = build_cycle_with_chords(n)
        m = g_full.vertex_count
        removed = math.isqrt(m - 1) + 1  # ceil(sqrt m), m never square here
        picks = [(t * n) // removed for t in range(removed)]
        dropped = {(3 * i, 3 * i + 2) for i in picks}
        kept = tuple(e for e in g_full.edges if (e[0], e[1]) not in dropped)
        g_pert = WeightedGraph(m, kept)
        assert g_full.edge_count - g_pert.edge_count == removed
        Q_full, Q_pert = transition_matrix(g_full), transition_matrix(g_pert)
        pi_full, pi_pert = stationary_distribution(g_full), stationary_distribution(g_pert)
        ks_ladder.append(kolmogorov_distance(
            esd(eigenvalues(Q_full, pi_full)), esd(eigenvalues(Q_pert, pi_pert))
        ))
        for rho in (0.3, 0.6, 0.9):
            delta = abs(log_det_functional(Q_pert, rho, pi_pert)
                        - log_det_functional(Q_full, rho, pi_full))
            budget = removed / m * max(abs(math.log1p(-rho)), math.log1p(rho))
            if delta / budget > worst_ratio:
                worst_ratio, worst_at = delta / budget, f"n={n}, rho={rho}"
    decreasing = ks_ladder[0] > ks_ladder[1] > ks_ladder[2]
    ok = worst_ratio <= 1.0 and decreasing
    _verdict(10, "stability under chord deletion", ok,
             f"worst |delta|/budget = {worst_ratio:.3f} at {worst_at} "
             f"(required <= 1); KS ladder {[round(v, 4) for v in ks_ladder]} "
             f"(required decreasing)")
    assert worst_ratio <= 1.0, f"log-det gap exceeds budget at {worst_at}"
    assert decreasing, f"KS distances not decreasing: {ks_ladder}"
