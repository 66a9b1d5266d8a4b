"""Loop measures on finite weighted graphs and their covering phase transition.

The package computes the measure a killed random walk induces on discrete
loops, samples from it exactly, and compares finite-size covering
probabilities against closed-form limits for cycles, tori, tree balls, and
complete graphs.
"""
from ._version import __version__
from .complete_graph import (
    ModifiedGeometric,
    beta_regime_estimate,
    eta_pmf,
    gumbel_cdf,
    gumbel_exp_moment,
    mc_complete_cover_prob,
    sample_cover_time,
    sample_eta,
)
from .errors import InfeasibleError
from .graphs import (
    DegreeWeightBounds,
    StationaryDistribution,
    TransitionMatrix,
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
from .limits import (
    JEstimate,
    LimitSpectrum,
    PhaseParameters,
    complete_beta_asymptotic,
    complete_predicted_limit,
    complete_trace,
    predicted_cover_limit,
    predicted_soup_covering_law,
    torus_eigenvalues,
    torus_limit_J,
    tree_ball_J,
    tree_ball_limit_spectrum,
    tree_char_poly,
)
from .loops import (
    CoverEstimate,
    CoverMassResult,
    KillingRate,
    Loop,
    LoopLengthDistribution,
    LoopSoupSample,
    choose_truncation,
    conditional_cover_curve,
    covers,
    exact_cover_mass_dp,
    loop_length_distribution,
    mc_cover_prob,
    sample_loop,
    sample_loop_soup,
    total_mass,
)
from .spectral import (
    EmpiricalSpectralDistribution,
    Spectrum,
    eigenvalues,
    esd,
    interlacing_bracket_check,
    kolmogorov_distance,
    log_det_functional,
    odd_loop_bound,
    partial_loop_mass_rate,
    poincare_bound,
    return_probability_bound_check,
    spectrum_cover_functional,
    stationary_from_transition,
    trace_power,
    trace_tail_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
