"""Spectral certificates on a chorded cycle: congestion in, eigenvalue bounds out.

Both bounds are certificates, not heuristics: the library raises if the
actual spectrum ever beats one.
"""
from loopcover.graphs import (
    build_cycle_with_chords,
    stationary_distribution,
    transition_matrix,
)
from loopcover.spectral import (
    default_odd_loop_system,
    default_path_system,
    eigenvalues,
    odd_loop_bound,
    poincare_bound,
)


def main() -> None:
    g = build_cycle_with_chords(8)
    pi = stationary_distribution(g)
    spectrum = eigenvalues(transition_matrix(g), pi)
    kappa, upper = poincare_bound(g, pi, default_path_system(g))
    tau, lower = odd_loop_bound(g, pi, default_odd_loop_system(g))
    print(f"chorded cycle on {g.vertex_count} vertices")
    print(f"  path congestion kappa = {kappa:.3f}"
          f" -> second largest eigenvalue <= {upper:.4f}"
          f" (actual {spectrum.second_largest:.4f})")
    print(f"  odd-walk congestion tau = {tau:.3f}"
          f" -> smallest eigenvalue >= {lower:.4f}"
          f" (actual {spectrum.smallest:.4f})")


if __name__ == "__main__":
    main()
