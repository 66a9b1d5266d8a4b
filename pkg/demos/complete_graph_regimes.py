"""Cover-or-die on the complete graph under polynomial killing.

A loop must visit all n vertices before its geometric lifetime runs out.
With c = n^(-d) the race tips at d = 1: the covering probability tends to
0 below it and to 1 - 1/d above it. The finite-size deficit decays like
1/ln n, so desk-scale numbers sit visibly under their limits.
"""
from loopcover.complete_graph import mc_complete_cover_prob


def main() -> None:
    n, reps = 2000, 20_000
    print(f"complete graph on {n} vertices, {reps} replicates per point")
    for d in (0.5, 1.5, 2.0, 4.0, 8.0):
        est = mc_complete_cover_prob(n, float(n) ** (-d), reps, seed=11)
        limit = max(0.0, 1.0 - 1.0 / d)
        print(f"  d = {d:3.1f}: estimate {est.point:.4f} +- {est.half_width:.4f}"
              f"   limit {limit:.4f}")


if __name__ == "__main__":
    main()
