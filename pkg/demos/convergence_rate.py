"""
Rate of convergence of the adapted empirical measure
====================================================

Gaussian random walk with two steps, started at zero. The reference law is
a large adapted empirical sample. For each N we average the adapted
distance over a few independent samples and fit a line in log-log scale.

Pass --full for the N-list and trial count used by the acceptance suite.
"""
import sys

from adapted_empirical import Dims, ModelSpec, rate_experiment
from adapted_empirical.experiments import plot_rate_svg, reference_tree

full = "--full" in sys.argv
ns = [2**k for k in range(6, 15, 2)] if full else [64, 256, 1024]
trials = 20 if full else 5
proxy = "proxy:131072" if full else "proxy:16384"

model = ModelSpec("gaussian_walk", Dims(1, 2))
ref = reference_tree(model, proxy, 0)

for grid in ("uniform", "nonuniform"):
    rep = rate_experiment(model, grid, ns, trials, 0, proxy, ref_tree=ref)
    print(f"{grid:>10}: " + "  ".join(f"N={n}: {m:.4f}" for n, m in zip(rep.ns, rep.means)))
    print(f"{'':>10}  slope {rep.slope:.3f} +- {rep.slope_stderr:.3f}  (theory {rep.theoretical_slope:.3f})")

try:
    plot_rate_svg(rep, "rate.svg")
    print("wrote rate.svg")
except ImportError:
    print("matplotlib not installed, skipping the plot")
