"""
The plain empirical measure does not converge
=============================================

With a continuous first state every sampled path sits in its own branch,
so each conditional law of the empirical measure is a Dirac mass. The
adapted distance to the true law then stays bounded away from zero. With
a grid the branches merge and the error goes down.

Here X_1 and the increment are uniform on (-1, 1). With a pinned start
(like the Gaussian walk at zero) this does not happen, because the
problem collapses to one conditional law.
"""
from adapted_empirical import Dims, ModelSpec, rate_experiment
from adapted_empirical.experiments import reference_tree

model = ModelSpec("uniform_cube", Dims(1, 2))
ns = [16, 64, 256]
ref = reference_tree(model, "proxy:4096", 0)

for grid in ("none", "uniform"):
    rep = rate_experiment(model, grid, ns, 4, 0, "proxy:4096", ref_tree=ref)
    print(f"{grid:>8}: " + "  ".join(f"{m:.3f}" for m in rep.means) + f"   slope {rep.slope:.3f}")

# Expected: the 'none' row decreases only slowly (slope near zero) while
# the uniform grid keeps improving.
