"""
Rings of the prefix versus rings of the whole path
==================================================

The non-uniform grid uses coarser cubes far from the origin. If the ring is
picked from the whole path, a large late state changes how the early states
are rounded, and paths that agree up to time t can be rounded differently.
The resulting measure is no longer adapted and stops converging. Choosing
the ring from the prefix up to time t avoids this.
"""
from adapted_empirical import Dims, GridSpec, ModelSpec, adapted_empirical, aw_nested, sample
from adapted_empirical.experiments import reference_tree

model = ModelSpec("gaussian_walk", Dims(1, 2))
ref = reference_tree(model, "proxy:16384", 0)

for N in (64, 256, 1024):
    s = sample(model, N, seed=N)
    row = []
    for prefix in (True, False):
        g = GridSpec.nonuniform(model.dims, N, prefix_rings=prefix)
        row.append(aw_nested(adapted_empirical(s, g), ref)[0])
    print(f"N={N:5d}  prefix rings {row[0]:.4f}   whole-path rings {row[1]:.4f}")
