"""
Deviation tails
===============

At a fixed N the adapted error fluctuates from sample to sample. The
empirical tail P(AW > x) should fall off roughly like exp(-c N x^2).
"""
import numpy as np

from adapted_empirical import Dims, ModelSpec, deviation_experiment

model = ModelSpec("gaussian_walk", Dims(1, 2))
rep = deviation_experiment(model, "uniform", 256, 300, seed=0, reference="proxy:8192")

print(f"N={rep.N}, {rep.trials} trials, mean error {rep.mean:.4f}")
for x, tail, nx2 in list(zip(rep.x, rep.tail, rep.n_x2))[::8]:
    if tail > 0:
        print(f"x={x:.3f}  tail={tail:.3f}  log tail={np.log(tail):7.3f}  N x^2={nx2:8.2f}")
print("Spearman(log tail, x^2) =", round(rep.spearman, 3))
