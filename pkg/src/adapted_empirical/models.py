"""Seeded samplers for the example processes and small exact trees.

Samplers draw all noise at once from :func:`core.normal_stream` /
:func:`core.uniform_stream` with shape ``(n, T-1, d)`` (or ``(n, T, d)``
for the uniform cube), so a run is fully determined by
``(model, n, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .core import Dims, PathSample, normal_stream, uniform_stream
from .measure import ModelMetadata, PathMeasureTree, load_tree

__all__ = [
    "ModelKind",
    "ModelSpec",
    "SDE_PRESETS",
    "TREE_PRESETS",
    "sample",
    "figure1_pair",
    "ground_truth_tree",
    "sample_tree",
    "random_tree",
]


class ModelKind(str, Enum):
    BLACK_SCHOLES = "black_scholes"
    SDE = "sde"
    GAUSSIAN_WALK = "gaussian_walk"
    AR1 = "ar1"
    UNIFORM_CUBE = "uniform_cube"
    CUSTOM_TREE = "custom_tree"


# drift, volatility; both Lipschitz in the state
SDE_PRESETS = {
    "linear": (lambda x: 0.1 * x, lambda x: 0.2 * x),
    "trig": (lambda x: np.sin(x), lambda x: 1.0 + 0.5 * np.cos(x)),
}

_DEFAULT_METADATA = {
    ModelKind.BLACK_SCHOLES: ModelMetadata(growth_r=1.0),
    ModelKind.SDE: ModelMetadata(growth_r=1.0),
    ModelKind.GAUSSIAN_WALK: ModelMetadata(lipschitz_L=1.0, growth_r=0.0, exp_alpha=2.0, exp_gamma=0.25),
    ModelKind.AR1: ModelMetadata(growth_r=0.0, exp_alpha=2.0, exp_gamma=0.25),
    ModelKind.UNIFORM_CUBE: ModelMetadata(lipschitz_L=0.0, growth_r=0.0),
    ModelKind.CUSTOM_TREE: ModelMetadata(),
}


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    dims: Dims
    dt: float = 0.01
    preset: str = "linear"
    ar: float = 0.5
    radius: float = 1.0
    x0: float = 1.0
    tree: Optional[str] = None
    metadata: Optional[ModelMetadata] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.metadata is None:
            object.__setattr__(self, "metadata", _DEFAULT_METADATA[self.kind])
        if self.kind in (ModelKind.BLACK_SCHOLES, ModelKind.SDE) and not self.dt >= 0:
            raise ValueError("time step dt must be nonnegative")
        if self.kind is ModelKind.SDE and self.preset not in SDE_PRESETS:
            raise ValueError(f"unknown SDE preset {self.preset!r}; choose from {sorted(SDE_PRESETS)}")
        if self.kind is ModelKind.AR1 and not np.isfinite(self.ar):
            raise ValueError("AR coefficient must be finite")
        if self.kind is ModelKind.UNIFORM_CUBE and not self.radius > 0:
            raise ValueError("cube radius must be positive")
        if self.kind is ModelKind.CUSTOM_TREE and self.tree is None:
            raise ValueError("custom_tree models need a preset name or a tree-dump path")

    @property
    def id(self) -> str:
        k = self.kind
        tag = {
            ModelKind.BLACK_SCHOLES: f"dt={self.dt}",
            ModelKind.SDE: f"{self.preset},dt={self.dt}",
            ModelKind.AR1: f"a={self.ar}",
            ModelKind.UNIFORM_CUBE: f"r={self.radius}",
            ModelKind.CUSTOM_TREE: f"{self.tree}",
        }.get(k, "")
        return f"{k.value}(d={self.dims.d},T={self.dims.T}{',' + tag if tag else ''})"

    def with_dims(self, d: int, T: int) -> "ModelSpec":
        return replace(self, dims=Dims(d, T))


def sample(model: ModelSpec, n: int, seed: int) -> PathSample:
    """Draw ``n`` i.i.d. paths of ``model``."""
    if int(n) != n or n < 1:
        raise ValueError(f"sample size must be a positive integer, got {n}")
    d, T = model.dims.d, model.dims.T
    kind = model.kind
    if kind is ModelKind.CUSTOM_TREE:
        return sample_tree(ground_truth_tree(model.tree), n, seed)
    if kind is ModelKind.UNIFORM_CUBE:
        u = uniform_stream(seed, (n, T, d))
        return PathSample(model.radius * (2.0 * u - 1.0), seed=seed)

    eps = normal_stream(seed, (n, T - 1, d))
    X = np.empty((n, T, d))
    if kind is ModelKind.BLACK_SCHOLES:
        X[:, 0] = 1.0
        h = np.sqrt(model.dt)
        for t in range(T - 1):
            X[:, t + 1] = X[:, t] + h * X[:, t] * eps[:, t]
    elif kind is ModelKind.SDE:
        drift, vol = SDE_PRESETS[model.preset]
        X[:, 0] = model.x0
        h = np.sqrt(model.dt)
        for t in range(T - 1):
            x = X[:, t]
            X[:, t + 1] = x + drift(x) * model.dt + vol(x) * h * eps[:, t]
    elif kind is ModelKind.GAUSSIAN_WALK:
        X[:, 0] = 0.0
        for t in range(T - 1):
            X[:, t + 1] = X[:, t] + eps[:, t]
    elif kind is ModelKind.AR1:
        X[:, 0] = 0.0
        for t in range(T - 1):
            X[:, t + 1] = model.ar * X[:, t] + eps[:, t]
    return PathSample(X, seed=seed)


def sample_tree(tree: PathMeasureTree, n: int, seed: int) -> PathSample:
    """I.i.d. draws of leaves of ``tree`` by inverse CDF on the leaf weights."""
    leaves, counts = tree.leaves()
    cdf = np.cumsum(counts)
    u = uniform_stream(seed, (n,))
    idx = np.searchsorted(cdf, u * tree.total, side="right")
    return PathSample(leaves[np.minimum(idx, len(counts) - 1)], seed=seed)


def figure1_pair(epsilon: float) -> tuple[PathMeasureTree, PathMeasureTree]:
    """Two-period pair that is epsilon-close in W but 1 + epsilon apart in AW.

    mu = (delta_(0,1) + delta_(0,-1))/2 and nu = (delta_(eps,1) + delta_(-eps,-1))/2.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    mu = PathMeasureTree.from_leaves(np.array([[[0.0], [1.0]], [[0.0], [-1.0]]]), [1, 1])
    nu = PathMeasureTree.from_leaves(np.array([[[epsilon], [1.0]], [[-epsilon], [-1.0]]]), [1, 1])
    return mu, nu


def _coin(T: int, heads: int, tails: int) -> PathMeasureTree:
    """i.i.d. +-1 steps with P(+1) = heads / (heads + tails)."""
    grid = np.array(np.meshgrid(*[[1.0, -1.0]] * T, indexing="ij")).reshape(T, -1).T
    n_heads = (grid > 0).sum(axis=1)
    counts = heads**n_heads * tails ** (T - n_heads)
    return PathMeasureTree.from_leaves(grid[:, :, None], counts)


def _markov2() -> PathMeasureTree:
    # two-state chain on {-1, 1}, start uniform, stay with prob 3/4, T = 3
    paths, counts = [], []
    for a in (-1.0, 1.0):
        for b in (-1.0, 1.0):
            for c in (-1.0, 1.0):
                w = 2 * (3 if a == b else 1) * (3 if b == c else 1)
                paths.append([[a], [b], [c]])
                counts.append(w)
    return PathMeasureTree.from_leaves(np.array(paths), counts)


TREE_PRESETS = {
    "coin2": lambda: _coin(2, 1, 1),
    "coin2_biased": lambda: _coin(2, 3, 1),
    "coin3": lambda: _coin(3, 1, 1),
    "markov2": _markov2,
}


def ground_truth_tree(spec) -> PathMeasureTree:
    """Exact finite tree from a preset name or a tree-dump file path."""
    if isinstance(spec, ModelSpec):
        spec = spec.tree
    if isinstance(spec, PathMeasureTree):
        return spec
    if spec in TREE_PRESETS:
        return TREE_PRESETS[spec]()
    path = Path(str(spec))
    if not path.exists():
        raise ValueError(f"unknown tree preset or missing file: {spec!r} (presets: {sorted(TREE_PRESETS)})")
    return load_tree(path.read_text())


def random_tree(rng: np.random.Generator, T: int, d: int, fan_out: int = 3, max_count: int = 4, decimals: int | None = 2) -> PathMeasureTree:
    """Random finite tree with 1..fan_out children per node and random integer weights."""
    paths = [[]]
    for _ in range(T):
        grown = []
        for p in paths:
            for _ in range(int(rng.integers(1, fan_out + 1))):
                x = rng.normal(size=d)
                grown.append(p + [x.round(decimals) if decimals is not None else x])
        paths = grown
    counts = rng.integers(1, max_count + 1, size=len(paths))
    return PathMeasureTree.from_leaves(np.array(paths), counts)
