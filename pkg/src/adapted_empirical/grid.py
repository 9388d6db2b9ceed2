"""Uniform and dyadic-ring grids on R^{dT} and their midpoint projections.

Uniform grid: cubes of side 1/m with integer index z, ``z = floor(c*m)``
per coordinate, midpoint ``(z + 0.5)/m``.

Non-uniform grid: space is split into cubic rings by the sup-norm
(ring 0 is the unit cube [-1, 1]^k, ring j >= 1 has sup-norm in
(2^{j-1}, 2^j]) and ring j is tiled by cubes of side ``2^{j-1}/m``. Ring
boundaries fall on cube faces, so in every ring the per-coordinate index
ranges over ``-2m .. 2m-1``. The state at time t is quantized on the ring
grid of its prefix x_{1:t} (``prefix_rings=True``, the default), which
keeps the quantized prefix a function of the prefix alone. With
``prefix_rings=False`` every state uses the ring of the whole path; that
variant lets the future leak into the quantized past and is kept only for
comparison.

In both cases ``m = ceil(1/delta)`` and ``delta = N**(-1/(d*T))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Dims, PathSample, check_finite

__all__ = [
    "GridKind",
    "GridSpec",
    "CellId",
    "MAX_RING",
    "ring_index",
    "ring_indices",
    "project",
    "project_paths",
    "project_sample",
    "cell_diameter",
]

MAX_RING = 1023


class GridKind(str, Enum):
    UNIFORM = "uniform"
    NONUNIFORM = "nonuniform"


@dataclass(frozen=True)
class GridSpec:
    kind: GridKind
    dims: Dims
    N: int
    delta: float
    m: int
    prefix_rings: bool = True

    @classmethod
    def tuned(cls, kind, dims: Dims, N: int, prefix_rings: bool = True) -> "GridSpec":
        """Grid with ``delta = N**(-1/(dT))`` and ``m = ceil(1/delta)``."""
        if int(N) != N or N < 1:
            raise ValueError(f"N must be a positive integer, got {N}")
        delta = float(N) ** (-1.0 / dims.dT)
        return cls(GridKind(kind), dims, int(N), delta, math.ceil(1.0 / delta), prefix_rings)

    @classmethod
    def uniform(cls, dims: Dims, N: int) -> "GridSpec":
        return cls.tuned(GridKind.UNIFORM, dims, N)

    @classmethod
    def nonuniform(cls, dims: Dims, N: int, prefix_rings: bool = True) -> "GridSpec":
        return cls.tuned(GridKind.NONUNIFORM, dims, N, prefix_rings)

    def __post_init__(self):
        object.__setattr__(self, "kind", GridKind(self.kind))
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.m != math.ceil(1.0 / self.delta) or self.m < 1:
            raise ValueError("m must equal ceil(1/delta)")

    def side(self, ring: int = 0) -> float:
        """Edge length of a cube in ``ring`` (the ring is ignored for uniform grids)."""
        if self.kind is GridKind.UNIFORM:
            return 1.0 / self.m
        return math.ldexp(1.0 / self.m, ring - 1)


@dataclass(frozen=True)
class CellId:
    """Ring of the whole path, integer cube index per coordinate, and the ring used at each time."""

    ring: int
    index: tuple[int, ...]
    time_rings: tuple[int, ...] = ()


def _ring_from_sup(sup: np.ndarray) -> np.ndarray:
    # smallest j >= 0 with sup <= 2**j, computed exactly via frexp
    mant, expo = np.frexp(sup)
    j = np.where(mant == 0.5, expo - 1, expo)
    j = np.where(sup <= 1.0, 0, j)
    return j.astype(np.int64)


def ring_indices(paths) -> np.ndarray:
    """Ring index of every path in an array of shape ``(N, ...)``."""
    arr = check_finite(paths)
    sup = np.abs(arr.reshape(arr.shape[0], -1)).max(axis=1)
    j = _ring_from_sup(sup)
    if np.any(j > MAX_RING):
        raise ValueError("path too large for the ring grid (ring index above 1023)")
    return j


def ring_index(spec: GridSpec | None, x) -> int:
    """Ring of a single path or prefix: 0 if sup-coord <= 1, else ceil(log2(sup-coord)).

    A point with sup-coordinate exactly ``2**j`` belongs to ring ``j``.
    """
    if spec is not None and spec.kind is not GridKind.NONUNIFORM:
        raise ValueError("ring_index is defined for non-uniform grids")
    arr = check_finite(x)
    return int(ring_indices(arr.reshape(1, -1))[0])


def project_paths(spec: GridSpec, paths) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised projection of ``(N, T, d)`` paths.

    Returns ``(rings, z, midpoints, time_rings)``: ring of each whole path
    (zeros for the uniform grid), integer cube index of shape ``(N, T*d)``,
    projected paths with the input's shape, and the ring whose cube size
    was used for each time step, shape ``(N, T)``.
    """
    arr = check_finite(paths)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.shape[1:] != (spec.dims.T, spec.dims.d):
        raise ValueError(f"paths shape {arr.shape[1:]} does not match grid dims {spec.dims}")
    n, T, d = arr.shape
    m = spec.m
    if spec.kind is GridKind.UNIFORM:
        z = np.floor(arr * m)
        mid = (z + 0.5) / m
        rings = np.zeros(n, dtype=np.int64)
        time_rings = np.zeros((n, T), dtype=np.int64)
    else:
        state_sup = np.abs(arr).max(axis=2)
        if spec.prefix_rings:
            time_rings = _ring_from_sup(np.maximum.accumulate(state_sup, axis=1))
        else:
            time_rings = np.repeat(_ring_from_sup(state_sup.max(axis=1))[:, None], T, axis=1)
        if np.any(time_rings > MAX_RING):
            raise ValueError("path too large for the ring grid (ring index above 1023)")
        rings = time_rings[:, -1].copy()
        jt = time_rings[:, :, None]
        shift = 1 - jt
        z = np.floor(np.ldexp(arr * m, shift))
        # faces shared with a neighbouring ring go to the cube inside this ring
        z = np.minimum(z, 2 * m - 1)
        outer = jt >= 1
        inner_bound = np.ldexp(1.0, jt - 1)
        z = np.where(outer & (arr > inner_bound), np.maximum(z, m), z)
        z = np.where(outer & (arr < -inner_bound), np.minimum(z, -m - 1), z)
        mid = np.ldexp((z + 0.5) / m, -shift)
    return rings, z.astype(np.int64).reshape(n, T * d), mid, time_rings


def project(spec: GridSpec, x) -> tuple[CellId, np.ndarray]:
    """Map one path of shape ``(T, d)`` to the midpoint of its grid cube."""
    arr = check_finite(x)
    rings, z, mid, time_rings = project_paths(spec, arr.reshape(1, spec.dims.T, spec.dims.d))
    cell = CellId(int(rings[0]), tuple(int(v) for v in z[0]), tuple(int(v) for v in time_rings[0]))
    return cell, mid[0].reshape(arr.shape)


def project_sample(spec: GridSpec, sample: PathSample) -> tuple[PathSample, np.ndarray, np.ndarray]:
    if sample.dims != spec.dims:
        raise ValueError(f"sample dims {sample.dims} do not match grid dims {spec.dims}")
    rings, z, mid, _ = project_paths(spec, sample.paths)
    return PathSample(mid, seed=sample.seed), rings, z


def cell_diameter(spec: GridSpec, ring: int = 0, t: int | None = None) -> float:
    """Sum-norm diameter of a cube restricted to a time-``t`` prefix.

    Each of the ``t`` states spans a d-cube of side ``s``, whose Euclidean
    diameter is ``sqrt(d)*s``.
    """
    if t is None:
        t = spec.dims.T
    if t < 0 or t > spec.dims.T:
        raise ValueError(f"prefix length must be in 0..{spec.dims.T}")
    if ring < 0 or ring > MAX_RING:
        raise ValueError("ring index out of range")
    return t * math.sqrt(spec.dims.d) * spec.side(ring)
