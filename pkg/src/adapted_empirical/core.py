"""Path primitives, norms, seeding and the PathSample CSV format.

Paths live in R^{dT} and are stored as arrays of shape ``(T, d)``; samples
of N paths as ``(N, T, d)``. The per-time norm on R^d is Euclidean
everywhere in the package, including transport costs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

__all__ = [
    "Dims",
    "PathSample",
    "sum_norm",
    "state_norms",
    "sup_coord",
    "check_finite",
    "derive_seed",
    "uniform_stream",
    "normal_stream",
    "read_sample_csv",
    "write_sample_csv",
    "format_float",
]


@dataclass(frozen=True)
class Dims:
    d: int
    T: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"state dimension d must be a positive integer, got {self.d}")
        if int(self.T) != self.T or self.T < 2:
            raise ValueError(f"number of time steps T must be >= 2, got {self.T}")

    @property
    def dT(self) -> int:
        return self.d * self.T


def check_finite(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains NaN or infinite values")
    return arr


def sum_norm(x) -> float:
    """Sum over time of the Euclidean norm of each state.

    ``x`` has shape ``(t, d)`` (a path or a path prefix). A 1-D array is read
    as ``t`` scalar states, i.e. ``d = 1``.
    """
    arr = check_finite(x)
    if arr.ndim == 1:
        return float(np.abs(arr).sum())
    return float(state_norms(arr).sum())


def state_norms(arr: np.ndarray) -> np.ndarray:
    """Euclidean norm along the last axis, rescaled so tiny or huge entries don't under/overflow."""
    scale = np.abs(arr).max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return (safe * np.linalg.norm(arr / safe, axis=-1, keepdims=True))[..., 0]


def sup_coord(x) -> float:
    """Largest absolute value over all scalar coordinates of ``x``."""
    arr = check_finite(x)
    if arr.size == 0:
        return 0.0
    return float(np.abs(arr).max())


@dataclass(frozen=True, eq=False)
class PathSample:
    """N sampled paths, array of shape ``(N, T, d)``, plus the seed that made them."""

    paths: np.ndarray
    seed: int = 0

    def __post_init__(self):
        arr = check_finite(self.paths)
        if arr.ndim != 3:
            raise ValueError(f"paths must have shape (N, T, d), got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("a sample needs at least one path")
        Dims(arr.shape[2], arr.shape[1])
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "paths", arr)

    @property
    def dims(self) -> Dims:
        return Dims(self.paths.shape[2], self.paths.shape[1])

    @property
    def n(self) -> int:
        return self.paths.shape[0]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, PathSample):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.paths, other.paths)


# ---------------------------------------------------------------------------
# Seeding.
#
# Generator: numpy PCG64 seeded with the 64-bit seed. Uniforms are
# (k + 0.5) / 2**53 with k drawn by ``Generator.integers(0, 2**53)``, so they
# lie strictly inside (0, 1). Standard normals are the inverse normal CDF
# (scipy.special.ndtri) applied to that uniform stream, in C order.
# ---------------------------------------------------------------------------

_TWO53 = 2**53


def derive_seed(seed: int, *keys: int | str) -> int:
    """Child seed for trial/stream ``keys`` of a parent seed (64-bit)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        if isinstance(k, str):
            entropy.append(int.from_bytes(k.encode(), "little") & 0xFFFFFFFFFFFFFFFF)
        else:
            entropy.append(int(k) & 0xFFFFFFFFFFFFFFFF)
    state = np.random.SeedSequence(entropy).generate_state(1, np.uint64)
    return int(state[0])


def uniform_stream(seed: int, shape) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    k = rng.integers(0, _TWO53, size=shape, dtype=np.int64)
    return (k.astype(np.float64) + 0.5) / _TWO53


def normal_stream(seed: int, shape) -> np.ndarray:
    from scipy.special import ndtri

    return ndtri(uniform_stream(seed, shape))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def format_float(v: float) -> str:
    # 17 significant digits round-trip every double exactly
    return format(float(v), ".17g")


def _header(dims: Dims) -> list[str]:
    return [f"t{t}_c{c}" for t in range(dims.T) for c in range(dims.d)]


def _parse_header(header: list[str]) -> Dims:
    pairs = []
    for name in header:
        try:
            t_part, c_part = name.strip().split("_")
            pairs.append((int(t_part[1:]), int(c_part[1:])))
        except ValueError as exc:
            raise ValueError(f"bad PathSample column name {name!r}") from exc
    T = max(p[0] for p in pairs) + 1
    d = max(p[1] for p in pairs) + 1
    dims = Dims(d, T)
    if [f"t{t}_c{c}" for t, c in pairs] != _header(dims):
        raise ValueError("PathSample columns must be time-major t0_c0,...,t{T-1}_c{d-1}")
    return dims


def write_sample_csv(sample: PathSample | np.ndarray, dest) -> None:
    """Write paths as CSV, one row per path, ``t{t}_c{c}`` columns in time-major order."""
    paths = sample.paths if isinstance(sample, PathSample) else check_finite(sample)
    dims = Dims(paths.shape[2], paths.shape[1])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_header(dims))
    for row in paths.reshape(paths.shape[0], -1):
        w.writerow([format_float(v) for v in row])
    _write_text(dest, buf.getvalue())


def read_sample_csv(src, seed: int = 0) -> PathSample:
    text = _read_text(src)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty PathSample CSV")
    dims = _parse_header(rows[0])
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValueError("PathSample CSV has no paths")
    arr = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    if arr.shape[1] != dims.dT:
        raise ValueError(f"expected {dims.dT} columns, got {arr.shape[1]}")
    return PathSample(arr.reshape(-1, dims.T, dims.d), seed=seed)


def _write_text(dest, text: str) -> None:
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        FsPath(dest).write_text(text)


def _read_text(src) -> str:
    if hasattr(src, "read"):
        return src.read()
    return FsPath(src).read_text()
