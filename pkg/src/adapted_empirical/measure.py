"""Finitely supported measures and path-measure trees.

Weights are kept as integer counts over a common denominator, so kernels
and marginals are exact rationals; float weights are only formed where a
transport solver needs them.

A :class:`PathMeasureTree` stores one array block per time level. Nodes of
level ``t`` are sorted lexicographically by their full prefix, so the
children of a node form a contiguous block of the next level and the
leaves below any node form a contiguous block of the last level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import Dims, PathSample, check_finite, format_float, state_norms
from .grid import GridSpec, project_sample, ring_indices

__all__ = [
    "DiscreteMeasure",
    "PathMeasureTree",
    "ModelMetadata",
    "empirical",
    "adapted_empirical",
    "marginal",
    "moment",
    "exp_moment",
    "ring_mass",
    "dump_tree",
    "load_tree",
    "read_measure_csv",
    "write_measure_csv",
]


def _lexsort_rows(rows: np.ndarray) -> np.ndarray:
    if rows.shape[1] == 0:
        return np.arange(rows.shape[0])
    return np.lexsort(rows.T[::-1])


def _group_starts(sorted_rows: np.ndarray) -> np.ndarray:
    """Boolean mask marking the first row of each run of equal rows."""
    n = sorted_rows.shape[0]
    starts = np.ones(n, dtype=bool)
    if n > 1 and sorted_rows.shape[1] > 0:
        starts[1:] = np.any(sorted_rows[1:] != sorted_rows[:-1], axis=1)
    elif n > 1:
        starts[1:] = False
    return starts


def _as_counts(counts) -> np.ndarray:
    c = np.asarray(counts)
    if c.dtype == object:
        if any(int(v) != v for v in c):
            raise ValueError("counts must be integers")
        c = c.astype(np.int64)
    elif not np.issubdtype(c.dtype, np.integer):
        if not np.all(np.floor(c) == c):
            raise ValueError("counts must be integers")
        c = c.astype(np.int64)
    return c.astype(np.int64)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Measure ``sum_i counts[i]/denom * delta_{atoms[i]}`` on R^d.

    Duplicate atoms are merged and atoms are stored in lexicographic order.
    """

    atoms: np.ndarray
    counts: np.ndarray
    denom: int = field(default=0)

    def __post_init__(self):
        atoms = check_finite(self.atoms)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        counts = _as_counts(self.counts)
        if atoms.shape[0] != counts.shape[0] or atoms.shape[0] == 0:
            raise ValueError("need one positive count per atom and at least one atom")
        if np.any(counts <= 0):
            raise ValueError("counts must be positive")
        total = int(counts.sum())
        denom = self.denom or total
        if denom != total:
            raise ValueError(f"counts sum to {total}, not to the denominator {denom}")
        order = _lexsort_rows(atoms)
        atoms, counts = atoms[order], counts[order]
        starts = _group_starts(atoms)
        if not starts.all():
            idx = np.flatnonzero(starts)
            counts = np.add.reduceat(counts, idx)
            atoms = atoms[idx]
        atoms.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "denom", denom)

    @classmethod
    def from_weights(cls, atoms, weights: Sequence) -> "DiscreteMeasure":
        """Build from rational-convertible weights (Fractions, ints, decimal strings, floats).

        Weights are normalised to sum to one exactly.
        """
        fr = [Fraction(w) for w in weights]
        total = sum(fr)
        if total <= 0:
            raise ValueError("weights must have positive total")
        fr = [w / total for w in fr]
        den = math.lcm(*(w.denominator for w in fr))
        counts = np.array([w.numerator * (den // w.denominator) for w in fr], dtype=object)
        if den >= 2**62:
            raise OverflowError("common denominator of the weights does not fit in 64 bits")
        return cls(atoms, counts.astype(np.int64), den)

    @classmethod
    def dirac(cls, point) -> "DiscreteMeasure":
        return cls(np.atleast_1d(np.asarray(point, dtype=np.float64))[None, :], [1], 1)

    @property
    def d(self) -> int:
        return self.atoms.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.denom

    def fractions(self) -> list[Fraction]:
        return [Fraction(int(c), self.denom) for c in self.counts]

    def __len__(self):
        return self.atoms.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            self.atoms.shape == other.atoms.shape
            and np.array_equal(self.atoms, other.atoms)
            and self.fractions() == other.fractions()
        )

    def __repr__(self):
        return f"DiscreteMeasure(n={len(self)}, d={self.d}, denom={self.denom})"


@dataclass(frozen=True)
class ModelMetadata:
    """Declared regularity constants of a model; never checked at runtime."""

    lipschitz_L: Optional[float] = None
    growth_r: Optional[float] = None
    moment_p: Optional[float] = None
    moment_q: Optional[float] = None
    exp_alpha: Optional[float] = None
    exp_gamma: Optional[float] = None


@dataclass(frozen=True, eq=False)
class PathMeasureTree:
    """Finitely supported law on R^{dT} encoded level by level.

    ``points[t]`` has shape ``(n_t, d)``, ``counts[t]`` the integer mass of
    each node (so the conditional weight of a node is its count over its
    parent's count), and ``parents[t]`` the index of each node's parent in
    level ``t-1`` (all zeros at level 0, whose parent is the root).
    """

    dims: Dims
    points: tuple
    counts: tuple
    parents: tuple
    total: int

    @classmethod
    def from_leaves(cls, paths, counts=None) -> "PathMeasureTree":
        """Tree of the measure ``sum_k counts[k] * delta_{paths[k]}`` (normalised).

        Identical paths are merged; nodes are grouped by bit-exact equality
        of prefixes.
        """
        arr = check_finite(paths)
        if arr.ndim != 3 or arr.shape[0] == 0:
            raise ValueError("paths must be a non-empty array of shape (n, T, d)")
        n, T, d = arr.shape
        dims = Dims(d, T)
        c = np.ones(n, dtype=np.int64) if counts is None else _as_counts(counts)
        if c.shape != (n,) or np.any(c <= 0):
            raise ValueError("need one positive integer count per path")
        flat = arr.reshape(n, T * d)
        order = _lexsort_rows(flat)
        flat, c = flat[order], c[order]
        pts, cnts, pars = [], [], []
        prev_ids = np.zeros(n, dtype=np.int64)
        for t in range(T):
            prefix = flat[:, : (t + 1) * d]
            starts = _group_starts(prefix)
            idx = np.flatnonzero(starts)
            ids = np.cumsum(starts) - 1
            pts.append(flat[idx, t * d : (t + 1) * d].copy())
            cnts.append(np.add.reduceat(c, idx).astype(np.int64))
            pars.append(prev_ids[idx].copy())
            prev_ids = ids
        for a in pts + cnts + pars:
            a.flags.writeable = False
        return cls(dims, tuple(pts), tuple(cnts), tuple(pars), int(c.sum()))

    @classmethod
    def from_weights(cls, paths, weights: Sequence) -> "PathMeasureTree":
        mu = DiscreteMeasure.from_weights(np.arange(len(weights), dtype=np.float64), weights)
        # atoms are 0..n-1 in order, so counts line up with the input paths
        return cls.from_leaves(paths, mu.counts)

    @property
    def T(self) -> int:
        return self.dims.T

    @property
    def d(self) -> int:
        return self.dims.d

    def level_size(self, t: int) -> int:
        return self.points[t].shape[0]

    def child_ptr(self, t: int) -> np.ndarray:
        """CSR offsets: children of node ``i`` at level ``t`` are ``ptr[i]:ptr[i+1]`` of level ``t+1``.

        ``t = -1`` addresses the root, whose children are all of level 0.
        """
        if t == -1:
            return np.array([0, self.level_size(0)], dtype=np.int64)
        n = self.level_size(t)
        sizes = np.bincount(self.parents[t + 1], minlength=n)
        return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

    def leaf_ptr(self, t: int) -> np.ndarray:
        """CSR offsets of the leaf block below every node of level ``t``."""
        ptr = np.arange(self.level_size(t) + 1, dtype=np.int64)
        for s in range(t, self.T - 1):
            ptr = self.child_ptr(s)[ptr]
        return ptr

    def prefixes(self, t: int) -> np.ndarray:
        """Full prefixes of level-``t`` nodes, shape ``(n_t, t+1, d)``."""
        out = np.empty((self.level_size(t), t + 1, self.d))
        idx = np.arange(self.level_size(t))
        for s in range(t, -1, -1):
            out[:, s, :] = self.points[s][idx]
            idx = self.parents[s][idx]
        return out

    def leaves(self) -> tuple[np.ndarray, np.ndarray]:
        """Leaf paths ``(n, T, d)`` and their integer counts."""
        return self.prefixes(self.T - 1), self.counts[self.T - 1]

    def leaf_weights(self) -> np.ndarray:
        return self.counts[self.T - 1] / self.total

    def conditional_weights(self, t: int) -> np.ndarray:
        parent_counts = self.counts[t - 1][self.parents[t]] if t > 0 else self.total
        return self.counts[t] / parent_counts

    def kernel(self, t: int, i: int) -> DiscreteMeasure:
        """Conditional law of the next state given node ``i`` of level ``t`` (``t=-1``: first marginal)."""
        ptr = self.child_ptr(t)
        lo, hi = ptr[i], ptr[i + 1]
        denom = self.total if t == -1 else int(self.counts[t][i])
        return DiscreteMeasure(self.points[t + 1][lo:hi], self.counts[t + 1][lo:hi], denom)

    def __eq__(self, other):
        if not isinstance(other, PathMeasureTree):
            return NotImplemented
        if self.dims != other.dims:
            return False
        # compare the normalised measures, so scaled counts are equal
        g = math.gcd(self.total, other.total)
        fa, fb = other.total // g, self.total // g
        for t in range(self.T):
            if self.points[t].shape != other.points[t].shape:
                return False
            if not (
                np.array_equal(self.points[t], other.points[t])
                and np.array_equal(self.parents[t], other.parents[t])
                and np.array_equal(self.counts[t] * fa, other.counts[t] * fb)
            ):
                return False
        return True

    def __repr__(self):
        sizes = [self.level_size(t) for t in range(self.T)]
        return f"PathMeasureTree(d={self.d}, T={self.T}, level_sizes={sizes}, total={self.total})"


def empirical(sample: PathSample) -> PathMeasureTree:
    """Empirical measure of the sample as a tree (duplicate paths merged)."""
    if not isinstance(sample, PathSample):
        sample = PathSample(np.asarray(sample))
    return PathMeasureTree.from_leaves(sample.paths)


def adapted_empirical(sample: PathSample, spec: GridSpec) -> PathMeasureTree:
    """Empirical measure of the grid-projected sample."""
    projected, _, _ = project_sample(spec, sample)
    return empirical(projected)


def _tree_or_measure_points(obj) -> tuple[np.ndarray, np.ndarray]:
    """(norms under the sum-norm, float weights)."""
    if isinstance(obj, PathMeasureTree):
        leaves, counts = obj.leaves()
        norms = state_norms(leaves).sum(axis=1)
        return norms, counts / obj.total
    if isinstance(obj, DiscreteMeasure):
        return state_norms(obj.atoms), obj.weights
    raise TypeError("expected a PathMeasureTree or a DiscreteMeasure")


def moment(obj, p: float) -> float:
    """p-th moment ``sum w ||x||^p`` (sum-norm for paths, Euclidean on R^d)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    norms, w = _tree_or_measure_points(obj)
    return float(np.dot(w, norms**p))


def exp_moment(obj, alpha: float, gamma: float) -> float:
    """``sum w exp(gamma * ||x||^alpha)``."""
    norms, w = _tree_or_measure_points(obj)
    return float(np.dot(w, np.exp(gamma * norms**alpha)))


def marginal(tree: PathMeasureTree, t: int) -> DiscreteMeasure:
    """Law of the state at time ``t`` (1-based, ``1 <= t <= T``)."""
    if not 1 <= t <= tree.T:
        raise ValueError(f"time index must be in 1..{tree.T}, got {t}")
    return DiscreteMeasure(tree.points[t - 1], tree.counts[t - 1], tree.total)


def ring_mass(tree: PathMeasureTree, t: int, j: int) -> Fraction:
    """Mass of length-``t`` prefixes whose sup-coordinate falls in ring ``j``."""
    if not 1 <= t <= tree.T:
        raise ValueError(f"prefix length must be in 1..{tree.T}, got {t}")
    if j < 0:
        raise ValueError("ring index must be nonnegative")
    rings = ring_indices(tree.prefixes(t - 1))
    return Fraction(int(tree.counts[t - 1][rings == j].sum()), tree.total)


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------


def dump_tree(tree: PathMeasureTree) -> str:
    """One leaf per line: ``count/N;x_1;...;x_T`` with each ``x_t`` comma separated."""
    leaves, counts = tree.leaves()
    lines = []
    for path, c in zip(leaves, counts):
        states = ";".join(",".join(format_float(v) for v in x) for x in path)
        lines.append(f"{int(c)}/{tree.total};{states}")
    return "\n".join(lines) + "\n"


def load_tree(text: str) -> PathMeasureTree:
    paths, weights = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(";")
        if len(parts) < 3:
            raise ValueError(f"line {lineno}: expected 'count/N;x_1;...;x_T'")
        try:
            weights.append(Fraction(parts[0]))
            paths.append([[float(v) for v in s.split(",")] for s in parts[1:]])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if not paths:
        raise ValueError("tree dump has no leaves")
    if len({tuple(len(x) for x in p) for p in paths}) != 1 or len({len(x) for x in paths[0]}) != 1:
        raise ValueError("all leaves must have the same T and d")
    return PathMeasureTree.from_weights(np.array(paths, dtype=np.float64), weights)


def write_measure_csv(mu: DiscreteMeasure, dest) -> None:
    header = ",".join([f"x_{k}" for k in range(mu.d)] + ["weight"])
    rows = [header]
    for atom, w in zip(mu.atoms, mu.fractions()):
        rows.append(",".join([format_float(v) for v in atom] + [f"{w.numerator}/{w.denominator}"]))
    text = "\n".join(rows) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)


def read_measure_csv(src) -> DiscreteMeasure:
    """Read ``x_0..x_{d-1},weight`` rows; weights may be decimals or ``a/b`` fractions."""
    text = src.read() if hasattr(src, "read") else open(src).read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError("measure CSV needs a header and at least one atom")
    header = [h.strip() for h in lines[0].split(",")]
    if header[-1] != "weight" or header[:-1] != [f"x_{k}" for k in range(len(header) - 1)]:
        raise ValueError("measure CSV header must be x_0,...,x_{d-1},weight")
    atoms, weights = [], []
    for ln in lines[1:]:
        cells = [c.strip() for c in ln.split(",")]
        if len(cells) != len(header):
            raise ValueError(f"row has {len(cells)} fields, expected {len(header)}")
        atoms.append([float(c) for c in cells[:-1]])
        weights.append(Fraction(cells[-1]))
    return DiscreteMeasure.from_weights(np.array(atoms, dtype=np.float64), weights)
