"""Monte Carlo harness for convergence-rate and concentration experiments.

Each trial draws a fresh sample, builds the (adapted) empirical tree with
a grid tuned to the sample size, and measures its adapted Wasserstein
distance to a reference tree. The reference is either an exact finite
tree (``truth``) or an adapted empirical tree of an independent, much
larger sample (``proxy:M``) standing in for the continuous law.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .core import derive_seed, format_float
from .grid import GridKind, GridSpec
from .measure import PathMeasureTree, adapted_empirical, empirical
from .models import ModelKind, ModelSpec, figure1_pair, ground_truth_tree, sample
from .nested import BudgetExceeded, aw_nested, w_flat

__all__ = [
    "NODE_PAIR_BUDGET",
    "GroundTruth",
    "LargeSampleProxy",
    "parse_reference",
    "dimension_correction",
    "theoretical_slope",
    "fit_loglog",
    "RateRow",
    "RateReport",
    "DeviationReport",
    "GapReport",
    "build_estimator",
    "reference_tree",
    "rate_experiment",
    "deviation_experiment",
    "gap_demo",
    "write_rate_csv",
    "write_trials_csv",
    "write_tail_csv",
    "plot_rate_svg",
]

NODE_PAIR_BUDGET = 20_000_000
AUDIT_EVERY = 20
AUDIT_MAX_PAIRS = 4_000_000


@dataclass(frozen=True)
class GroundTruth:
    def __str__(self):
        return "truth"


@dataclass(frozen=True)
class LargeSampleProxy:
    M: int

    def __str__(self):
        return f"proxy:{self.M}"


def parse_reference(text) -> GroundTruth | LargeSampleProxy:
    if isinstance(text, (GroundTruth, LargeSampleProxy)):
        return text
    text = str(text).strip()
    if text == "truth":
        return GroundTruth()
    if text.startswith("proxy:"):
        M = int(text.split(":", 1)[1])
        if M < 1:
            raise ValueError("proxy sample size must be positive")
        return LargeSampleProxy(M)
    raise ValueError(f"reference must be 'truth' or 'proxy:M', got {text!r}")


def dimension_correction(d: int) -> int:
    return d + 1 if d in (1, 2) else d


def theoretical_slope(d: int, T: int) -> float:
    return -1.0 / (dimension_correction(d) * T)


def fit_loglog(ns: Sequence[int], errors: Sequence[float]) -> tuple[float, float]:
    """Unweighted least-squares slope of log(error) on log(N) and its standard error."""
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(errors, dtype=np.float64))
    if len(x) < 2:
        return float("nan"), float("nan")
    fit = stats.linregress(x, y)
    stderr = float(fit.stderr) if len(x) > 2 else float("nan")
    return float(fit.slope), stderr


def _grid_kind(grid) -> GridKind | None:
    if grid is None or str(grid) == "none":
        return None
    return GridKind(grid)


def build_estimator(paths_sample, grid, N: int | None = None) -> PathMeasureTree:
    """Empirical tree (``grid='none'``) or adapted empirical tree with a grid tuned to ``N``."""
    kind = _grid_kind(grid)
    if kind is None:
        return empirical(paths_sample)
    spec = GridSpec.tuned(kind, paths_sample.dims, N or paths_sample.n)
    return adapted_empirical(paths_sample, spec)


def reference_tree(model: ModelSpec, reference, seed: int) -> PathMeasureTree:
    ref = parse_reference(reference)
    if isinstance(ref, GroundTruth):
        if model.kind is not ModelKind.CUSTOM_TREE:
            raise ValueError("reference 'truth' needs a finite-tree model (custom_tree)")
        return ground_truth_tree(model.tree)
    proxy = sample(model, ref.M, derive_seed(seed, "proxy"))
    return adapted_empirical(proxy, GridSpec.uniform(model.dims, ref.M))


@dataclass
class RateRow:
    N: int
    trials: int
    mean: float
    std: float
    errors: tuple
    seeds: tuple


@dataclass
class RateReport:
    model: str
    grid: str
    reference: str
    rows: list
    slope: float
    slope_stderr: float
    theoretical_slope: float
    classical_slope: float
    audited: int = 0
    audit_skipped: int = 0
    audit_violations: int = 0

    @property
    def ns(self) -> list:
        return [r.N for r in self.rows]

    @property
    def means(self) -> list:
        return [r.mean for r in self.rows]


@dataclass
class DeviationReport:
    model: str
    grid: str
    reference: str
    N: int
    trials: int
    errors: np.ndarray
    mean: float
    x: np.ndarray
    tail: np.ndarray
    spearman: float
    theoretical_slope: float
    notes: tuple = field(default=())
    seeds: tuple = field(default=())

    @property
    def log_tail(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.tail)

    @property
    def n_x2(self) -> np.ndarray:
        return self.N * self.x**2


@dataclass
class GapReport:
    epsilon: float
    w: float
    aw: float

    @property
    def gap(self) -> float:
        return self.aw - self.w

    def __str__(self):
        return f"epsilon={self.epsilon:g}  W={self.w:.12g}  AW={self.aw:.12g}  gap={self.gap:.12g}"


# ---------------------------------------------------------------------------
# Trial execution. The reference tree is shipped once per worker.
# ---------------------------------------------------------------------------

_REF: PathMeasureTree | None = None


def _init_worker(ref):
    global _REF
    _REF = ref


def _run_trial(task):
    model, grid, N, trial_seed, audit, max_pairs = task
    est = build_estimator(sample(model, N, trial_seed), grid, N)
    err, _ = aw_nested(est, _REF, 1.0, max_pairs=max_pairs)
    audit_result = None
    if audit:
        pairs = est.level_size(est.T - 1) * _REF.level_size(_REF.T - 1)
        if pairs <= AUDIT_MAX_PAIRS:
            audit_result = w_flat(est, _REF, 1.0)
        else:
            audit_result = "skipped"
    return err, audit_result


def _map_trials(tasks, ref, workers: int):
    if workers <= 1:
        _init_worker(ref)
        return [_run_trial(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ref,)) as pool:
        # map preserves task order, so aggregation does not depend on scheduling
        return list(pool.map(_run_trial, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def rate_experiment(
    model: ModelSpec,
    grid,
    n_list: Sequence[int],
    trials: int,
    seed: int,
    reference="proxy:131072",
    *,
    workers: int = 1,
    max_pairs: int = NODE_PAIR_BUDGET,
    ref_tree: PathMeasureTree | None = None,
) -> RateReport:
    """Mean adapted Wasserstein error per sample size and the fitted log-log slope."""
    ns = [int(n) for n in n_list]
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
        raise ValueError("N-list must be strictly increasing positive integers")
    if trials < 1:
        raise ValueError("need at least one trial")
    ref = parse_reference(reference)
    if isinstance(ref, LargeSampleProxy) and ref.M < 8 * max(ns):
        raise ValueError(f"proxy size M={ref.M} must be at least 8 * max(N) = {8 * max(ns)}")
    if ref_tree is None:
        ref_tree = reference_tree(model, ref, seed)
    kind = _grid_kind(grid)

    tasks, index = [], []
    for N in ns:
        for k in range(trials):
            s = derive_seed(seed, N, k)
            tasks.append((model, None if kind is None else kind.value, N, s, k % AUDIT_EVERY == 0, max_pairs))
            index.append((N, k, s))
    results = _map_trials(tasks, ref_tree, workers)

    rows = []
    audited = skipped = violations = 0
    for N in ns:
        errs, seeds = [], []
        for (n_, k, s), (err, audit) in zip(index, results):
            if n_ != N:
                continue
            errs.append(err)
            seeds.append(s)
            if audit == "skipped":
                skipped += 1
            elif audit is not None:
                audited += 1
                violations += int(audit > err + 1e-9)
        e = np.array(errs)
        std = float(e.std(ddof=1)) if len(e) > 1 else 0.0
        rows.append(RateRow(N, trials, float(e.mean()), std, tuple(errs), tuple(seeds)))
    slope, stderr = fit_loglog(ns, [r.mean for r in rows])
    d, T = model.dims.d, model.dims.T
    return RateReport(
        model=model.id,
        grid="none" if kind is None else kind.value,
        reference=str(ref),
        rows=rows,
        slope=slope,
        slope_stderr=stderr,
        theoretical_slope=theoretical_slope(d, T),
        classical_slope=-1.0 / dimension_correction(d),
        audited=audited,
        audit_skipped=skipped,
        audit_violations=violations,
    )


def deviation_experiment(
    model: ModelSpec,
    grid,
    N: int,
    trials: int,
    x_grid=None,
    seed: int = 0,
    reference="proxy:131072",
    *,
    workers: int = 1,
    max_pairs: int = NODE_PAIR_BUDGET,
    ref_tree: PathMeasureTree | None = None,
) -> DeviationReport:
    """Empirical tail ``P[error >= mean + x]`` of the adapted Wasserstein error at fixed N."""
    if trials < 200:
        raise ValueError("deviation experiments need at least 200 trials")
    ref = parse_reference(reference)
    if isinstance(ref, LargeSampleProxy) and ref.M < 8 * N:
        raise ValueError(f"proxy size M={ref.M} must be at least 8 * N = {8 * N}")
    if ref_tree is None:
        ref_tree = reference_tree(model, ref, seed)
    kind = _grid_kind(grid)
    seeds = tuple(derive_seed(seed, N, k) for k in range(trials))
    tasks = [(model, None if kind is None else kind.value, N, s, False, max_pairs) for s in seeds]
    errors = np.array([r[0] for r in _map_trials(tasks, ref_tree, workers)])
    mean = float(errors.mean())
    if x_grid is None:
        top = float((errors - mean).max())
        x_grid = np.linspace(0.0, 1.25 * top if top > 0 else 1.0, 41)
    x = np.asarray(x_grid, dtype=np.float64)
    tail = np.array([(errors >= mean + xi).mean() for xi in x])
    populated = tail > 0
    rho = float("nan")
    if populated.sum() >= 3:
        rho = float(stats.spearmanr(np.log(tail[populated]), x[populated] ** 2).statistic)
    notes = (
        "Gaussian tail bound for uniform grids with growth 0: P <= C exp(-c N x^2)",
        "uniform grids with growth r > 0: P <= C N exp(-c (sqrt(N) x)^(1/(r+1)))",
        "non-uniform grids: P <= C N exp(-c (sqrt(N) x)^(1/(r+2)))",
    )
    return DeviationReport(
        model=model.id,
        grid="none" if kind is None else kind.value,
        reference=str(ref),
        N=N,
        trials=trials,
        errors=errors,
        mean=mean,
        x=x,
        tail=tail,
        spearman=rho,
        theoretical_slope=theoretical_slope(model.dims.d, model.dims.T),
        notes=notes,
        seeds=seeds,
    )


def gap_demo(epsilon: float) -> GapReport:
    mu, nu = figure1_pair(epsilon)
    return GapReport(epsilon, w_flat(mu, nu), aw_nested(mu, nu)[0])


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _write_rows(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _f(v) -> str:
    return format_float(v) if not (isinstance(v, float) and math.isnan(v)) else "nan"


def write_rate_csv(report: RateReport, path) -> None:
    header = ["model", "grid", "reference", "N", "trials", "mean", "std", "slope", "slope_stderr", "theoretical_slope", "classical_slope"]
    rows = [
        [report.model, report.grid, report.reference, r.N, r.trials, _f(r.mean), _f(r.std),
         _f(report.slope), _f(report.slope_stderr), _f(report.theoretical_slope), _f(report.classical_slope)]
        for r in report.rows
    ]
    _write_rows(path, header, rows)


def write_trials_csv(report: RateReport | DeviationReport, path) -> None:
    if isinstance(report, RateReport):
        rows = [[r.N, k, s, _f(e)] for r in report.rows for k, (s, e) in enumerate(zip(r.seeds, r.errors))]
    else:
        rows = [[report.N, k, s, _f(e)] for k, (s, e) in enumerate(zip(report.seeds, report.errors))]
    _write_rows(path, ["N", "trial", "seed", "error"], rows)


def write_tail_csv(report: DeviationReport, path) -> None:
    rows = [
        [_f(x), _f(t), _f(lt) if np.isfinite(lt) else "-inf", _f(nx)]
        for x, t, lt, nx in zip(report.x, report.tail, report.log_tail, report.n_x2)
    ]
    _write_rows(path, ["x", "tail", "log_tail", "N_x2"], rows)


def plot_rate_svg(report: RateReport, path) -> None:
    """Static log-log scatter of mean errors with the fitted line."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = np.array(report.ns, dtype=float)
    means = np.array(report.means)
    with matplotlib.rc_context({"svg.hashsalt": "adapted-empirical", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(ns, means, "o", label="mean AW error")
        intercept = np.mean(np.log(means)) - report.slope * np.mean(np.log(ns))
        ax.loglog(ns, np.exp(intercept) * ns**report.slope, "-", label=f"fit slope {report.slope:.3f}")
        ax.set_xlabel("N")
        ax.set_ylabel("error")
        ax.set_title(f"{report.model}, grid={report.grid}")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
