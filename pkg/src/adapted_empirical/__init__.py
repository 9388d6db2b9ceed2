"""Adapted empirical measures and exact (adapted) Wasserstein distances for finite-horizon paths."""

from .core import Dims, PathSample, derive_seed, read_sample_csv, sum_norm, sup_coord, write_sample_csv
from .grid import CellId, GridKind, GridSpec, cell_diameter, project, project_paths, ring_index
from .measure import (
    DiscreteMeasure,
    ModelMetadata,
    PathMeasureTree,
    adapted_empirical,
    dump_tree,
    empirical,
    exp_moment,
    load_tree,
    marginal,
    moment,
    ring_mass,
)
from .ot import Coupling, w1_exact_1d, wp_discrete, wp_with_value_to_go
from .nested import BudgetExceeded, ValueTable, aw_nested, bicausal_lp_oracle, w_flat
from .models import ModelKind, ModelSpec, figure1_pair, ground_truth_tree, random_tree, sample
from .experiments import (
    DeviationReport,
    RateReport,
    deviation_experiment,
    gap_demo,
    rate_experiment,
    theoretical_slope,
)

__version__ = "0.1.0"
