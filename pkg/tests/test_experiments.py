import numpy as np
import pytest

from adapted_empirical.core import Dims
from adapted_empirical.experiments import (
    GroundTruth,
    LargeSampleProxy,
    deviation_experiment,
    dimension_correction,
    fit_loglog,
    gap_demo,
    parse_reference,
    plot_rate_svg,
    rate_experiment,
    reference_tree,
    theoretical_slope,
    write_rate_csv,
    write_tail_csv,
    write_trials_csv,
)
from adapted_empirical.models import ModelSpec

WALK = ModelSpec("gaussian_walk", Dims(1, 2))


def test_dimension_correction():
    assert [dimension_correction(d) for d in (1, 2, 3, 7)] == [2, 3, 3, 7]
    assert theoretical_slope(1, 2) == -0.25
    assert theoretical_slope(3, 2) == pytest.approx(-1 / 6)


def test_fit_loglog_recovers_power_law():
    ns = [64, 256, 1024, 4096]
    slope, _ = fit_loglog(ns, [3.0 * n**-0.3 for n in ns])
    assert slope == pytest.approx(-0.3, abs=1e-12)


def test_parse_reference():
    assert parse_reference("truth") == GroundTruth()
    assert parse_reference("proxy:4096") == LargeSampleProxy(4096)
    with pytest.raises(ValueError):
        parse_reference("exact")
    with pytest.raises(ValueError):
        parse_reference("proxy:0")


def test_reference_requirements():
    with pytest.raises(ValueError):
        reference_tree(WALK, "truth", 0)
    with pytest.raises(ValueError):
        rate_experiment(WALK, "uniform", [64, 128], 2, 0, "proxy:1000")
    with pytest.raises(ValueError):
        rate_experiment(WALK, "uniform", [128, 64], 2, 0, "proxy:4096")
    with pytest.raises(ValueError):
        deviation_experiment(WALK, "uniform", 64, 100, seed=0, reference="proxy:4096")


@pytest.mark.parametrize("eps, w, aw", [(0.25, 0.25, 1.25), (0.01, 0.01, 1.01), (0.99, 0.99, 1.99)])
def test_gap_demo(eps, w, aw):
    rep = gap_demo(eps)
    assert rep.w == pytest.approx(w, abs=1e-12)
    assert rep.aw == pytest.approx(aw, abs=1e-12)
    assert rep.gap == pytest.approx(1.0, abs=1e-12)
    assert "gap=1" in str(rep)


def test_rate_experiment_ground_truth_tree():
    m = ModelSpec("custom_tree", Dims(1, 2), tree="coin2")
    rep = rate_experiment(m, "none", [16, 256, 4096], 10, 3, "truth")
    assert rep.reference == "truth" and rep.grid == "none"
    means = rep.means
    assert means[0] > means[1] > means[2]
    assert all(e >= 0 for r in rep.rows for e in r.errors)
    assert rep.audited > 0 and rep.audit_violations == 0


def test_rate_experiment_is_reproducible_and_order_independent(tmp_path):
    a = rate_experiment(WALK, "uniform", [64, 256], 4, 7, "proxy:4096")
    b = rate_experiment(WALK, "uniform", [64, 256], 4, 7, "proxy:4096", workers=2)
    assert a.means == b.means and a.slope == b.slope
    write_rate_csv(a, tmp_path / "a.csv")
    write_rate_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0].split(",")
    assert header[:7] == ["model", "grid", "reference", "N", "trials", "mean", "std"]
    assert "slope" in header
    write_trials_csv(a, tmp_path / "t.csv")
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 1 + 8


def test_deviation_experiment_shape(tmp_path):
    rep = deviation_experiment(WALK, "uniform", 32, 200, seed=1, reference="proxy:1024")
    assert rep.tail[0] <= 1.0
    assert np.all(np.diff(rep.tail) <= 0)
    assert rep.tail[-1] == 0.0
    assert len(rep.seeds) == 200 and len(set(rep.seeds)) == 200
    custom = deviation_experiment(WALK, "uniform", 32, 200, x_grid=[0.0, 10.0], seed=1, reference="proxy:1024")
    assert custom.tail[1] == 0.0
    assert np.array_equal(custom.errors, rep.errors)
    write_tail_csv(rep, tmp_path / "tail.csv")
    lines = (tmp_path / "tail.csv").read_text().splitlines()
    assert lines[0] == "x,tail,log_tail,N_x2" and lines[-1].split(",")[2] == "-inf"


def test_plot_is_deterministic(tmp_path):
    pytest.importorskip("matplotlib")
    rep = rate_experiment(WALK, "uniform", [16, 64], 2, 0, "proxy:512")
    plot_rate_svg(rep, tmp_path / "a.svg")
    plot_rate_svg(rep, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
