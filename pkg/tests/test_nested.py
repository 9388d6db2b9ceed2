import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from adapted_empirical.core import PathSample
from adapted_empirical.measure import PathMeasureTree, empirical
from adapted_empirical.models import figure1_pair, ground_truth_tree, random_tree
from adapted_empirical.nested import BudgetExceeded, aw_nested, bicausal_lp_oracle, w_flat


def highs_bicausal(mu, nu, p=1.0):
    """Bicausal LP written from scratch over leaf pairs, solved by HiGHS.

    Prefixes are keyed by tuples, and causality is imposed in the form
    pi(x_{1:t+1}, y_{1:t}) = mu(x_{t+1} | x_{1:t}) pi(x_{1:t}, y_{1:t}), and symmetrically.
    """
    X, a = mu.leaves()
    Y, b = nu.leaves()
    a, b = a / a.sum(), b / b.sum()
    T = mu.T
    key = lambda path, t: tuple(map(tuple, path[:t]))
    nX, nY = len(a), len(b)
    cost = np.array([[sum(np.linalg.norm(X[k, t] - Y[l, t]) ** p for t in range(T)) for l in range(nY)] for k in range(nX)])

    def prefix_mass(leaves, w, t):
        out = {}
        for path, wk in zip(leaves, w):
            out[key(path, t)] = out.get(key(path, t), 0.0) + wk
        return out

    rows, rhs = [], []
    for t in range(T):
        mx_t, mx_n = prefix_mass(X, a, t), prefix_mass(X, a, t + 1)
        my_t, my_n = prefix_mass(Y, b, t), prefix_mass(Y, b, t + 1)
        for px in mx_n:
            for py in my_t:
                row = np.zeros((nX, nY))
                for k, l in itertools.product(range(nX), range(nY)):
                    if key(X[k], t + 1) == px and key(Y[l], t) == py:
                        row[k, l] += 1.0
                    if key(X[k], t) == px[:t] and key(Y[l], t) == py:
                        row[k, l] -= mx_n[px] / mx_t[px[:t]]
                rows.append(row.ravel())
                rhs.append(0.0)
        for py in my_n:
            for px in mx_t:
                row = np.zeros((nX, nY))
                for k, l in itertools.product(range(nX), range(nY)):
                    if key(Y[l], t + 1) == py and key(X[k], t) == px:
                        row[k, l] += 1.0
                    if key(Y[l], t) == py[:t] and key(X[k], t) == px:
                        row[k, l] -= my_n[py] / my_t[py[:t]]
                rows.append(row.ravel())
                rhs.append(0.0)
    rows.append(np.ones(nX * nY))
    rhs.append(1.0)
    res = linprog(cost.ravel(), A_eq=np.array(rows), b_eq=rhs, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun ** (1.0 / p)


def small_pair(rng, T, d):
    while True:
        mu, nu = random_tree(rng, T, d), random_tree(rng, T, d)
        if mu.level_size(T - 1) * nu.level_size(T - 1) <= 150:
            return mu, nu


@pytest.mark.parametrize("eps", [0.01, 0.25, 0.5, 0.99])
def test_two_point_example(eps):
    mu, nu = figure1_pair(eps)
    assert abs(w_flat(mu, nu) - eps) <= 1e-12
    aw, table = aw_nested(mu, nu)
    assert abs(aw - (1 + eps)) <= 1e-12
    assert abs(bicausal_lp_oracle(mu, nu) - (1 + eps)) <= 1e-9
    # whatever the first states are, the conditional laws are 1 apart
    assert table[1] is None and table[0].shape == (1, 2)
    assert np.all(table[0] == 1.0)


def test_figure1_range():
    with pytest.raises(ValueError):
        figure1_pair(0.0)
    with pytest.raises(ValueError):
        figure1_pair(1.0)


def test_identical_trees():
    chain = empirical(PathSample(np.array([[[0.3], [1.0], [-2.0]]])))
    assert aw_nested(chain, chain)[0] == 0
    assert bicausal_lp_oracle(chain, chain) == 0
    coin = ground_truth_tree("coin2")
    assert aw_nested(coin, coin)[0] == 0 and w_flat(coin, coin) == 0


def test_coin_presets_against_oracles():
    fair, biased = ground_truth_tree("coin2"), ground_truth_tree("coin2_biased")
    assert fair.level_size(1) == 4 and np.all(fair.leaf_weights() == 0.25)
    aw = aw_nested(fair, biased)[0]
    assert aw == pytest.approx(bicausal_lp_oracle(fair, biased), abs=1e-8)
    assert aw == pytest.approx(highs_bicausal(fair, biased), abs=1e-8)
    markov, coin3 = ground_truth_tree("markov2"), ground_truth_tree("coin3")
    assert aw_nested(markov, coin3)[0] == pytest.approx(highs_bicausal(markov, coin3), abs=1e-8)


@pytest.mark.parametrize("T, d", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_dp_matches_independent_lp(T, d):
    rng = np.random.default_rng(10 * T + d)
    for _ in range(6):
        mu, nu = small_pair(rng, T, d)
        aw = aw_nested(mu, nu)[0]
        assert aw == pytest.approx(highs_bicausal(mu, nu), abs=1e-8)
        assert aw == pytest.approx(bicausal_lp_oracle(mu, nu), abs=1e-8)


def test_dp_matches_lp_for_p2():
    rng = np.random.default_rng(3)
    for _ in range(5):
        mu, nu = small_pair(rng, 2, 1)
        assert aw_nested(mu, nu, 2)[0] == pytest.approx(highs_bicausal(mu, nu, 2), abs=1e-8)


@pytest.mark.parametrize("d, p", [(1, 1.0), (2, 1.0), (1, 2.0)])
def test_point_mass_kernels(d, p):
    # plain empirical trees have one child per node, on one side or both
    rng = np.random.default_rng(11)
    for _ in range(10):
        emp = empirical(PathSample(rng.uniform(-1, 1, size=(5, 2, d)), 0))
        other = random_tree(rng, 2, d, fan_out=3)
        for mu, nu in ((emp, other), (other, emp), (emp, emp)):
            assert aw_nested(mu, nu, p)[0] == pytest.approx(highs_bicausal(mu, nu, p), abs=1e-8)


def test_dominance_and_metric():
    rng = np.random.default_rng(11)
    for _ in range(40):
        T, d = int(rng.integers(2, 4)), int(rng.integers(1, 3))
        a, b, c = (random_tree(rng, T, d) for _ in range(3))
        ab = aw_nested(a, b)[0]
        assert w_flat(a, b) <= ab + 1e-9
        assert ab == pytest.approx(aw_nested(b, a)[0], abs=1e-12)
        assert aw_nested(a, c)[0] <= ab + aw_nested(b, c)[0] + 1e-9


def _mapped(tree, f):
    leaves, counts = tree.leaves()
    return PathMeasureTree.from_leaves(f(leaves), counts)


def test_translation_and_scaling():
    rng = np.random.default_rng(12)
    for _ in range(20):
        T, d = int(rng.integers(2, 4)), int(rng.integers(1, 3))
        mu, nu = random_tree(rng, T, d), random_tree(rng, T, d)
        base = aw_nested(mu, nu)[0]
        shift = np.round(rng.normal(size=(T, d)), 2)
        moved = aw_nested(_mapped(mu, lambda x: x + shift), _mapped(nu, lambda x: x + shift))[0]
        assert moved == pytest.approx(base, abs=1e-12)
        s = 2.0 ** int(rng.integers(-3, 4))
        assert aw_nested(_mapped(mu, lambda x: s * x), _mapped(nu, lambda x: s * x))[0] == pytest.approx(s * base, abs=1e-12)
        s = float(rng.uniform(0.1, 10))
        assert aw_nested(_mapped(mu, lambda x: s * x), _mapped(nu, lambda x: s * x))[0] == pytest.approx(s * base, rel=1e-12, abs=1e-12)


def test_budget_guard():
    rng = np.random.default_rng(13)
    mu = empirical(PathSample(rng.normal(size=(50, 2, 1))))
    nu = empirical(PathSample(rng.normal(size=(60, 2, 1))))
    # the first level of an empirical tree of a continuous law has one node per path
    with pytest.raises(BudgetExceeded):
        aw_nested(mu, nu, max_pairs=2999)
    assert aw_nested(mu, nu, max_pairs=3000)[0] > 0
    with pytest.raises(BudgetExceeded):
        bicausal_lp_oracle(mu, nu)


def test_mismatched_dims():
    mu, _ = figure1_pair(0.5)
    other = ground_truth_tree("coin3")
    with pytest.raises(ValueError):
        aw_nested(mu, other)
    with pytest.raises(ValueError):
        aw_nested(mu, mu, 0.5)
