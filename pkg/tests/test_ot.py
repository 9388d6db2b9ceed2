from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from adapted_empirical.measure import DiscreteMeasure
from adapted_empirical.ot import (
    cost_matrix,
    integer_supplies,
    transport_simplex,
    w1_exact_1d,
    wp_discrete,
    wp_exact_1d,
    wp_with_value_to_go,
)
from adapted_empirical.simplex import simplex_solve


def transport_lp(C, a, b):
    """Dense LP over the transportation polytope, solved by the tableau simplex."""
    n, m = C.shape
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    return simplex_solve(C.ravel(), A, np.concatenate([a, b])).fun


def highs(C, a, b):
    n, m = C.shape
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    return linprog(C.ravel(), A_eq=A, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs").fun


def random_measure(rng, n, d, max_count=6):
    return DiscreteMeasure(rng.normal(size=(n, d)), rng.integers(1, max_count + 1, size=n))


def test_w1_examples():
    mu = DiscreteMeasure.from_weights([[0.0], [1.0]], [1, 1])
    assert w1_exact_1d(mu, mu) == 0
    assert w1_exact_1d(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([-2.5])) == 2.5
    # only one coupling exists between a 2-atom and a 1-atom measure
    assert w1_exact_1d(mu, DiscreteMeasure.dirac([0.0])) == 0.5
    assert transport_lp(np.array([[0.0], [1.0]]), np.array([0.5, 0.5]), np.array([1.0])) == 0.5


def test_wp_identity_plan():
    rng = np.random.default_rng(0)
    mu = random_measure(rng, 5, 2)
    for p in (1, 2, 3.5):
        value, plan = wp_discrete(mu, mu, p)
        assert value == 0
        assert np.all(plan.rows == plan.cols)


@pytest.mark.parametrize("eps", [0.01, 0.25, 0.5, 0.99])
def test_first_marginals_of_the_two_point_example(eps):
    nu = DiscreteMeasure.from_weights([[eps], [-eps]], [1, 1])
    value, _ = wp_discrete(DiscreteMeasure.dirac([0.0]), nu, 1)
    assert value == pytest.approx(eps, abs=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_four_vs_three_atoms_against_lp(seed):
    rng = np.random.default_rng(seed)
    mu, nu = random_measure(rng, 4, 2), random_measure(rng, 3, 2)
    value, plan = wp_discrete(mu, nu, 1)
    C = cost_matrix(mu.atoms, nu.atoms)
    assert value == pytest.approx(transport_lp(C, mu.weights, nu.weights), abs=1e-9)
    assert value == pytest.approx(highs(C, mu.weights, nu.weights), abs=1e-9)


def test_plan_feasibility_and_duality():
    rng = np.random.default_rng(1)
    for _ in range(100):
        mu = random_measure(rng, int(rng.integers(1, 12)), 2)
        nu = random_measure(rng, int(rng.integers(1, 12)), 2)
        value, plan = wp_discrete(mu, nu, 1)
        assert plan.exact
        P = plan.dense(len(mu), len(nu))
        assert np.allclose(P.sum(axis=1), mu.weights, atol=1e-12, rtol=0)
        assert np.allclose(P.sum(axis=0), nu.weights, atol=1e-12, rtol=0)
        assert np.all(P >= 0)
        assert plan.dual_value == pytest.approx(value, abs=1e-9)
        # a basic plan has at most n + m - 1 nonzeros
        assert plan.nnz <= len(mu) + len(nu) - 1


def test_float_fallback():
    big_p, big_q = 2**31 - 1, 2**31 - 19  # coprime denominators, product above 2^53
    mu = DiscreteMeasure.from_weights([[0.0], [1.0]], [Fraction(1, big_p), 1 - Fraction(1, big_p)])
    nu = DiscreteMeasure.from_weights([[0.5], [2.0]], [Fraction(1, big_q), 1 - Fraction(1, big_q)])
    assert not integer_supplies(mu, nu)[2]
    value, plan = wp_discrete(mu, nu, 1)
    assert not plan.exact
    P = plan.dense(2, 2)
    assert np.allclose(P.sum(axis=1), mu.weights, atol=1e-9, rtol=0)
    assert np.allclose(P.sum(axis=0), nu.weights, atol=1e-9, rtol=0)
    assert value == pytest.approx(w1_exact_1d(mu, nu), abs=1e-9)


def test_metric_properties():
    rng = np.random.default_rng(2)
    for _ in range(60):
        a, b, c = (random_measure(rng, int(rng.integers(1, 7)), 2) for _ in range(3))
        ab, ba = wp_discrete(a, b)[0], wp_discrete(b, a)[0]
        assert ab == pytest.approx(ba, abs=1e-12)
        assert wp_discrete(a, c)[0] <= ab + wp_discrete(b, c)[0] + 1e-9
        for p in (2, 3):
            assert wp_discrete(a, c, p)[0] <= wp_discrete(a, b, p)[0] + wp_discrete(b, c, p)[0] + 1e-9


def test_quantile_formula_against_network_simplex():
    rng = np.random.default_rng(3)
    for _ in range(300):
        mu, nu = random_measure(rng, int(rng.integers(1, 9)), 1), random_measure(rng, int(rng.integers(1, 9)), 1)
        assert wp_discrete(mu, nu, 1)[0] == pytest.approx(w1_exact_1d(mu, nu), abs=1e-10)
        w2 = wp_exact_1d(mu.atoms, mu.counts, nu.atoms, nu.counts, 2.0)
        assert wp_discrete(mu, nu, 2)[0] ** 2 == pytest.approx(w2, abs=1e-10)


def test_value_to_go_examples():
    zero = DiscreteMeasure.dirac([0.0])
    assert wp_with_value_to_go(zero, zero, 1, [[1.0]])[0] == 1.0
    rng = np.random.default_rng(4)
    mu, nu = random_measure(rng, 3, 1), random_measure(rng, 4, 1)
    assert wp_with_value_to_go(mu, nu, 1, np.zeros((3, 4)))[0] == pytest.approx(wp_discrete(mu, nu, 1)[0], abs=1e-15)

    half = DiscreteMeasure.from_weights([[0.0], [1.0]], [1, 1])
    vtg = np.array([[0.0, 5.0], [5.0, 0.0]])
    C = cost_matrix(half.atoms, half.atoms) + vtg
    assert wp_with_value_to_go(half, half, 1, vtg)[0] == pytest.approx(transport_lp(C, half.weights, half.weights), abs=1e-12)
    vtg = np.array([[3.0, 0.0], [0.0, 3.0]])
    C = cost_matrix(half.atoms, half.atoms) + vtg
    assert wp_with_value_to_go(half, half, 1, vtg)[0] == pytest.approx(transport_lp(C, half.weights, half.weights), abs=1e-12)
    with pytest.raises(ValueError):
        wp_with_value_to_go(half, half, 1, [[-1.0, 0], [0, 0]])


def test_transport_simplex_degenerate_and_deterministic():
    # many ties: all costs equal, supplies that make the start degenerate
    C = np.ones((6, 6))
    a = np.array([1, 1, 1, 1, 1, 1])
    r1 = transport_simplex(C, a, a)
    r2 = transport_simplex(C, a, a)
    assert r1.objective == 1.0
    assert np.array_equal(r1.rows, r2.rows) and np.array_equal(r1.flow, r2.flow)
    rng = np.random.default_rng(5)
    for _ in range(50):
        n, m = rng.integers(2, 15, size=2)
        C = rng.integers(0, 3, size=(n, m)).astype(float)
        a = rng.integers(1, 4, size=n) + m
        b = rng.multinomial(a.sum() - m, np.ones(m) / m) + 1
        res = transport_simplex(C, a, b)
        assert res.objective == pytest.approx(highs(C, a / a.sum(), b / b.sum()), abs=1e-12)


def test_dimension_checks():
    with pytest.raises(ValueError):
        wp_discrete(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([0.0, 1.0]))
    with pytest.raises(ValueError):
        wp_discrete(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([0.0]), 0.5)
    with pytest.raises(ValueError):
        w1_exact_1d(DiscreteMeasure.dirac([0.0, 1.0]), DiscreteMeasure.dirac([0.0, 1.0]))
