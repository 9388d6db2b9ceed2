import numpy as np
import pytest
from scipy.optimize import linprog

from adapted_empirical.simplex import InfeasibleError, UnboundedError, simplex_solve


def test_small_lp():
    # min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
    c = [-1, -1, 0, 0]
    A = [[1, 2, 1, 0], [3, 1, 0, 1]]
    res = simplex_solve(c, A, [4, 6])
    assert res.fun == pytest.approx(-2.8, abs=1e-12)
    assert np.allclose(res.x[:2], [1.6, 1.2])


def test_infeasible_and_unbounded():
    with pytest.raises(InfeasibleError):
        simplex_solve([1, 1], [[1, 1]], [-1])
    with pytest.raises(UnboundedError):
        simplex_solve([-1, 0], [[1, -1]], [0])


def test_redundant_rows():
    # the last row is the sum of the first two
    A = [[1, 1, 0], [0, 1, 1], [1, 2, 1]]
    res = simplex_solve([1, 2, 3], A, [1, 1, 2])
    assert res.fun == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(30))
def test_matches_highs_on_random_lps(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 8), rng.integers(8, 20)
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, size=n)
    b = A @ x0  # feasible by construction
    c = rng.uniform(0.1, 2, size=n)  # bounded because c > 0 and x >= 0
    ours = simplex_solve(c, A, b)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert ref.status == 0
    assert ours.fun == pytest.approx(ref.fun, abs=1e-9)
    assert np.allclose(A @ ours.x, b, atol=1e-9)
    assert np.all(ours.x >= 0)


def test_degenerate_cycling_example():
    # Beale's classic cycling instance, in equality form with slacks
    c = [-0.75, 150, -0.02, 6, 0, 0, 0]
    A = [
        [0.25, -60, -0.04, 9, 1, 0, 0],
        [0.5, -90, -0.02, 3, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 1],
    ]
    res = simplex_solve(c, A, [0, 0, 1])
    assert res.fun == pytest.approx(-0.05, abs=1e-12)
