"""
Dense kernel checks: definitions on hand-sized inputs, the QR solver against
forward multiplication, and the QR and SVD paths against each other.
"""
import numpy as np
import pytest

from mrtime.errors import DimensionMismatch, NonFiniteValue, RankDeficient
from mrtime.linalg import (
    matmul,
    matrix,
    pseudo_inverse_solve,
    solve_least_squares,
    transpose,
    vector,
)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def triple_loop_product(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def normal_equations_solve(p, t):
    """The printed closed form (P^T P)^-1 P^T T, only safe on scaled systems."""
    pt = transpose(p)
    return np.linalg.inv(matmul(pt, p)) @ (pt @ t)


def relative_error(x, y):
    return np.max(np.abs(x - y)) / max(np.max(np.abs(y)), 1e-300)


def test_constructors_reject_non_finite():
    with pytest.raises(NonFiniteValue):
        matrix([[1.0, np.nan]])
    with pytest.raises(NonFiniteValue):
        vector([1.0, np.inf])
    with pytest.raises(DimensionMismatch):
        matrix([1.0, 2.0])


def test_transpose():
    assert (transpose([[5.0]]) == [[5.0]]).all()
    assert (transpose([[1, 2, 3], [4, 5, 6]]) == [[1, 4], [2, 5], [3, 6]]).all()


def test_transpose_is_an_involution(rng):
    m = rng.normal(size=(7, 4))
    result = transpose(m)
    assert result.shape == (4, 7)
    assert (transpose(result) == m).all()


def test_matmul_identity_and_hand_case(rng):
    m = rng.normal(size=(3, 5))
    assert np.array_equal(matmul(np.identity(3), m), m)
    assert (matmul([[1, 2], [3, 4]], [[5], [6]]) == [[17], [39]]).all()


def test_matmul_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_associativity_against_triple_loop(rng):
    a, b, c = (rng.normal(size=(4, 4)) for _ in range(3))
    left = matmul(matmul(a, b), c)
    right = matmul(a, matmul(b, c))
    assert np.allclose(left, right, rtol=0, atol=1e-12)
    assert np.allclose(left, triple_loop_product(triple_loop_product(a, b), c), rtol=0, atol=1e-12)


def test_solve_identity_system():
    assert np.allclose(solve_least_squares(np.identity(2), [3.0, 7.0]), [3.0, 7.0])


def test_solve_exact_line():
    solution = solve_least_squares([[1, 1], [1, 2], [1, 3]], [3.0, 5.0, 7.0])
    assert np.allclose(solution, [1.0, 2.0], rtol=0, atol=1e-12)


def test_solve_recovers_known_coefficients(rng):
    p = rng.normal(size=(20, 7))
    expected = rng.uniform(-5, 5, size=7)
    solution = solve_least_squares(p, p @ expected)
    assert relative_error(solution, expected) < 1e-8


def test_solve_reports_dependent_column():
    p = [[1.0, 2.0, 1.0], [1.0, 2.0, 2.0], [1.0, 2.0, 3.0], [1.0, 2.0, 5.0]]
    with pytest.raises(RankDeficient) as info:
        solve_least_squares(p, [1.0, 2.0, 3.0, 4.0])
    assert info.value.column == 1


def test_solve_rejects_underdetermined_and_mismatched():
    with pytest.raises(RankDeficient):
        solve_least_squares(np.ones((2, 3)), [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        solve_least_squares(np.identity(3), [1.0, 2.0])


def test_residual_is_orthogonal_to_columns(rng):
    p = rng.normal(size=(20, 7))
    t = rng.normal(size=20) * 10
    a = solve_least_squares(p, t)
    bound = 1e-8 * (np.abs(p).sum(axis=1).max() * np.abs(t).max() + 1)
    assert np.abs(p.T @ (p @ a - t)).max() <= bound


def test_solution_minimizes_residual(rng):
    p = rng.normal(size=(20, 7))
    t = rng.normal(size=20)
    a = solve_least_squares(p, t)
    best = np.linalg.norm(p @ a - t)
    radius = 0.1 * np.linalg.norm(a) + 0.1
    for _ in range(100):
        delta = rng.normal(size=7)
        delta *= rng.uniform(0, radius) / np.linalg.norm(delta)
        assert np.linalg.norm(p @ (a + delta) - t) >= best - 1e-9


def test_qr_agrees_with_pseudo_inverse(rng):
    for _ in range(50):
        p = rng.normal(size=(20, 7))
        t = rng.normal(size=20)
        qr = solve_least_squares(p, t)
        svd = pseudo_inverse_solve(p, t)
        assert relative_error(qr, svd) < 1e-8


def test_qr_agrees_with_normal_equations_on_scaled_system(rng):
    p = rng.uniform(0.1, 1.0, size=(20, 4))
    t = rng.normal(size=20)
    assert relative_error(solve_least_squares(p, t), normal_equations_solve(p, t)) < 1e-8


def test_pseudo_inverse_shares_weight_of_duplicated_column():
    p = [[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]
    assert np.allclose(pseudo_inverse_solve(p, [2.0, 4.0, 6.0]), [1.0, 1.0])


def test_pseudo_inverse_of_zero_matrix():
    assert (pseudo_inverse_solve(np.zeros((4, 3)), [1.0, 2.0, 3.0, 4.0]) == 0).all()
