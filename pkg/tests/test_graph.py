import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lapdefense.errors import ContractError, DimensionError, ParameterError, PreconditionError, ZeroEnergyError
from lapdefense.graph import (adjacency_from_weights, adjoint_op, dirichlet_energy, edge_index, edge_pair,
                              is_laplacian, laplacian_from_adjacency, laplacian_op, laplacian_violations,
                              normalized_energy_curve, p_dirichlet_energy, pair_arrays, weights_from_adjacency,
                              weights_from_laplacian)

from oracles import naive_adjoint, naive_laplacian, pair_list


# ------------------------------------------------------------------
# edge index

@pytest.mark.parametrize("i, j, n, k", [(2, 1, 4, 1), (3, 2, 4, 4), (4, 3, 4, 6), (3, 1, 4, 2)])
def test_edge_index_values(i, j, n, k):
    assert edge_index(i, j, n) == k
    assert edge_pair(k, n) == (i, j)


def test_edge_index_last_pair():
    for n in range(2, 40):
        assert edge_index(n, n - 1, n) == n * (n - 1) // 2


def test_edge_index_matches_enumeration():
    for n in range(2, 30):
        expected = pair_list(n)
        got = [edge_pair(k, n) for k in range(1, n * (n - 1) // 2 + 1)]
        assert got == expected
        I, J = pair_arrays(n)
        assert list(zip((I + 1).tolist(), (J + 1).tolist())) == expected


@pytest.mark.parametrize("i, j, n", [(1, 1, 3), (1, 2, 3), (4, 1, 3), (2, 0, 3)])
def test_edge_index_rejects_bad_pairs(i, j, n):
    with pytest.raises(PreconditionError):
        edge_index(i, j, n)


@pytest.mark.parametrize("k", [0, 7, -1])
def test_edge_pair_rejects_bad_index(k):
    with pytest.raises(PreconditionError):
        edge_pair(k, 4)


# ------------------------------------------------------------------
# Laplacian operator and adjoint

def test_laplacian_unit_triangle():
    expected = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]], dtype=float)
    np.testing.assert_array_equal(laplacian_op([1, 1, 1]), expected)


def test_laplacian_empty_graph():
    np.testing.assert_array_equal(laplacian_op([0, 0, 0]), np.zeros((3, 3)))


def test_laplacian_single_edge():
    M = laplacian_op([1, 0, 0, 0, 0, 0])
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[1, 1] = 1
    expected[0, 1] = expected[1, 0] = -1
    np.testing.assert_array_equal(M, expected)
    np.testing.assert_array_equal(M.sum(axis=1), 0)


def test_laplacian_rejects_bad_length():
    with pytest.raises(DimensionError):
        laplacian_op(np.ones(4))
    with pytest.raises(DimensionError):
        laplacian_op(np.ones(3), n=4)


def test_laplacian_matches_naive():
    rng = np.random.default_rng(1)
    for n in (2, 3, 7, 12):
        w = rng.random(n * (n - 1) // 2)
        np.testing.assert_allclose(laplacian_op(w), naive_laplacian(w, n), atol=1e-14)
        Y = rng.standard_normal((n, n))
        np.testing.assert_allclose(adjoint_op(Y), naive_adjoint(Y), atol=1e-14)


def test_adjoint_identity_and_zero():
    np.testing.assert_array_equal(adjoint_op(np.eye(3)), [2, 2, 2])
    np.testing.assert_array_equal(adjoint_op(np.zeros((4, 4))), np.zeros(6))


def test_adjoint_rejects_non_square():
    with pytest.raises(DimensionError):
        adjoint_op(np.zeros((3, 4)))


def test_adjoint_identity_n10():
    rng = np.random.default_rng(7)
    w = rng.standard_normal(45)
    Y = rng.standard_normal((10, 10))
    lhs = np.sum(laplacian_op(w) * Y)
    assert abs(lhs - w @ adjoint_op(Y)) / (1 + abs(lhs)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 25), seed=st.integers(0, 2**31 - 1))
def test_null_space_and_laplacian_invariants(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.random(n * (n - 1) // 2) * 5
    M = laplacian_op(w)
    assert np.abs(M @ np.ones(n)).max() <= 1e-9 * n
    assert is_laplacian(M)
    assert np.linalg.eigvalsh(M).min() >= -1e-8
    np.testing.assert_array_equal(weights_from_laplacian(M), w)


def test_laplacian_violations_reported():
    bad = np.array([[1.0, 1.0], [1.0, 1.0]])
    problems = laplacian_violations(bad)
    assert "positive off-diagonal entry" in problems
    assert "rows do not sum to zero" in problems
    assert not laplacian_violations(laplacian_op([2.0]))


# ------------------------------------------------------------------
# adjacency

def test_adjacency_from_weights_examples():
    np.testing.assert_array_equal(adjacency_from_weights([1, 1, 1]), np.ones((3, 3)) - np.eye(3))
    A = adjacency_from_weights([0.5, 0, 0])
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 0] = 0.5
    np.testing.assert_array_equal(A, expected)


def test_adjacency_rejects_negative():
    with pytest.raises(ContractError):
        adjacency_from_weights([1.0, -0.1, 0.0])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 20), seed=st.integers(0, 2**31 - 1))
def test_adjacency_laplacian_identity(n, seed):
    w = np.random.default_rng(seed).random(n * (n - 1) // 2)
    A = adjacency_from_weights(w)
    np.testing.assert_allclose(np.diag(A.sum(axis=1)) - A, laplacian_op(w), atol=1e-10)
    np.testing.assert_array_equal(weights_from_adjacency(A), w)
    np.testing.assert_allclose(laplacian_from_adjacency(A), laplacian_op(w), atol=1e-10)


# ------------------------------------------------------------------
# energies

def test_dirichlet_examples():
    assert dirichlet_energy([1, 1, 1], [0, 1, 2]) == 6.0
    assert dirichlet_energy(np.ones((3, 3)) - np.eye(3), [0, 1, 2]) == 6.0
    assert dirichlet_energy([3.0], [0, 2]) == 12.0
    A = np.ones((5, 5)) - np.eye(5)
    assert dirichlet_energy(A, np.tile([1.0, -2.0, 3.0], (5, 1))) == 0.0


def test_p_dirichlet_examples():
    f = np.array([0.3, -1.2, 2.0, 0.7])
    w = np.array([1.0, 0.5, 0.0, 2.0, 1.5, 0.25])
    assert p_dirichlet_energy(w, f, 2.0) == dirichlet_energy(w, f)
    assert p_dirichlet_energy([1.0], [0, 2], 3) == 8.0
    assert p_dirichlet_energy([1.0], [[1, 0], [0, 1]], 2.4) == 2.0


def test_p_dirichlet_rejects_small_p():
    with pytest.raises(ParameterError):
        p_dirichlet_energy([1.0], [0, 1], 1.0)


def test_energy_dimension_mismatch():
    with pytest.raises(DimensionError):
        dirichlet_energy([1, 1, 1], [0, 1])


def test_dirichlet_quadratic_form():
    rng = np.random.default_rng(3)
    w = rng.random(28)
    f = rng.standard_normal((8, 3))
    L = laplacian_op(w)
    assert dirichlet_energy(w, f) == pytest.approx(np.trace(f.T @ L @ f), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 15), seed=st.integers(0, 2**31 - 1), p=st.floats(1.1, 4.0))
def test_energies_non_negative(n, seed, p):
    rng = np.random.default_rng(seed)
    w = rng.random(n * (n - 1) // 2)
    f = rng.standard_normal((n, 2))
    assert dirichlet_energy(w, f) >= 0
    assert p_dirichlet_energy(w, f, p) >= 0


# ------------------------------------------------------------------
# normalized curve

def test_normalized_curve_level_zero_and_growth():
    f = np.array([0.0, 1.0, 5.0, 6.0])
    clean = np.zeros((4, 4))
    clean[0, 1] = clean[1, 0] = clean[2, 3] = clean[3, 2] = 1
    more = clean.copy()
    more[0, 2] = more[2, 0] = 1
    curve = normalized_energy_curve(clean, [more], f, [0.5])
    assert curve[0] == (0.0, 1.0)
    assert curve[1][0] == 0.5
    assert curve[1][1] > 1.0


def test_normalized_curve_zero_energy_guard():
    A = np.ones((3, 3)) - np.eye(3)
    with pytest.raises(ZeroEnergyError, match="zero Dirichlet energy"):
        normalized_energy_curve(A, [A], np.ones(3))
