import numpy as np
import pytest

from lapdefense.data import SynthSpec, generate_planted_partition
from lapdefense.errors import CapacityError, ParameterError
from lapdefense.graph import dirichlet_energy
from lapdefense.perturb import (PerturbationSpec, dissimilar_edge_insertion, perturbation_stats,
                                random_edge_insertion)


def ring(n):
    A = np.zeros((n, n))
    for i in range(n):
        A[i, (i + 1) % n] = A[(i + 1) % n, i] = 1.0
    return A


def edge_count(A):
    return int(np.count_nonzero(np.triu(A, 1)))


def test_spec_validation():
    with pytest.raises(ParameterError):
        PerturbationSpec("flip", 0.1)
    with pytest.raises(ParameterError):
        PerturbationSpec("random_insert", -0.1)


def test_random_rate_zero_is_identity():
    A = ring(10)
    np.testing.assert_array_equal(random_edge_insertion(A, PerturbationSpec(rate=0.0, seed=3)), A)


def test_random_rate_one_doubles_edges():
    A = ring(30)
    out = random_edge_insertion(A, PerturbationSpec(rate=1.0, seed=1))
    assert edge_count(out) == 60
    assert np.all(out[A > 0] == 1)
    np.testing.assert_array_equal(out, out.T)
    assert np.all(np.diagonal(out) == 0)


def test_random_seeded():
    A = ring(100)
    a = random_edge_insertion(A, PerturbationSpec(rate=0.5, seed=7))
    b = random_edge_insertion(A, PerturbationSpec(rate=0.5, seed=7))
    c = random_edge_insertion(A, PerturbationSpec(rate=0.5, seed=8))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_random_capacity_error():
    A = np.ones((4, 4)) - np.eye(4)
    A[0, 1] = A[1, 0] = 0
    with pytest.raises(CapacityError):
        random_edge_insertion(A, PerturbationSpec(rate=1.0))


def test_random_inserted_weight_is_one_on_weighted_graph():
    A = 0.3 * ring(12)
    out = random_edge_insertion(A, PerturbationSpec(rate=0.5, seed=0))
    new = (out > 0) & (A == 0)
    assert np.all(out[new] == 1.0)
    assert np.all(out[A > 0] == 0.3)


def test_dissimilar_rate_zero_is_identity():
    A = ring(8)
    X = np.arange(8.0)
    np.testing.assert_array_equal(dissimilar_edge_insertion(A, X, PerturbationSpec("dissimilar_insert", 0.0)), A)


def test_dissimilar_picks_largest_distances_with_index_ties():
    A = np.zeros((4, 4))
    A[0, 1] = A[1, 0] = 1.0
    A[2, 3] = A[3, 2] = 1.0
    X = np.array([0.0, 0.0, 1.0, 1.0])
    out = dissimilar_edge_insertion(A, X, PerturbationSpec("dissimilar_insert", 0.5))
    # four absent pairs at distance 1; lowest edge index first: (3,1)
    assert out[2, 0] == 1.0 and edge_count(out) == 3


def test_dissimilar_inserts_inter_cluster():
    ds = generate_planted_partition(SynthSpec(n=120, classes=3, p_in=0.2, p_out=0.0, feature_dim=4,
                                              feature_separation=10.0, noise_sd=0.5, seed=2))
    out = dissimilar_edge_insertion(ds.A, ds.X, PerturbationSpec("dissimilar_insert", 0.5))
    I, J = np.nonzero(np.triu(out - ds.A, 1))
    y = ds.labels.labels
    assert I.size > 0 and np.all(y[I] != y[J])


def test_dissimilar_raises_energy_more_than_random():
    diss, rand = [], []
    for seed in range(20):
        ds = generate_planted_partition(SynthSpec(n=80, classes=4, feature_dim=4, seed=seed))
        diss.append(dirichlet_energy(dissimilar_edge_insertion(ds.A, ds.X, PerturbationSpec("dissimilar_insert", 0.4)), ds.X))
        rand.append(dirichlet_energy(random_edge_insertion(ds.A, PerturbationSpec(rate=0.4, seed=seed)), ds.X))
    assert np.mean(diss) > np.mean(rand)


def test_stats():
    A = ring(10)
    assert perturbation_stats(A, A) == (0, 0, 0.0)
    B = A.copy()
    B[0, 5] = B[5, 0] = 1
    assert perturbation_stats(A, B) == (1, 0, 0.1)
    C = B.copy()
    C[0, 1] = C[1, 0] = 0
    assert perturbation_stats(A, C) == (1, 1, 0.2)


def test_stats_consistent_with_insertion():
    rng = np.random.default_rng(0)
    n = 60
    iu, ju = np.triu_indices(n, 1)
    pick = rng.choice(iu.size, 100, replace=False)
    A = np.zeros((n, n))
    A[iu[pick], ju[pick]] = 1
    A = A + A.T
    out = random_edge_insertion(A, PerturbationSpec(rate=0.2, seed=4))
    assert perturbation_stats(A, out) == (20, 0, 0.2)


def test_insertion_never_lowers_energy():
    rng = np.random.default_rng(5)
    A = ring(25)
    X = rng.standard_normal((25, 3))
    e0 = dirichlet_energy(A, X)
    for rate in (0.2, 0.6, 1.0):
        assert dirichlet_energy(random_edge_insertion(A, PerturbationSpec(rate=rate, seed=1)), X) >= e0
