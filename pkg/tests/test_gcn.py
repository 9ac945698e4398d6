import math

import numpy as np
import pytest

from lapdefense.errors import DimensionError, InputError
from lapdefense.gcn import (GcnParams, LabelVector, TrainConfig, evaluate, forward, init_params, loss_and_grads,
                            normalize_adjacency, train)

from oracles import central_diff, naive_gcn_logits


def random_graph(rng, n, density=0.4):
    A = np.triu((rng.random((n, n)) < density) * rng.uniform(0.2, 2.0, (n, n)), 1)
    return A + A.T


def random_problem(rng, n=6, d=4, h=3, C=2):
    A = random_graph(rng, n)
    X = rng.standard_normal((n, d))
    y = rng.integers(0, C, n)
    train_m = rng.random(n) < 0.6
    train_m[0] = True
    labels = LabelVector(y, train_m, ~train_m, np.zeros(n, bool), C)
    params = GcnParams(rng.standard_normal((d, h)), rng.standard_normal((h, C)))
    return A, X, labels, params


def max_rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-6)))


# ------------------------------------------------------------------
# normalization

def test_normalize_empty_graph():
    np.testing.assert_array_equal(normalize_adjacency(np.zeros((2, 2))), np.eye(2))


def test_normalize_single_edge():
    np.testing.assert_allclose(normalize_adjacency(np.array([[0.0, 1.0], [1.0, 0.0]])), np.full((2, 2), 0.5))


def test_normalize_symmetric_and_bounded():
    rng = np.random.default_rng(0)
    A_hat = normalize_adjacency(random_graph(rng, 12))
    assert np.max(np.abs(A_hat - A_hat.T)) <= 1e-12
    full = normalize_adjacency(np.ones((7, 7)) - np.eye(7))
    assert np.max(np.abs(np.linalg.eigvalsh(full))) <= 1 + 1e-9


# ------------------------------------------------------------------
# forward and loss

def test_zero_first_layer_gives_uniform_loss():
    rng = np.random.default_rng(1)
    A, X, labels, params = random_problem(rng, C=3)
    params = GcnParams(np.zeros_like(params.W1), params.W2)
    A_hat = normalize_adjacency(A)
    np.testing.assert_array_equal(forward(params, A_hat, X), 0.0)
    loss, _ = loss_and_grads(params, A_hat, X, labels)
    assert abs(loss - math.log(3)) <= 1e-12


def test_zero_params_loss_is_log_c():
    rng = np.random.default_rng(2)
    for C in (2, 4, 7):
        A, X, labels, params = random_problem(rng, C=C)
        zero = GcnParams(np.zeros_like(params.W1), np.zeros_like(params.W2))
        loss, _ = loss_and_grads(zero, normalize_adjacency(A), X, labels)
        assert abs(loss - math.log(C)) <= 1e-12


def test_identity_forward_is_relu():
    X = np.random.default_rng(3).standard_normal((5, 4))
    params = GcnParams(np.eye(4), np.eye(4))
    np.testing.assert_array_equal(forward(params, np.eye(5), X), np.maximum(X, 0))


def test_forward_matches_loop_oracle():
    rng = np.random.default_rng(4)
    A = random_graph(rng, 8)
    X = rng.standard_normal((8, 5))
    W1, W2 = rng.standard_normal((5, 4)), rng.standard_normal((4, 3))
    got = forward(GcnParams(W1, W2), normalize_adjacency(A), X)
    np.testing.assert_allclose(got, naive_gcn_logits(W1, W2, A, X), atol=1e-10)


def test_forward_shape_mismatch():
    rng = np.random.default_rng(5)
    A, X, labels, params = random_problem(rng)
    with pytest.raises(DimensionError):
        forward(params, normalize_adjacency(A), X[:, :3])
    with pytest.raises(DimensionError):
        forward(params, np.eye(3), X)


def test_gradients_finite_differences_small():
    rng = np.random.default_rng(6)
    A, X, labels, params = random_problem(rng, n=6, d=4, h=3, C=2)
    A_hat = normalize_adjacency(A)
    _, grads = loss_and_grads(params, A_hat, X, labels)
    W1, W2 = params.W1.copy(), params.W2.copy()
    fd1 = central_diff(lambda M: loss_and_grads(GcnParams(M, W2), A_hat, X, labels)[0], W1, h=1e-5)
    fd2 = central_diff(lambda M: loss_and_grads(GcnParams(W1, M), A_hat, X, labels)[0], W2, h=1e-5)
    assert max_rel_err(fd1, grads.W1) < 1e-4
    assert max_rel_err(fd2, grads.W2) < 1e-4


def test_loss_invariant_to_duplicating_training_nodes():
    rng = np.random.default_rng(7)
    A, X, labels, params = random_problem(rng, n=7)
    n = A.shape[0]
    A2 = np.block([[A, np.zeros((n, n))], [np.zeros((n, n)), A]])
    X2 = np.vstack([X, X])
    lab2 = LabelVector(np.tile(labels.labels, 2), np.tile(labels.train_mask, 2),
                       np.tile(labels.val_mask, 2), np.tile(labels.test_mask, 2), labels.num_classes)
    l1, _ = loss_and_grads(params, normalize_adjacency(A), X, labels)
    l2, _ = loss_and_grads(params, normalize_adjacency(A2), X2, lab2)
    assert l1 == pytest.approx(l2, rel=1e-12)


def test_empty_mask_errors():
    rng = np.random.default_rng(8)
    A, X, labels, params = random_problem(rng)
    empty = np.zeros(A.shape[0], bool)
    with pytest.raises(InputError):
        loss_and_grads(params, normalize_adjacency(A), X, labels, empty)
    with pytest.raises(InputError):
        evaluate(params, normalize_adjacency(A), X, labels, empty)


def test_overlapping_masks_rejected():
    m = np.array([True, False])
    with pytest.raises(InputError):
        LabelVector(np.array([0, 1]), m, m, ~m)


def test_permutation_equivariance():
    rng = np.random.default_rng(9)
    A, X, labels, params = random_problem(rng, n=9, d=4, h=5, C=3)
    perm = rng.permutation(9)
    A_p = A[np.ix_(perm, perm)]
    lab_p = labels.permuted(perm)
    l1, _ = loss_and_grads(params, normalize_adjacency(A), X, labels)
    l2, _ = loss_and_grads(params, normalize_adjacency(A_p), X[perm], lab_p)
    assert abs(l1 - l2) <= 1e-10
    everyone = np.ones(9, bool)
    a1 = evaluate(params, normalize_adjacency(A), X, labels, everyone)
    a2 = evaluate(params, normalize_adjacency(A_p), X[perm], lab_p, everyone)
    assert a1 == a2


# ------------------------------------------------------------------
# evaluation

def test_evaluate_perfect_and_ties():
    X = np.eye(4)
    y = np.array([0, 1, 2, 3])
    params = GcnParams(np.eye(4), np.eye(4))
    assert evaluate(params, np.eye(4), X, y, np.ones(4, bool)) == 1.0

    zero = GcnParams(np.zeros((4, 3)), np.zeros((3, 2)))
    y2 = np.array([0, 1, 1, 0, 1])
    X2 = np.ones((5, 4))
    assert evaluate(zero, np.eye(5), X2, y2, np.ones(5, bool)) == pytest.approx(2 / 5)


def test_evaluate_matches_recount():
    rng = np.random.default_rng(10)
    A, X, labels, params = random_problem(rng, n=30, d=4, h=6, C=3)
    A_hat = normalize_adjacency(A)
    mask = rng.random(30) < 0.5
    logits = forward(params, A_hat, X)
    hits = 0
    total = 0
    for i in range(30):
        if mask[i]:
            best = 0
            for c in range(1, 3):
                if logits[i, c] > logits[i, best]:
                    best = c
            hits += best == labels.labels[i]
            total += 1
    assert evaluate(params, A_hat, X, labels, mask) == hits / total


# ------------------------------------------------------------------
# training

def two_cluster_problem(seed=0, n=40):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    A = np.zeros((n, n))
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        for a in idx:
            for b in idx:
                if a < b and rng.random() < 0.3:
                    A[a, b] = A[b, a] = 1.0
    X = np.where(y[:, None] == 0, 3.0, -3.0) * np.ones((n, 4)) + 0.5 * rng.standard_normal((n, 4))
    train_m = rng.random(n) < 0.7
    val_m = ~train_m
    return A, X, LabelVector(y, train_m, val_m, np.zeros(n, bool), 2)


def test_train_separable_reaches_full_accuracy():
    A, X, labels = two_cluster_problem()
    params, hist = train(A, X, labels, TrainConfig(seed=1))
    assert evaluate(params, normalize_adjacency(A), X, labels, labels.train_mask) == 1.0
    assert hist.epochs_run <= 250


def test_train_zero_lr_keeps_init():
    A, X, labels = two_cluster_problem()
    cfg = TrainConfig(learning_rate=0.0, epochs=20, seed=3)
    params, _ = train(A, X, labels, cfg)
    init = init_params(X.shape[1], cfg.hidden, 2, np.random.default_rng(3))
    np.testing.assert_array_equal(params.W1, init.W1)
    np.testing.assert_array_equal(params.W2, init.W2)


def test_train_deterministic():
    A, X, labels = two_cluster_problem(seed=4)
    p1, h1 = train(A, X, labels, TrainConfig(seed=5, epochs=60))
    p2, h2 = train(A, X, labels, TrainConfig(seed=5, epochs=60))
    assert h1 == h2
    np.testing.assert_array_equal(p1.W1, p2.W1)


def test_train_early_stopping():
    A, X, labels = two_cluster_problem(seed=6)
    _, hist = train(A, X, labels, TrainConfig(learning_rate=5.0, epochs=400, patience=5, seed=0))
    assert hist.stopped_early
    assert hist.epochs_run == hist.best_epoch + 6


def test_train_requires_label_vector():
    A, X, labels = two_cluster_problem()
    with pytest.raises(InputError):
        train(A, X, labels.labels)
