"""Seeded structure attacks that only insert edges."""
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError
from .graph import check_adjacency

KINDS = ("random_insert", "dissimilar_insert")


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str = "random_insert"
    rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.rate >= 0:
            raise ParameterError(f"rate must be non-negative, got {self.rate}")


def _absent_pairs(A):
    # column-major lower-triangle order, i.e. ascending edge index
    rows, cols = np.triu_indices(A.shape[0], k=1)
    I, J = cols, rows
    absent = A[I, J] == 0
    return I[absent], J[absent]


def _budget(A, rate, available):
    m = int(np.count_nonzero(np.triu(A, 1)))
    k = int(np.floor(rate * m + 1e-9))
    if k > available:
        raise CapacityError(f"{k} insertions requested but only {available} node pairs are free")
    return k


def _insert(A, I, J):
    out = A.copy()
    out[I, J] = 1.0
    out[J, I] = 1.0
    return out


def random_edge_insertion(A, spec):
    """Insert ``floor(rate * m)`` edges drawn uniformly from the absent pairs."""
    if spec.kind != "random_insert":
        raise ParameterError(f"expected a random_insert spec, got {spec.kind!r}")
    A = check_adjacency(A)
    I, J = _absent_pairs(A)
    k = _budget(A, spec.rate, I.shape[0])
    if k == 0:
        return A.copy()
    rng = np.random.default_rng(spec.seed)
    pick = np.sort(rng.choice(I.shape[0], size=k, replace=False))
    return _insert(A, I[pick], J[pick])


def dissimilar_edge_insertion(A, X, spec):
    """Insert the ``floor(rate * m)`` absent pairs with the largest feature distance.

    Ties are broken toward the lower edge index.  The result does not depend on
    ``spec.seed``.
    """
    if spec.kind != "dissimilar_insert":
        raise ParameterError(f"expected a dissimilar_insert spec, got {spec.kind!r}")
    A = check_adjacency(A)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    I, J = _absent_pairs(A)
    k = _budget(A, spec.rate, I.shape[0])
    if k == 0:
        return A.copy()
    dist = np.sqrt(np.sum((X[I] - X[J]) ** 2, axis=1))
    # stable sort on -dist keeps ascending edge index among ties
    order = np.argsort(-dist, kind="stable")[:k]
    return _insert(A, I[order], J[order])


def apply_perturbation(A, X, spec):
    if spec.kind == "random_insert":
        return random_edge_insertion(A, spec)
    return dissimilar_edge_insertion(A, X, spec)


def perturbation_stats(A_clean, A_pert):
    """Return ``(added, removed, ratio)`` over undirected edge sets."""
    A_clean = np.asarray(A_clean)
    A_pert = np.asarray(A_pert)
    if A_clean.shape != A_pert.shape:
        raise ParameterError(f"graphs differ in size: {A_clean.shape} vs {A_pert.shape}")
    clean = np.triu(A_clean, 1) != 0
    pert = np.triu(A_pert, 1) != 0
    added = int(np.count_nonzero(pert & ~clean))
    removed = int(np.count_nonzero(clean & ~pert))
    m = int(np.count_nonzero(clean))
    ratio = (added + removed) / m if m else (0.0 if added + removed == 0 else float("inf"))
    return added, removed, float(ratio)
