"""Edge-weight vectors, the Laplacian operator and its adjoint, and
smoothness energies.

An edge-weight vector ``w`` has one entry per unordered node pair, laid out in
the order fixed by :func:`edge_index`.  Laplacians and adjacencies are dense
``n x n`` float arrays.
"""
import math

import numpy as np

from . import kernels
from .errors import ContractError, DimensionError, ParameterError, PreconditionError, ZeroEnergyError

LAPLACIAN_OFFDIAG_TOL = 1e-12
LAPLACIAN_ROWSUM_TOL = 1e-9
SYMMETRY_TOL = 1e-12


def num_pairs(n):
    return n * (n - 1) // 2


def nodes_from_pairs(m):
    """Return ``n`` such that ``n(n-1)/2 == m``; raise if there is none."""
    n = (1 + math.isqrt(1 + 8 * m)) // 2
    if num_pairs(n) != m or n < 1:
        raise DimensionError(f"length {m} is not n(n-1)/2 for any node count n")
    return n


def edge_index(i, j, n):
    """1-indexed position of the pair ``(i, j)``, ``i > j``, in a weight vector.

    >>> edge_index(3, 2, 4)
    4
    """
    if not (1 <= j < i <= n):
        raise PreconditionError(f"need 1 <= j < i <= n, got i={i}, j={j}, n={n}")
    return i - j + (j - 1) * (2 * n - j) // 2


def edge_pair(k, n):
    """Inverse of :func:`edge_index`: return the 1-indexed pair ``(i, j)``."""
    total = num_pairs(n)
    if not (1 <= k <= total):
        raise PreconditionError(f"edge index {k} outside [1, {total}] for n={n}")
    # columns are filled right to left from the end of the vector: the last
    # column holds one pair, the one before it two, and so on
    q = total - k
    g = (math.isqrt(8 * q + 1) - 1) // 2
    j0 = n - 2 - g
    i0 = (k - 1) - j0 * (2 * n - j0 - 1) // 2 + j0 + 1
    return i0 + 1, j0 + 1


def pair_arrays(n):
    """0-indexed ``(I, J)`` arrays with ``I > J`` for every pair, in weight order."""
    return kernels.full_pairs(n)


def _weight_vector(w, n=None):
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise DimensionError(f"edge weights must be 1-D, got shape {w.shape}")
    inferred = nodes_from_pairs(w.shape[0])
    if n is not None and n != inferred:
        raise DimensionError(f"{w.shape[0]} weights do not match n={n}")
    return w, inferred


def _square(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def laplacian_op(w, n=None):
    """Map edge weights to the combinatorial Laplacian ``Lw``."""
    w, n = _weight_vector(w, n)
    return kernels.laplacian_matrix(w, n)


def adjoint_op(Y):
    """Adjoint of :func:`laplacian_op` under the Frobenius inner product.

    Entry ``k`` for the pair ``(i, j)`` is ``Y[i,i] - Y[i,j] - Y[j,i] + Y[j,j]``.
    """
    Y = _square(Y, "Y")
    return kernels.adjoint_vector(Y)


def adjacency_from_weights(w, n=None):
    w, n = _weight_vector(w, n)
    if w.size and w.min() < 0:
        raise ContractError(f"edge weights must be non-negative, min is {w.min()!r}")
    A = -kernels.laplacian_matrix(w, n)
    np.fill_diagonal(A, 0.0)
    return A


def weights_from_adjacency(A):
    A = _square(A, "adjacency")
    I, J = pair_arrays(A.shape[0])
    return A[I, J].copy()


def weights_from_laplacian(phi):
    phi = _square(phi, "Laplacian")
    I, J = pair_arrays(phi.shape[0])
    return -phi[I, J]


def laplacian_violations(phi):
    """List the Laplacian invariants ``phi`` breaks (empty if it is valid)."""
    phi = _square(phi, "Laplacian")
    problems = []
    if not np.all(np.isfinite(phi)):
        problems.append("non-finite entries")
        return problems
    if np.max(np.abs(phi - phi.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.abs(phi).max(initial=0.0)):
        problems.append("not symmetric")
    off = phi - np.diag(np.diagonal(phi))
    if off.max(initial=0.0) > LAPLACIAN_OFFDIAG_TOL:
        problems.append("positive off-diagonal entry")
    if np.abs(phi.sum(axis=1)).max(initial=0.0) > LAPLACIAN_ROWSUM_TOL * max(1.0, np.abs(phi).max(initial=0.0)):
        problems.append("rows do not sum to zero")
    return problems


def is_laplacian(phi):
    return not laplacian_violations(phi)


def check_adjacency(A):
    A = _square(A, "adjacency")
    if not np.all(np.isfinite(A)):
        raise ContractError("adjacency has non-finite entries")
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.abs(A).max(initial=0.0)):
        raise ContractError("adjacency is not symmetric")
    if A.min(initial=0.0) < 0:
        raise ContractError("adjacency has negative entries")
    if np.any(np.diagonal(A) != 0):
        raise ContractError("adjacency has a non-zero diagonal")
    return A


def laplacian_from_adjacency(A):
    A = check_adjacency(A)
    return np.diag(A.sum(axis=1)) - A


# ---------------------------------------------------------------------------
# smoothness energies

def _graph_weights(graph):
    graph = np.asarray(graph, dtype=np.float64)
    if graph.ndim == 1:
        w, n = _weight_vector(graph)
        return w, n
    if graph.ndim == 2:
        A = _square(graph, "adjacency")
        return weights_from_adjacency(A), A.shape[0]
    raise DimensionError(f"graph must be a weight vector or adjacency matrix, got shape {graph.shape}")


def _features(f, n):
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2 or f.shape[0] != n:
        raise DimensionError(f"features have shape {f.shape}, expected {n} rows")
    return f


def p_dirichlet_energy(graph, f, p):
    """Half the ordered-pair sum of ``w_ij * ||f_i - f_j||_p^p``.

    ``graph`` is an adjacency matrix or an edge-weight vector; ``f`` holds one
    scalar or one feature row per node.
    """
    if not p > 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    w, n = _graph_weights(graph)
    f = _features(f, n)
    I, J = pair_arrays(n)
    nz = np.flatnonzero(w)
    if nz.size == 0:
        return 0.0
    dist = kernels.pair_distances(f, I[nz], J[nz], p)
    # each unordered pair appears twice in the ordered sum, cancelling the half
    return float(np.dot(w[nz], dist))


def dirichlet_energy(graph, f):
    """Quadratic smoothness energy, the ``p = 2`` case of :func:`p_dirichlet_energy`."""
    return p_dirichlet_energy(graph, f, 2.0)


def normalized_energy_curve(clean, perturbed, f, levels=None):
    """Dirichlet energy of each perturbed graph relative to the clean one.

    Returns ``[(0.0, 1.0), (level_1, ratio_1), ...]``.  ``levels`` defaults to
    ``1, 2, ...`` when not given.
    """
    perturbed = list(perturbed)
    if levels is None:
        levels = range(1, len(perturbed) + 1)
    levels = [float(x) for x in levels]
    if len(levels) != len(perturbed):
        raise DimensionError(f"{len(levels)} levels for {len(perturbed)} perturbed graphs")
    base = dirichlet_energy(clean, f)
    if base <= 0.0:
        raise ZeroEnergyError(
            "clean graph has zero Dirichlet energy for these features; "
            "the normalized curve is undefined (constant features or no edges?)"
        )
    curve = [(0.0, 1.0)]
    for level, g in zip(levels, perturbed):
        curve.append((level, dirichlet_energy(g, f) / base))
    return curve
