"""Hot numeric kernels, each in a numba and a pure-numpy flavour.

Pairs are stored as two index arrays ``I`` (larger node) and ``J`` (smaller
node), 0-indexed.  For the full pair set the order is column-major over the
strictly lower triangle, which is the public edge-index order.

The dispatching names at the bottom (``laplacian_matrix``, ``adjoint_vector``,
...) pick the numba kernel unless it is disabled, see :mod:`lapdefense._accel`;
``pair_distances`` always runs the numpy twin, which measured faster.
Reductions in both flavours run in a fixed order so results are reproducible.
"""
import numpy as np

from ._accel import njit, use_numba

_CHUNK = 1 << 20


def full_pairs(n):
    """Return ``(I, J)`` for every unordered pair, in edge-index order."""
    rows, cols = np.triu_indices(n, k=1)
    return cols.astype(np.int64), rows.astype(np.int64)


# ---------------------------------------------------------------------------
# numba kernels

@njit
def _laplacian_matrix_nb(w, n):
    out = np.zeros((n, n))
    k = 0
    for j in range(n):
        for i in range(j + 1, n):
            v = w[k]
            out[i, j] = 0.0 - v
            out[j, i] = 0.0 - v
            out[i, i] += v
            out[j, j] += v
            k += 1
    return out


@njit
def _adjoint_vector_nb(Y):
    n = Y.shape[0]
    out = np.empty(n * (n - 1) // 2)
    k = 0
    for j in range(n):
        for i in range(j + 1, n):
            out[k] = Y[i, i] - Y[i, j] - Y[j, i] + Y[j, j]
            k += 1
    return out


@njit
def _pair_degrees_nb(w, I, J, n):
    deg = np.zeros(n)
    for k in range(w.shape[0]):
        deg[I[k]] += w[k]
        deg[J[k]] += w[k]
    return deg


@njit
def _lstar_l_nb(w, I, J, n):
    deg = _pair_degrees_nb(w, I, J, n)
    out = np.empty_like(w)
    for k in range(w.shape[0]):
        out[k] = deg[I[k]] + deg[J[k]] + 2.0 * w[k]
    return out


@njit
def _pair_distances_nb(X, I, J, p):
    m = I.shape[0]
    d = X.shape[1]
    out = np.empty(m)
    for k in range(m):
        a = I[k]
        b = J[k]
        s = 0.0
        for c in range(d):
            s += abs(X[a, c] - X[b, c]) ** p
        out[k] = s
    return out


# ---------------------------------------------------------------------------
# numpy twins

def _laplacian_matrix_np(w, n):
    I, J = full_pairs(n)
    out = np.zeros((n, n))
    out[I, J] = 0.0 - w
    out[J, I] = 0.0 - w
    out[np.diag_indices(n)] = _pair_degrees_np(w, I, J, n)
    return out


def _adjoint_vector_np(Y):
    n = Y.shape[0]
    I, J = full_pairs(n)
    diag = np.diagonal(Y)
    return diag[I] - Y[I, J] - Y[J, I] + diag[J]


def _pair_degrees_np(w, I, J, n):
    return np.bincount(I, weights=w, minlength=n) + np.bincount(J, weights=w, minlength=n)


def _lstar_l_np(w, I, J, n):
    deg = _pair_degrees_np(w, I, J, n)
    return deg[I] + deg[J] + 2.0 * w


def _pair_distances_np(X, I, J, p):
    out = np.empty(I.shape[0])
    step = max(1, _CHUNK // max(1, X.shape[1]))
    for s in range(0, I.shape[0], step):
        diff = np.abs(X[I[s:s + step]] - X[J[s:s + step]])
        out[s:s + step] = np.sum(diff ** p, axis=1)
    return out


# ---------------------------------------------------------------------------
# dispatch

def _as_float(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _as_index(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def laplacian_matrix(w, n):
    w = _as_float(w)
    if use_numba():
        return _laplacian_matrix_nb(w, n)
    return _laplacian_matrix_np(w, n)


def adjoint_vector(Y):
    Y = _as_float(Y)
    if use_numba():
        return _adjoint_vector_nb(Y)
    return _adjoint_vector_np(Y)


def pair_degrees(w, I, J, n):
    w, I, J = _as_float(w), _as_index(I), _as_index(J)
    if use_numba():
        return _pair_degrees_nb(w, I, J, n)
    return _pair_degrees_np(w, I, J, n)


def lstar_l(w, I, J, n):
    """Apply ``L* L`` to ``w`` supported on the pairs ``(I, J)``.

    Uses ``[L* L w]_k = deg_i + deg_j + 2 w_k`` so the n-by-n matrix is
    never formed.
    """
    w, I, J = _as_float(w), _as_index(I), _as_index(J)
    if use_numba():
        return _lstar_l_nb(w, I, J, n)
    return _lstar_l_np(w, I, J, n)


def pair_distances(X, I, J, p):
    # numpy's vectorized pow beats numba's scalar loop here (see
    # benchmarks/bench_kernels.py); called once per solve, so both paths use it
    X, I, J = _as_float(X), _as_index(I), _as_index(J)
    return _pair_distances_np(X, I, J, float(p))


NUMBA_KERNELS = {
    "laplacian_matrix": _laplacian_matrix_nb,
    "adjoint_vector": _adjoint_vector_nb,
    "lstar_l": _lstar_l_nb,
    "pair_distances": _pair_distances_nb,
}

NUMPY_KERNELS = {
    "laplacian_matrix": _laplacian_matrix_np,
    "adjoint_vector": _adjoint_vector_np,
    "lstar_l": _lstar_l_np,
    "pair_distances": _pair_distances_np,
}
