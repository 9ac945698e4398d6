"""Laplacian denoising by majorization-minimization.

Solves

    min_{w >= 0}  alpha * ||Lw - phi_n||_F^2 + beta * sum_k w_k * delta_k

where ``delta_k = ||x_i - x_j||_p^p`` for the pair ``k = (i, j)``.  Dividing by
``2 alpha`` gives the quadratic ``f(w) = 1/2 ||Lw||_F^2 - c.w`` (up to a
constant) whose gradient ``L*(Lw) - c`` is Lipschitz with constant ``2n``.
Each iteration minimizes the isotropic quadratic majorizer of ``f`` at the
current point over the non-negative orthant, i.e. a projected gradient step.

Two choices of ``c`` are offered:

``"algorithm1"``
    ``2 L*(phi_n) - beta/(2 alpha) delta``, the coefficient used by the
    published algorithm.  Its fixed point is not the minimizer of the
    objective above (the fidelity target is effectively ``2 phi_n``).
``"exact"``
    ``L*(phi_n) - beta/(2 alpha) delta``, which makes ``L*(Lw) - c`` the exact
    gradient of the objective divided by ``2 alpha``; monotone descent and
    convergence to the minimizer hold in this mode.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractError, DimensionError, InputError, NumericalError, ParameterError
from .graph import laplacian_op, laplacian_violations, nodes_from_pairs, pair_arrays

log = logging.getLogger(__name__)

C_MODES = ("algorithm1", "exact")
STEP_MODES = ("lipschitz", "fixed")
SUPPORTS = ("full", "input")


@dataclass(frozen=True)
class DenoiseConfig:
    alpha: float = 1.0
    beta: float = 1.0
    p: float = 2.4
    max_iters: int = 200
    rel_tol: float = 1e-4
    step_mode: str = "lipschitz"
    eta: float = 1e-3  # only read when step_mode == "fixed"
    c_mode: str = "algorithm1"
    support: str = "full"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not self.beta >= 0:
            raise ParameterError(f"beta must be non-negative, got {self.beta}")
        if not self.p > 1:
            raise ParameterError(f"p must exceed 1, got {self.p}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ParameterError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ParameterError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.step_mode not in STEP_MODES:
            raise ParameterError(f"step_mode must be one of {STEP_MODES}, got {self.step_mode!r}")
        if self.step_mode == "fixed" and not self.eta > 0:
            raise ParameterError(f"fixed step size must be positive, got {self.eta}")
        if self.c_mode not in C_MODES:
            raise ParameterError(f"c_mode must be one of {C_MODES}, got {self.c_mode!r}")
        if self.support not in SUPPORTS:
            raise ParameterError(f"support must be one of {SUPPORTS}, got {self.support!r}")

    def step_size(self, n):
        if self.step_mode == "lipschitz":
            return 1.0 / lipschitz_constant(n)
        return float(self.eta)


@dataclass(frozen=True)
class DenoiseResult:
    w_star: np.ndarray
    phi_star: np.ndarray
    objective_trace: np.ndarray
    iterations_run: int
    converged: bool
    config: DenoiseConfig = field(default_factory=DenoiseConfig)

    @property
    def n(self):
        return self.phi_star.shape[0]

    def adjacency(self):
        A = -self.phi_star.copy()
        np.fill_diagonal(A, 0.0)
        return A


def lipschitz_constant(n):
    """Largest eigenvalue of ``L* L`` on ``n`` nodes."""
    return 2.0 * n


class _Pairs:
    """Pair set the optimization runs over, plus the pieces of ``phi_n`` it needs."""

    def __init__(self, n, I, J):
        self.n = n
        self.I = np.ascontiguousarray(I, dtype=np.int64)
        self.J = np.ascontiguousarray(J, dtype=np.int64)

    @classmethod
    def full(cls, n):
        I, J = pair_arrays(n)
        return cls(n, I, J)

    @classmethod
    def from_laplacian_support(cls, phi):
        n = phi.shape[0]
        I, J = pair_arrays(n)
        keep = phi[I, J] < 0
        return cls(n, I[keep], J[keep])

    @property
    def size(self):
        return self.I.shape[0]


def _pairs_for(w_len, pairs):
    if pairs is not None:
        if pairs.size != w_len:
            raise DimensionError(f"vector of length {w_len} does not match {pairs.size} pairs")
        return pairs
    return _Pairs.full(nodes_from_pairs(w_len))


def feature_distances(X, p, pairs=None):
    """``delta_k = sum_m |X[i, m] - X[j, m]|^p`` for every pair ``k = (i, j)``."""
    if not p > 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"features must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("feature matrix contains non-finite entries")
    if pairs is None:
        pairs = _Pairs.full(X.shape[0])
    return kernels.pair_distances(X, pairs.I, pairs.J, p)


def _adjoint_on(phi, pairs):
    d = np.diagonal(phi)
    return d[pairs.I] + d[pairs.J] - phi[pairs.I, pairs.J] - phi[pairs.J, pairs.I]


def precompute_c(phi_n, delta, alpha, beta, c_mode="algorithm1", pairs=None):
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if c_mode not in C_MODES:
        raise ParameterError(f"c_mode must be one of {C_MODES}, got {c_mode!r}")
    phi_n = np.asarray(phi_n, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if pairs is None:
        pairs = _Pairs.full(phi_n.shape[0])
    if delta.shape != (pairs.size,):
        raise DimensionError(f"delta has shape {delta.shape}, expected ({pairs.size},)")
    scale = 2.0 if c_mode == "algorithm1" else 1.0
    return scale * _adjoint_on(phi_n, pairs) - (beta / (2.0 * alpha)) * delta


class _Fidelity:
    """Evaluates ``||Lw - phi_n||_F^2`` in O(pairs + n) from the weight vector.

    Off-diagonal entries contribute ``2 (w_k + phi_ij)^2`` per pair and the
    diagonal contributes ``(deg_i(w) - phi_ii)^2``; off-diagonal mass of
    ``phi_n`` outside the pair set is a constant.
    """

    def __init__(self, phi_n, pairs):
        self.pairs = pairs
        self.target = -phi_n[pairs.I, pairs.J]
        self.diag = np.diagonal(phi_n).copy()
        off = phi_n - np.diag(self.diag)
        self.outside = float(np.sum(off * off)) - 2.0 * float(np.dot(self.target, self.target))
        self.outside = max(self.outside, 0.0)

    def __call__(self, w):
        p = self.pairs
        r = w - self.target
        deg = kernels.pair_degrees(w, p.I, p.J, p.n)
        dd = deg - self.diag
        return 2.0 * float(np.dot(r, r)) + float(np.dot(dd, dd)) + self.outside


def objective(w, phi_n, delta, alpha, beta, pairs=None):
    """``alpha * ||Lw - phi_n||_F^2 + beta * w.delta`` with each edge counted once."""
    w = np.asarray(w, dtype=np.float64)
    phi_n = np.asarray(phi_n, dtype=np.float64)
    pairs = _pairs_for(w.shape[0], pairs)
    fid = _Fidelity(phi_n, pairs)
    return alpha * fid(w) + beta * float(np.dot(w, delta))


def gradient(w, c, pairs=None):
    """``L*(Lw) - c``."""
    w = np.asarray(w, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if w.shape != c.shape:
        raise DimensionError(f"w has shape {w.shape} but c has shape {c.shape}")
    pairs = _pairs_for(w.shape[0], pairs)
    return kernels.lstar_l(w, pairs.I, pairs.J, pairs.n) - c


def mm_step(w, c, eta=None, pairs=None):
    """One majorize-minimize update ``max(0, w - eta * grad)``.

    ``eta`` defaults to ``1 / (2n)``.
    """
    w = np.asarray(w, dtype=np.float64)
    pairs = _pairs_for(w.shape[0], pairs)
    if eta is None:
        eta = 1.0 / lipschitz_constant(pairs.n)
    if not eta > 0:
        raise ParameterError(f"step size must be positive, got {eta}")
    return np.maximum(w - eta * gradient(w, c, pairs), 0.0)


def run_denoise(phi_n, X, cfg=None):
    """Recover denoised edge weights from the noisy Laplacian ``phi_n``.

    Starts from the noisy graph's own weights (clamped at zero) and iterates
    :func:`mm_step` until the relative change
    ``||w_next - w|| / max(1, ||w||)`` drops below ``cfg.rel_tol`` or
    ``cfg.max_iters`` steps have run.
    """
    cfg = cfg or DenoiseConfig()
    phi_n = np.asarray(phi_n, dtype=np.float64)
    problems = laplacian_violations(phi_n)
    if problems:
        raise ContractError("noisy input is not a graph Laplacian: " + ", ".join(problems))
    n = phi_n.shape[0]
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != n:
        raise DimensionError(f"features have {X.shape[0]} rows but the graph has {n} nodes")

    if cfg.support == "full":
        pairs = _Pairs.full(n)
    else:
        pairs = _Pairs.from_laplacian_support(phi_n)

    delta = feature_distances(X, cfg.p, pairs)
    c = precompute_c(phi_n, delta, cfg.alpha, cfg.beta, cfg.c_mode, pairs)
    eta = cfg.step_size(n)
    fid = _Fidelity(phi_n, pairs)

    def value(w):
        return cfg.alpha * fid(w) + cfg.beta * float(np.dot(w, delta))

    w = np.maximum(-phi_n[pairs.I, pairs.J], 0.0)
    trace = [value(w)]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g = kernels.lstar_l(w, pairs.I, pairs.J, n) - c
        w_next = np.maximum(w - eta * g, 0.0)
        if not np.all(np.isfinite(w_next)):
            raise NumericalError("non-finite edge weights", iteration=it)
        trace.append(value(w_next))
        change = np.linalg.norm(w_next - w) / max(1.0, np.linalg.norm(w))
        w = w_next
        if change < cfg.rel_tol:
            converged = True
            break
    log.debug("denoise: n=%d pairs=%d iters=%d converged=%s", n, pairs.size, it, converged)

    if cfg.support == "full":
        w_star = w
    else:
        full_I, full_J = pair_arrays(n)
        w_star = np.zeros(full_I.shape[0])
        # position of pair (i, j), i > j, in the full 0-indexed ordering
        k = pairs.J * (2 * n - pairs.J - 1) // 2 + (pairs.I - pairs.J - 1)
        w_star[k] = w
    return DenoiseResult(
        w_star=w_star,
        phi_star=laplacian_op(w_star, n),
        objective_trace=np.asarray(trace),
        iterations_run=it,
        converged=converged,
        config=cfg,
    )
