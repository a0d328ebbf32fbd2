"""Numerical kernel: matrix exponential, weighted controllability Gramian,
zero-input response and Gramian-weighted norms."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ExpOverflow, NotPositiveDefinite

__all__ = ['matrix_exponential', 'GramianAt', 'gramian', 'gramian_matrix',
           'zero_input_response', 'weighted_norm', 'spectrum', 'TauKernels',
           'tau_kernels']

EXP_CAP = 50.0


def matrix_exponential(M, t=1.0, cap=EXP_CAP):
    """Return ``exp(M t)``.

    Scaling-and-squaring with a Pade approximant (delegated to
    `scipy.linalg.expm`). A stack of matrices of shape ``(..., n, n)`` is
    accepted; the cap applies to every member.

    Raises
    ------
    ExpOverflow
        If ``||M t||_1`` exceeds ``cap`` or has non-finite entries.
    """
    Mt = np.asarray(M, dtype=float) * t
    if not np.all(np.isfinite(Mt)):
        raise ExpOverflow(np.inf, cap)
    norm = np.abs(Mt).sum(axis=-2).max() if Mt.size else 0.0
    if norm > cap:
        raise ExpOverflow(float(norm), cap)
    return scipy.linalg.expm(Mt)


def _van_loan_blocks(sys, t):
    n = sys.n
    t = np.atleast_1d(np.asarray(t, dtype=float))
    C = np.zeros((2 * n, 2 * n))
    C[:n, :n] = -sys.A
    C[:n, n:] = sys.BRB
    C[n:, n:] = sys.A.T
    F = matrix_exponential(C[None] * t[:, None, None])
    expAt = np.swapaxes(F[:, n:, n:], 1, 2)  # F22 = exp(A^T t)
    G = expAt @ F[:, :n, n:]
    return expAt, 0.5 * (G + np.swapaxes(G, 1, 2))


def _drift_blocks(sys, t):
    n = sys.n
    t = np.atleast_1d(np.asarray(t, dtype=float))
    C = np.zeros((n + 1, n + 1))
    C[:n, :n] = sys.A
    C[:n, n] = sys.c
    F = matrix_exponential(C[None] * t[:, None, None])
    return F[:, :n, n]


def gramian_matrix(sys, t):
    """``G(t)`` as a plain array (no factorization, ``t >= 0`` allowed)."""
    if t == 0:
        return np.zeros((sys.n, sys.n))
    return _van_loan_blocks(sys, t)[1][0]


@dataclass(frozen=True)
class GramianAt:
    """Weighted controllability Gramian at time ``t`` with ``G = L L^T``."""

    t: float
    G: np.ndarray
    L: np.ndarray

    @property
    def n(self):
        return self.G.shape[0]


def gramian(sys, t):
    """Weighted controllability Gramian ``int_0^t e^{As} B R^-1 B' e^{A's} ds``.

    Built from one exponential of the 2n x 2n block matrix
    ``[[-A, B R^-1 B'], [0, A']]`` and returned with its Cholesky factor.

    Raises
    ------
    NotPositiveDefinite
        When the factorization fails (``t`` too small for the
        numerical rank of G).
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    G = gramian_matrix(sys, t)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(t) from None
    return GramianAt(float(t), G, L)


def zero_input_response(sys, x0, t):
    """State reached from ``x0`` after time ``t`` with ``u = 0``."""
    x0 = np.asarray(x0, dtype=float)
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return x0.copy()
    return matrix_exponential(sys.A, t) @ x0 + _drift_blocks(sys, t)[0]


def weighted_norm(g, v):
    """``sqrt(v' G^-1 v)`` through a triangular solve with the factor."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return 0.0
    return float(np.linalg.norm(
        scipy.linalg.solve_triangular(g.L, v, lower=True)))


def spectrum(g):
    """Eigenvalues of G, largest first."""
    return np.linalg.eigvalsh(g.G)[::-1]


@dataclass
class TauKernels:
    """Per-time quantities needed to evaluate the fixed-time cost in bulk.

    Row ``k`` holds ``exp(A tau_k)``, the drift integral, ``G(tau_k)`` and the
    inverse Cholesky factor. ``ok[k]`` is False where the factorization
    failed; the cost at that time is then treated as infinite.
    """

    tau: np.ndarray
    Phi: np.ndarray
    h: np.ndarray
    G: np.ndarray
    Linv: np.ndarray
    ok: np.ndarray

    def __len__(self):
        return len(self.tau)


def tau_kernels(sys, taus):
    taus = np.asarray(taus, dtype=float)
    n = sys.n
    Phi, G = _van_loan_blocks(sys, taus)
    h = _drift_blocks(sys, taus)
    eye = np.eye(n)
    try:
        L = np.linalg.cholesky(G)
        ok = np.ones(len(taus), dtype=bool)
    except np.linalg.LinAlgError:
        L = np.zeros_like(G)
        ok = np.zeros(len(taus), dtype=bool)
        for k in range(len(taus)):
            try:
                L[k] = np.linalg.cholesky(G[k])
                ok[k] = True
            except np.linalg.LinAlgError:
                L[k] = eye
    Linv = np.linalg.solve(L, eye)
    Linv = np.tril(Linv)
    Linv[~ok] = 0.0
    return TauKernels(taus, Phi, h, G, Linv, ok)
