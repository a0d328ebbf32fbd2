"""Linear-affine systems with mixed time/energy cost and their
controllability structure."""

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .exceptions import DimensionMismatch, NotControllable, RNotSPD

__all__ = ['LinearAffineSystem', 'ControllabilityInfo', 'validate',
           'controllability_info', 'double_integrator']

# relative threshold of the column-scan independence test
SCAN_RTOL = 1e-10
SYMMETRY_TOL = 1e-12


def _as_matrix(x, name):
    a = np.array(x, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class LinearAffineSystem:
    """Dynamics ``xdot = A x + B u + c`` with running cost ``1 + u' R u``.

    Parameters
    ----------
    A : (n, n) array_like
    B : (n, m) array_like
        A 1-D array is read as a single column.
    c : (n,) array_like, optional
        Constant drift; zero when omitted.
    R : (m, m) array_like, optional
        Control weight; identity when omitted.

    Arrays are copied and made read-only so instances can be shared
    across workers.
    """

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray = None
    R: np.ndarray = None

    def __post_init__(self):
        A = _as_matrix(self.A, 'A')
        B = _as_matrix(self.B, 'B')
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got shape {A.shape}")
        if B.shape[0] != n:
            raise DimensionMismatch(
                f"B has {B.shape[0]} rows but A is {n}x{n}")
        m = B.shape[1]
        c = np.zeros(n) if self.c is None else np.array(self.c, dtype=float).ravel()
        if c.shape != (n,):
            raise DimensionMismatch(f"c must have length {n}, got {c.shape}")
        R = np.eye(m) if self.R is None else _as_matrix(self.R, 'R')
        if R.shape != (m, m):
            raise DimensionMismatch(f"R must be {m}x{m}, got {R.shape}")
        for name, val in (('A', A), ('B', B), ('c', c), ('R', R)):
            if not np.all(np.isfinite(val)):
                raise DimensionMismatch(f"{name} has non-finite entries")
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @cached_property
    def R_inv(self):
        out = np.linalg.inv(self.R)
        out.setflags(write=False)
        return out

    @cached_property
    def BRB(self):
        """``B R^{-1} B^T``, the Gramian integrand at s = 0."""
        out = self.B @ self.R_inv @ self.B.T
        out = 0.5 * (out + out.T)
        out.setflags(write=False)
        return out

    def digest(self):
        """Stable hex digest of (A, B, c, R), used to key caches."""
        return self._digest

    @cached_property
    def _digest(self):
        h = hashlib.sha256()
        for a in (self.A, self.B, self.c, self.R):
            h.update(np.ascontiguousarray(a, dtype='<f8').tobytes())
            h.update(str(a.shape).encode())
        return h.hexdigest()[:16]

    def to_dict(self):
        return {'A': self.A.tolist(), 'B': self.B.tolist(),
                'c': self.c.tolist(), 'R': self.R.tolist()}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d['A'], d['B'], d.get('c'), d.get('R'))
        except KeyError as exc:
            raise DimensionMismatch(f"system is missing field {exc}") from None

    def __repr__(self):
        return f"LinearAffineSystem(n={self.n}, m={self.m}, digest={self.digest()})"


@dataclass(frozen=True)
class ControllabilityInfo:
    """Result of the left-to-right scan of ``[B AB ... A^{n-1}B]``.

    ``indices[k]`` is the controllability index of column ``k`` of B,
    ``exponents`` the power of A attached to each selected vector in the
    order the scan meets them.
    """

    indices: tuple
    exponents: tuple
    nu: int
    D: int
    Dtilde: Fraction

    @property
    def n(self):
        return len(self.exponents)


def _column_scan(A, B):
    n, m = B.shape
    cols = []
    v = B.copy()
    for _ in range(n):
        cols.append(v)
        v = A @ v
    scale = max(max(np.linalg.norm(c, axis=0).max() for c in cols), 1e-300)
    tol = SCAN_RTOL * scale

    basis = np.zeros((n, 0))
    picked = []  # (power, column)
    dead = set()  # once A^j b_k depends on earlier columns, so do its successors
    for j, block in enumerate(cols):
        for k in range(m):
            if k in dead:
                continue
            w = block[:, k].copy()
            # two passes of modified Gram-Schmidt
            for _ in range(2):
                for i in range(basis.shape[1]):
                    w -= (basis[:, i] @ w) * basis[:, i]
            nrm = np.linalg.norm(w)
            if nrm > tol:
                basis = np.column_stack([basis, w / nrm])
                picked.append((j, k))
                if len(picked) == n:
                    return picked
            else:
                dead.add(k)
    return picked


def validate(sys):
    """Check the standing assumptions on ``sys``.

    Returns ``sys`` unchanged when R is symmetric positive definite and
    (A, B) is controllable.

    Raises
    ------
    RNotSPD
        R asymmetric or with a nonpositive eigenvalue (reported).
    NotControllable
        Rank deficit of the controllability matrix (reported).
    DimensionMismatch
        Inconsistent shapes (raised at construction).
    """
    R = sys.R
    asym = np.abs(R - R.T).max()
    if asym > SYMMETRY_TOL * max(1.0, np.abs(R).max()):
        raise RNotSPD(f"R is not symmetric (max |R - R^T| = {asym:.3g})")
    lam = np.linalg.eigvalsh(0.5 * (R + R.T))
    if lam[0] <= 0:
        raise RNotSPD(f"R is not positive definite: eigenvalue {lam[0]:.6g}",
                      eigenvalue=float(lam[0]))
    picked = _column_scan(sys.A, sys.B)
    if len(picked) < sys.n:
        raise NotControllable(len(picked), sys.n)
    return sys


def controllability_info(sys):
    """Controllability indices, exponents, index and determinant order.

    Examples
    --------
    >>> info = controllability_info(double_integrator(1))
    >>> info.indices, info.exponents, info.nu, info.D
    ((2,), (0, 1), 2, 4)
    """
    picked = _column_scan(sys.A, sys.B)
    if len(picked) < sys.n:
        raise NotControllable(len(picked), sys.n)
    indices = [0] * sys.m
    for _, k in picked:
        indices[k] += 1
    exponents = tuple(j for j, _ in picked)  # already ascending
    nu = max(indices)
    D = sum(v * v for v in indices)
    return ControllabilityInfo(indices=tuple(indices), exponents=exponents,
                               nu=nu, D=D, Dtilde=Fraction(sys.n + D, 2))


def double_integrator(dim=2, r=1.0, c=None):
    """Double integrator in ``dim`` axes, state ``(positions, velocities)``."""
    A = np.zeros((2 * dim, 2 * dim))
    A[:dim, dim:] = np.eye(dim)
    B = np.zeros((2 * dim, dim))
    B[dim:, :] = np.eye(dim)
    return LinearAffineSystem(A, B, c, r * np.eye(dim))
