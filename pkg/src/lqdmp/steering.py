"""Obstacle-free optimal steering between two states.

The fixed-time cost ``c(tau) = tau + ||x1 - xbar(tau)||^2_{G(tau)^-1}`` is
minimized over the arrival time by a 64-point log-spaced scan followed by a
golden-section search. Arrival times live on a log-spaced lattice whose
coarse grid is every ``step``-th node; the golden-section probes are
rounded to lattice nodes so that the per-time kernels (exponential, drift
integral, inverse Cholesky factor) can be memoized and shared by many
state pairs at once. The lattice spacing in ``log tau`` never exceeds the
requested tolerance.
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import NoConnection, NotPositiveDefinite, OutOfDomain
from .gramian import (_drift_blocks, _van_loan_blocks, gramian,
                      matrix_exponential, tau_kernels, weighted_norm,
                      zero_input_response)

__all__ = ['SteeringResult', 'Trajectory', 'TauLattice', 'Steerer',
           'cost_fixed_time', 'optimal_steer', 'fixed_time_steer',
           'control_at', 'state_at', 'states_at', 'controls_at', 'reachable',
           'get_steerer']

GRID_POINTS = 64
TAU_MIN = 1e-4
COST_CAP = 1e6
DEFAULT_TOL = 1e-6
EAGER_LATTICE = 1 << 16

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = 1.0 - _INV_PHI


@dataclass(frozen=True, eq=False)
class SteeringResult:
    """Optimal (or fixed-time) connection ``x0 -> x1``.

    ``d = G(tau_star)^-1 (x1 - xbar(tau_star))`` parametrizes both the
    control and the state trajectory in closed form.
    """

    x0: np.ndarray
    x1: np.ndarray
    tau_star: float
    cost: float
    d: np.ndarray
    kind: str = 'optimal-time'

    @property
    def duration(self):
        return self.tau_star

    def to_dict(self):
        return {'x0': self.x0.tolist(), 'x1': self.x1.tolist(),
                'tau_star': self.tau_star, 'cost': self.cost,
                'd': self.d.tolist(), 'kind': self.kind}


@dataclass
class Trajectory:
    """Concatenation of steering segments; endpoints chain exactly."""

    segments: list = field(default_factory=list)

    @property
    def duration(self):
        return float(sum(s.tau_star for s in self.segments))

    @property
    def cost(self):
        return float(sum(s.cost for s in self.segments))

    def endpoints(self):
        if not self.segments:
            return None
        return self.segments[0].x0, self.segments[-1].x1

    def sample(self, sys, points_per_segment=32):
        """Stack of states along the trajectory, ``points_per_segment``
        per segment (including both ends)."""
        out = []
        for seg in self.segments:
            if seg.tau_star == 0:
                out.append(seg.x0[None])
                continue
            ts = np.linspace(0.0, seg.tau_star, points_per_segment)
            out.append(states_at(sys, seg, ts))
        if not out:
            return np.zeros((0, 0))
        return np.vstack(out)


def _lattice_size(tau_min, tau_max, tol):
    span = math.log(tau_max / tau_min)
    want = span / ((GRID_POINTS - 1) * tol)
    step = 1 if want <= 1 else 1 << math.ceil(math.log2(want))
    return step, (GRID_POINTS - 1) * step, span


class TauLattice:
    """Log-spaced arrival times ``tau_j = tau_min * exp(j * dlog)``.

    Node ``step * k`` is coarse grid point ``k`` (k = 0..63). Kernels are
    computed on first use and kept; the table is filled eagerly when it
    has at most 65536 nodes. Insertions are serialized by a lock, so a
    lattice may be shared between threads.
    """

    def __init__(self, sys, tau_max, tau_min=TAU_MIN, tol=DEFAULT_TOL):
        if not (0 < tau_min < tau_max):
            raise ValueError(f"need 0 < tau_min < tau_max, got {tau_min}, {tau_max}")
        if not (0 < tol <= 1e-2):
            raise ValueError(f"tol must lie in (0, 1e-2], got {tol}")
        self.sys = sys
        self.tau_min = float(tau_min)
        self.tau_max = float(tau_max)
        self.tol = float(tol)
        self.step, self.J, span = _lattice_size(tau_min, tau_max, tol)
        self.dlog = span / self.J
        self._lock = threading.Lock()
        coarse_j = np.arange(GRID_POINTS) * self.step
        self.coarse = tau_kernels(sys, self.taus(coarse_j))
        self.op = _GridOperator(self.coarse)
        self._prefix_ops = {GRID_POINTS: self.op}
        if self.J + 1 <= EAGER_LATTICE:
            self._store = _columns(tau_kernels(sys, self.taus(np.arange(self.J + 1))))
            self._keys = None
        else:
            # append-only rows (capacity doubles); sorted keys map to rows
            self._store = _columns(self.coarse)
            self._used = GRID_POINTS
            self._keys = coarse_j.astype(np.int64)
            self._keyrow = np.arange(GRID_POINTS, dtype=np.int64)

    def prefix_op(self, m):
        """Grid operator restricted to the ``m`` smallest coarse times."""
        op = self._prefix_ops.get(m)
        if op is None:
            op = self._prefix_ops[m] = _GridOperator(self.coarse, slice(0, m))
        return op

    def taus(self, j):
        j = np.asarray(j)
        t = self.tau_min * np.exp(j * self.dlog)
        return np.where(j == self.J, self.tau_max, t)

    @property
    def grid(self):
        return self.coarse.tau

    def _rows(self, j):
        j = np.asarray(j, dtype=np.int64)
        if self._keys is None:
            return j
        with self._lock:
            uniq = np.unique(j)
            pos = np.searchsorted(self._keys, uniq)
            pos_c = np.minimum(pos, len(self._keys) - 1)
            missing = uniq[self._keys[pos_c] != uniq]
            if missing.size:
                new = _columns(tau_kernels(self.sys, self.taus(missing)))
                lo, hi = self._used, self._used + missing.size
                if hi > len(self._store[0]):
                    cap = max(hi, 2 * len(self._store[0]))
                    self._store = [np.concatenate(
                        [a[:lo], np.empty((cap - lo,) + a.shape[1:], a.dtype)])
                        for a in self._store]
                for a, add in zip(self._store, new):
                    a[lo:hi] = add
                self._used = hi
                keys = np.concatenate([self._keys, missing])
                rows = np.concatenate([self._keyrow, np.arange(lo, hi, dtype=np.int64)])
                order = np.argsort(keys, kind='stable')
                self._keys, self._keyrow = keys[order], rows[order]
            return self._keyrow[np.searchsorted(self._keys, j)]

    def fetch(self, j):
        """Kernels at lattice indices ``j`` as (tau, Phi, h, Linv, ok)."""
        rows = self._rows(j)
        return tuple(a[rows] for a in self._store[:5])

    def packed(self, j):
        """``(tau, P)`` at lattice indices ``j`` where the fixed-time cost
        is ``tau + |P [x1; x0; 1]|^2`` (``tau = inf`` where G failed)."""
        rows = self._rows(j)
        return self._store[5][rows], self._store[6][rows]


def _columns(kern):
    """Per-time arrays kept by a lattice: the raw kernels plus the packed
    affine map ``[Linv, -Linv Phi, -Linv h]``."""
    tpen = np.where(kern.ok, kern.tau, np.inf)
    pack = np.concatenate([kern.Linv, -kern.Linv @ kern.Phi,
                           -np.einsum('kij,kj->ki', kern.Linv, kern.h)[..., None]],
                          axis=2)
    return [kern.tau, kern.Phi, kern.h, kern.Linv, kern.ok, tpen, pack]


class _GridOperator:
    """Fixed-time costs at ``K`` times for many pairs, as one product.

    With ``y_k = Linv_k x1 - Linv_k Phi_k x0 - Linv_k h_k`` the cost at time
    ``k`` is ``tau_k + |y_k|^2``; stacking the ``K`` linear maps turns the
    whole grid into a single ``(P, 2n) @ (2n, nK)`` matrix product.
    """

    chunk = 128

    def __init__(self, kern, sel=None):
        if sel is None:
            sel = slice(None)
        tau = kern.tau[sel]
        M1 = kern.Linv[sel]
        M0 = M1 @ kern.Phi[sel]
        b = np.einsum('kij,kj->ki', M1, kern.h[sel])
        K, n = len(tau), M1.shape[1]
        # column i*K + k holds component i of y_k
        self.W1 = np.ascontiguousarray(M1.transpose(2, 1, 0).reshape(n, n * K))
        self.W0 = np.ascontiguousarray(-M0.transpose(2, 1, 0).reshape(n, n * K))
        self.b = b.T.reshape(-1)
        self.tau = tau
        self.bad = ~kern.ok[sel]
        self.K, self.n = K, n

    def __call__(self, X0, X1):
        """Cost table of shape ``(P, K)``; a 1-D argument is broadcast."""
        K, n = self.K, self.n
        one0, one1 = X0.ndim == 1, X1.ndim == 1
        P = 1 if one0 and one1 else (X1 if one0 else X0).shape[0]
        out = np.empty((P, K))
        shift = self.b
        if one0:
            shift = shift - X0 @ self.W0
        elif one1:
            shift = shift - X1 @ self.W1
        for s in range(0, P, self.chunk):
            if one0:
                Y = np.atleast_2d(X1 if one1 else X1[s:s + self.chunk]) @ self.W1
            elif one1:
                Y = X0[s:s + self.chunk] @ self.W0
            else:
                Y = X1[s:s + self.chunk] @ self.W1
                Y += X0[s:s + self.chunk] @ self.W0
            Y -= shift
            Y *= Y
            o = out[s:s + self.chunk]
            o[:] = Y[:, :K]
            for i in range(1, n):
                o += Y[:, i * K:(i + 1) * K]
        out += self.tau
        out[:, self.bad] = np.inf
        return out


class Steerer:
    """Batched optimal-cost queries for one system.

    Parameters
    ----------
    sys : LinearAffineSystem
    tau_max : float
        Upper end of the arrival-time search.
    tol : float, optional
        Golden-section tolerance (relative, in ``tau``; the cost is then
        accurate to roughly ``tol**2``).
    fixed_tau : float, optional
        When given, every connection uses this arrival time and the cost
        is the fixed-time cost; no search is performed.

    Counters ``grid_pairs`` and ``refined_pairs`` record the work done.
    """

    def __init__(self, sys, tau_max, tol=DEFAULT_TOL, tau_min=TAU_MIN,
                 cost_cap=COST_CAP, fixed_tau=None, lattice=None):
        self.sys = sys
        self.tau_max = float(tau_max)
        self.tau_min = float(tau_min)
        self.tol = float(tol)
        self.cost_cap = float(cost_cap)
        self.fixed_tau = None if fixed_tau is None else float(fixed_tau)
        self.grid_pairs = 0
        self.refined_pairs = 0
        if self.fixed_tau is None:
            self.lattice = lattice or get_lattice(sys, tau_max, tau_min, tol)
            self._fixed = None
        else:
            if not self.fixed_tau > 0:
                raise ValueError("fixed_tau must be positive")
            self.lattice = None
            self._fixed_kern = tau_kernels(sys, [self.fixed_tau])
            if not self._fixed_kern.ok[0]:
                raise NotPositiveDefinite(self.fixed_tau)
            self._fixed = _GridOperator(self._fixed_kern)
        # pruning constants
        self._normA = float(np.linalg.norm(sys.A, 2))
        self._prune_memo = {}

    @property
    def kind(self):
        return 'optimal-time' if self.fixed_tau is None else 'fixed-time'

    # -- helpers ---------------------------------------------------------

    def _degenerate(self, X0, X1):
        """Pairs with ``x0 == x1`` at an equilibrium of the drift."""
        X0b, X1b = np.broadcast_arrays(np.atleast_2d(X0), np.atleast_2d(X1))
        same = np.all(X0b == X1b, axis=1)
        if not same.any():
            return same
        flow = X0b[same] @ self.sys.A.T + self.sys.c
        scale = 1e-12 * (1.0 + np.abs(X0b[same]).max(axis=1))
        same[same] = np.abs(flow).max(axis=1) <= scale
        return same

    def coarse_lower_bound(self, kbest):
        """Lower bound on the refined cost of a pair whose best grid
        index is ``kbest`` (every probe lies at ``tau >= tau_{k-1}``)."""
        kbest = np.asarray(kbest)
        lb = self.lattice.grid[np.maximum(kbest - 1, 0)]
        return np.where(kbest < 0, 0.0, lb)

    def prune_mask(self, X0, X1, r):
        """True where ``c*(x0, x1) >= r`` is certain without evaluating.

        Uses ``c(tau) >= tau`` and ``||v||^2_{G^-1} >= ||v||^2 / lambda_max(G)``
        with G nondecreasing in time, together with a bound on how far the
        zero-input response drifts from ``x0`` before ``min(r, tau_max)``.
        """
        T = min(r, self.tau_max if self.fixed_tau is None else self.fixed_tau)
        key = round(T, 15)
        if key not in self._prune_memo:
            lam = np.linalg.eigvalsh(gramian(self.sys, T).G)[-1]
            a = self._normA
            psi = T if a == 0 else math.expm1(a * T) / a
            self._prune_memo[key] = (math.sqrt(lam * r), psi)
        reach, psi = self._prune_memo[key]
        X0 = np.atleast_2d(X0)
        X1 = np.atleast_2d(X1)
        drift = np.linalg.norm(X0 @ self.sys.A.T + self.sys.c, axis=1)
        dist = np.linalg.norm(X1 - X0, axis=1)
        bound = (reach + psi * drift) * (1 + 1e-9) + 1e-12
        return dist > bound

    # -- core queries ----------------------------------------------------

    def grid(self, X0, X1):
        """Best coarse-grid cost and its index for each pair.

        For the fixed-time variant the returned cost is exact and the
        index is -1. Degenerate equilibrium pairs get cost 0, index -1.
        """
        X0 = np.asarray(X0, dtype=float)
        X1 = np.asarray(X1, dtype=float)
        P = max(np.atleast_2d(X0).shape[0], np.atleast_2d(X1).shape[0])
        self.grid_pairs += P
        if self._fixed is not None:
            c = self._fixed(X0, X1)[:, 0]
            c = np.where(c > self.cost_cap, np.inf, c)
            return np.broadcast_to(c, (P,)).copy(), np.full(P, -1)
        c = self.lattice.op(X0, X1)
        kb = np.argmin(c, axis=1)
        U = c[np.arange(len(kb)), kb]
        if len(kb) != P:
            U, kb = np.full(P, U[0]), np.full(P, kb[0])
        deg = self._degenerate(X0, X1)
        if deg.any():
            deg = np.broadcast_to(deg, (P,))
            U[deg] = 0.0
            kb[deg] = -1
        return U, kb

    def refine(self, X0, X1, U, kbest):
        """Golden-section refinement around each pair's best grid point.

        The bracket ``[tau_{k-1}, tau_{k+1}]`` around grid point ``k`` is
        searched on lattice nodes until at most four remain, which are then
        evaluated exhaustively. The smallest cost seen (ties: earliest
        time) is returned, so the result never exceeds the grid value.

        Returns ``(cost, j)`` where ``j`` is the lattice index of the
        minimizer (-1 for exact/degenerate inputs). Costs above the cap
        become ``inf``.
        """
        U = np.asarray(U, dtype=float)
        kbest = np.asarray(kbest, dtype=np.int64)
        best = U.copy()
        s = 0 if self.lattice is None else self.lattice.step
        jbest = np.where(kbest >= 0, kbest * s, -1)
        todo = np.flatnonzero((kbest >= 0) & np.isfinite(U))
        if self.lattice is None or s == 1 or not todo.size:
            return np.where(best > self.cost_cap, np.inf, best), jbest
        self.refined_pairs += todo.size
        lat = self.lattice
        X0 = np.asarray(X0, dtype=float)
        X1 = np.asarray(X1, dtype=float)
        m = todo.size
        Z = np.empty((m, 2 * self.sys.n + 1))
        n = self.sys.n
        Z[:, :n] = X1 if X1.ndim == 1 else X1[todo]
        Z[:, n:2 * n] = X0 if X0.ndim == 1 else X0[todo]
        Z[:, 2 * n] = 1.0
        bj = jbest[todo]
        bv = best[todo]

        tpen, pack = lat._store[5], lat._store[6]
        dense = lat._keys is None

        def probe(j):
            if dense:
                tau, P = tpen[j], pack[j]
            else:
                tau, P = lat.packed(j)
            y = np.einsum('pij,pj->pi', P, Z)
            v = tau + np.einsum('pi,pi->p', y, y)
            better = (v < bv) | ((v == bv) & (j < bj))
            np.copyto(bv, v, where=better)
            np.copyto(bj, j, where=better)
            return v

        k = kbest[todo]
        last = GRID_POINTS - 1
        a = np.maximum(k - 1, 0) * s
        b = np.minimum(k + 1, last) * s
        L = b - a
        c = a + np.floor(L * _INV_PHI2).astype(np.int64)
        d = a + np.ceil(L * _INV_PHI).astype(np.int64)
        fc = probe(c)
        fd = probe(d)
        # all brackets start with length s or 2s, so they advance in lockstep
        while True:
            act = b - a > 3
            if not act.any():
                break
            left = fc <= fd
            na = np.where(left, a, c)
            nb = np.where(left, d, b)
            span = nb - na
            nc = np.where(left, np.minimum(
                na + np.floor(span * _INV_PHI2).astype(np.int64), c - 1), d)
            nd = np.where(left, c, np.maximum(
                na + np.ceil(span * _INV_PHI).astype(np.int64), d + 1))
            v = probe(np.where(act, np.where(left, nc, nd), bj))
            nfc = np.where(left, v, fd)
            nfd = np.where(left, fc, v)
            a = np.where(act, na, a)
            b = np.where(act, nb, b)
            c = np.where(act, nc, c)
            d = np.where(act, nd, d)
            fc = np.where(act, nfc, fc)
            fd = np.where(act, nfd, fd)
        for off in range(4):
            j = a + off
            probe(np.where(j <= b, j, bj))
        best[todo] = bv
        jbest[todo] = bj
        return np.where(best > self.cost_cap, np.inf, best), jbest

    def costs(self, X0, X1):
        """Optimal cost and arrival time for each pair (``inf`` when the
        cost exceeds the cap)."""
        U, kb = self.grid(X0, X1)
        cost, j = self.refine(X0, X1, U, kb)
        if self.fixed_tau is not None:
            tau = np.full(len(cost), self.fixed_tau)
        else:
            tau = np.where(j >= 0, self.lattice.taus(np.maximum(j, 0)), 0.0)
        return cost, tau

    def within(self, X0, X1, r, prune=True):
        """Mask of pairs with ``c*(x0, x1) < r``.

        Agrees exactly with ``costs(X0, X1)[0] < r`` but exits early: any
        coarse grid time with cost below ``r`` settles the pair, and grid
        times ``>= r`` are skipped because ``c(tau) >= tau``.
        """
        X0 = np.asarray(X0, dtype=float)
        X1 = np.asarray(X1, dtype=float)
        P = max(np.atleast_2d(X0).shape[0], np.atleast_2d(X1).shape[0])
        out = np.zeros(P, dtype=bool)
        if not r > 0:
            return out
        cand = np.arange(P)
        if prune:
            cand = cand[~np.broadcast_to(self.prune_mask(X0, X1, r), (P,))]
        if not cand.size:
            return out
        a = X0 if X0.ndim == 1 else X0[cand]
        b = X1 if X1.ndim == 1 else X1[cand]
        if self._fixed is not None:
            c, _ = self.grid(a, b)
            out[cand] = c < r
            return out
        self.grid_pairs += cand.size
        deg = np.broadcast_to(self._degenerate(a, b), (cand.size,))
        grid = self.lattice.grid
        low = np.flatnonzero(grid < r)
        hit = deg.copy()
        if low.size:
            c = self.lattice.prefix_op(low.size)(a, b)
            hit |= (c < r).any(axis=1)
        out[cand[hit]] = True
        rest = np.flatnonzero(~hit)
        if rest.size:
            aa = a if a.ndim == 1 else a[rest]
            bb = b if b.ndim == 1 else b[rest]
            U, kb = self.grid(aa, bb)
            self.grid_pairs -= rest.size
            # the refined cost is >= tau_{k-1}; only brackets reaching below r matter
            maybe = np.flatnonzero(self.coarse_lower_bound(kb) < r)
            if maybe.size:
                a2 = aa if aa.ndim == 1 else aa[maybe]
                b2 = bb if bb.ndim == 1 else bb[maybe]
                cost, _ = self.refine(a2, b2, U[maybe], kb[maybe])
                out[cand[rest[maybe[cost < r]]]] = True
        return out

    def steer(self, x0, x1):
        """Single optimal (or fixed-time) connection as a `SteeringResult`.

        Raises
        ------
        NoConnection
            When the best cost found exceeds the cost cap.
        """
        x0 = np.array(x0, dtype=float)
        x1 = np.array(x1, dtype=float)
        U, kb = self.grid(x0, x1)
        cost, j = self.refine(x0, x1, U, kb)
        if not np.isfinite(cost[0]):
            raise NoConnection(
                f"no arrival time in [{self.tau_min:g}, {self.tau_max:g}] "
                f"gives a cost below {self.cost_cap:g}")
        return self.result(x0, x1, int(j[0]), float(cost[0]))

    def result(self, x0, x1, j, cost):
        """`SteeringResult` for a pair already solved to lattice index ``j``
        with cost ``cost`` (``j = -1``: fixed time, or degenerate pair)."""
        x0 = np.asarray(x0, dtype=float)
        x1 = np.asarray(x1, dtype=float)
        if self.fixed_tau is not None:
            k = self._fixed_kern
            tau, Phi, h, Linv = self.fixed_tau, k.Phi[0], k.h[0], k.Linv[0]
            kind = 'fixed-time'
        elif j < 0:
            return SteeringResult(x0, x1, 0.0, 0.0, np.zeros_like(x0),
                                  'optimal-time')
        else:
            t, Ph, hh, Li, _ = self.lattice.fetch([j])
            tau, Phi, h, Linv = float(t[0]), Ph[0], hh[0], Li[0]
            kind = 'optimal-time'
        d = Linv.T @ (Linv @ (x1 - Phi @ x0 - h))
        return SteeringResult(x0, x1, tau, float(cost), d, kind)

_LATTICES = {}
_LATTICE_LOCK = threading.Lock()


def get_lattice(sys, tau_max, tau_min=TAU_MIN, tol=DEFAULT_TOL):
    """Shared `TauLattice` keyed by system digest and lattice parameters."""
    key = (sys.digest(), float(tau_min), float(tau_max), float(tol))
    with _LATTICE_LOCK:
        lat = _LATTICES.get(key)
        if lat is None:
            if len(_LATTICES) > 32:
                _LATTICES.clear()
            lat = _LATTICES[key] = TauLattice(sys, tau_max, tau_min, tol)
    return lat


def get_steerer(sys, tau_max, tol=DEFAULT_TOL, tau_min=TAU_MIN,
                cost_cap=COST_CAP, fixed_tau=None):
    return Steerer(sys, tau_max, tol=tol, tau_min=tau_min, cost_cap=cost_cap,
                   fixed_tau=fixed_tau)


def cost_fixed_time(sys, x0, x1, tau):
    """Minimal cost of reaching ``x1`` from ``x0`` in exactly ``tau``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    g = gramian(sys, tau)
    v = np.asarray(x1, dtype=float) - zero_input_response(sys, x0, tau)
    return tau + weighted_norm(g, v) ** 2


def fixed_time_steer(sys, x0, x1, tau):
    x0 = np.array(x0, dtype=float)
    x1 = np.array(x1, dtype=float)
    g = gramian(sys, tau)
    v = x1 - zero_input_response(sys, x0, tau)
    d = scipy.linalg.cho_solve((g.L, True), v)
    return SteeringResult(x0, x1, float(tau), float(tau + v @ d), d,
                          'fixed-time')


def optimal_steer(sys, x0, x1, tau_max, tol=DEFAULT_TOL, tau_min=TAU_MIN,
                  cost_cap=COST_CAP):
    """Optimal connection ``x0 -> x1`` over arrival times in
    ``[tau_min, tau_max]``.

    Parameters
    ----------
    sys : LinearAffineSystem
    x0, x1 : (n,) array_like
    tau_max : float
    tol : float, optional
        Golden-section tolerance, in ``(0, 1e-2]``.

    Returns
    -------
    SteeringResult
        Zero duration and zero cost when ``x0 == x1`` is an equilibrium of
        the drift.

    Raises
    ------
    NoConnection
        If every arrival time costs more than ``cost_cap``.

    Examples
    --------
    >>> from lqdmp.system import double_integrator
    >>> res = optimal_steer(double_integrator(1), [0, 0], [1, 0], tau_max=10)
    >>> round(res.tau_star, 5), round(res.cost, 5)
    (2.44949, 3.26599)
    """
    st = Steerer(sys, tau_max, tol=tol, tau_min=tau_min, cost_cap=cost_cap)
    return st.steer(x0, x1)


def _check_t(r, t):
    slack = 1e-12 * max(1.0, r.tau_star)
    t = np.asarray(t, dtype=float)
    if np.any(t < -slack) or np.any(t > r.tau_star + slack):
        raise OutOfDomain(f"t must lie in [0, {r.tau_star}]")
    return np.clip(t, 0.0, r.tau_star)


def control_at(sys, r, t):
    """Optimal input ``R^-1 B' exp(A'(tau* - t)) d`` at time ``t``."""
    t = float(_check_t(r, t))
    E = matrix_exponential(sys.A.T, r.tau_star - t)
    return sys.R_inv @ sys.B.T @ E @ r.d


def controls_at(sys, r, ts):
    ts = _check_t(r, ts)
    E = matrix_exponential(sys.A.T[None] * (r.tau_star - ts)[:, None, None])
    return (E @ r.d) @ (sys.R_inv @ sys.B.T).T


def state_at(sys, r, t):
    """State ``xbar(t) + G(t) exp(A'(tau* - t)) d`` along the connection."""
    return states_at(sys, r, np.array([t]))[0]


def states_at(sys, r, ts):
    """Vectorized `state_at` for an array of times."""
    ts = _check_t(r, np.atleast_1d(ts))
    out = np.empty((len(ts), sys.n))
    zero = ts == 0
    out[zero] = r.x0
    pos = ~zero
    if pos.any():
        t = ts[pos]
        expAt, G = _van_loan_blocks(sys, t)
        h = _drift_blocks(sys, t)
        E = matrix_exponential(sys.A.T[None] * (r.tau_star - t)[:, None, None])
        out[pos] = expAt @ r.x0 + h + (G @ (E @ r.d)[..., None])[..., 0]
    return out


def reachable(sys, x, y, r, direction='forward', tau_max=10.0,
              tol=DEFAULT_TOL, prune=True, steerer=None):
    """Whether ``y`` is in the forward (``c*(x, y) < r``) or backward
    (``c*(y, x) < r``) reachable set of ``x``. Failures count as
    unreachable."""
    st = steerer or Steerer(sys, tau_max, tol=tol)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if direction == 'forward':
        return bool(st.within(x, y, r, prune=prune)[0])
    if direction == 'backward':
        return bool(st.within(y, x, r, prune=prune)[0])
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
