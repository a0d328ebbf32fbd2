"""DFMT* and DPRM* over a sampled vertex set, the asymptotic connection
radius, directed near sets and a serializable neighbor cache.

Both planners read pair costs through `PairCosts`, which evaluates the
64-point arrival-time grid for one source vertex against many targets and
refines (golden section) only the pairs whose exact cost can still change
a decision. A pair is refined at most once; the exact value then replaces
the grid value. Since ``c(tau) >= tau``, a pair whose best grid point is
``k`` has exact cost at least ``tau_{k-1}``, which is the lower bound used
to skip refinements.
"""

import heapq
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import CacheMismatch
from .gramian import gramian_matrix
from .steering import COST_CAP, Steerer, Trajectory
from .system import controllability_info
from .world import (collision_free, default_dt, free_volume, in_goal,
                    make_rng, sample_free, sample_goal)

__all__ = ['PlannerConfig', 'PlanGraph', 'Plan', 'radius', 'estimate_C_mu',
           'theorem_radius', 'unit_ball_volume', 'sample_vertices', 'near',
           'NeighborCache', 'PairCosts', 'dfmt_star', 'dprm_star',
           'make_steerer', 'TraceResult', 'tracing_probe']

CACHE_VERSION = 1
PLAN_TOL = 1e-2


@dataclass(frozen=True)
class PlannerConfig:
    """Planner settings.

    ``fixed_tau`` selects the fixed-time variant; otherwise arrival times
    are optimized. When ``radius_override`` is None the connection radius
    follows the asymptotic formula with free parameter ``eta``.
    ``tau_max`` defaults to the scenario's value and ``goal_samples`` to
    ``max(1, N // 100)``.
    """

    N: int = 1000
    eta: float = 0.5
    radius_override: float = None
    tau_max: float = None
    collision_dt: float = None
    fixed_tau: float = None
    cache_neighbors: bool = False
    cost_cap: float = COST_CAP
    steer_tol: float = PLAN_TOL
    goal_samples: int = None
    tau_mu: float = 1.0
    prune: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.radius_override is not None and not self.radius_override > 0:
            raise ValueError("radius_override must be positive")
        if self.fixed_tau is not None and not self.fixed_tau > 0:
            raise ValueError("fixed_tau must be positive")

    @property
    def variant(self):
        if self.fixed_tau is None:
            return 'optimal-tau'
        return f'fixed-tau({self.fixed_tau:g})'

    def n_goal(self):
        if self.goal_samples is None:
            return max(1, self.N // 100)
        return int(self.goal_samples)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# -- connection radius ----------------------------------------------------

def unit_ball_volume(n):
    """Volume of the Euclidean unit ball in ``n`` dimensions."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def radius(info, mu_free, C_mu, eta, N):
    """Asymptotic connection radius ``r_N``.

    ``r_N = (1+eta)^(1/Dt) (6^(n+D/2) 2^(n/2) mu_free / (C_mu Dt))^(1/Dt)
    (log N / N)^(1/Dt)`` with ``Dt = (n + D) / 2``.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    n, D = info.n, info.D
    Dt = float(info.Dtilde)
    const = 6.0 ** (n + D / 2) * 2.0 ** (n / 2) * mu_free / (C_mu * Dt)
    return ((1 + eta) * const * math.log(N) / N) ** (1 / Dt)


def estimate_C_mu(sys, tau_mu, points=32):
    """Smallest value of ``zeta_n sqrt(det G(tau)) / tau^(D/2)`` over the
    grid ``tau = tau_mu k / points``, ``k = 1..points``."""
    if not tau_mu > 0:
        raise ValueError("tau_mu must be positive")
    info = controllability_info(sys)
    zeta = unit_ball_volume(sys.n)
    best = math.inf
    for k in range(1, points + 1):
        t = tau_mu * k / points
        sign, logdet = np.linalg.slogdet(gramian_matrix(sys, t))
        if sign <= 0:
            continue
        best = min(best, zeta * math.exp(0.5 * logdet - 0.5 * info.D * math.log(t)))
    return best


def theorem_radius(p, N, eta, tau_mu=1.0):
    """``radius`` with the constants computed for problem ``p``."""
    info = controllability_info(p.sys)
    return radius(info, free_volume(p), estimate_C_mu(p.sys, tau_mu), eta, N)


def _resolve_radius(p, cfg):
    if cfg.radius_override is not None:
        return float(cfg.radius_override)
    return theorem_radius(p, max(cfg.N, 2), cfg.eta, cfg.tau_mu)


# -- vertices and near sets ----------------------------------------------

def sample_vertices(p, N, seed, goal_samples=None):
    """``x_init``, then ``N`` free samples, then goal samples."""
    rng = make_rng(seed)
    X = sample_free(p, N, rng)
    k = max(1, N // 100) if goal_samples is None else int(goal_samples)
    G = sample_goal(p, k, rng)
    return np.vstack([p.x_init[None], X, G])


def make_steerer(p, cfg):
    tau_max = cfg.tau_max if cfg.tau_max is not None else p.tau_max
    return Steerer(p.sys, tau_max, tol=cfg.steer_tol, cost_cap=cfg.cost_cap,
                   fixed_tau=cfg.fixed_tau)


def near(V, x, r, direction='forward', steerer=None, cache=None, prune=True):
    """Indices ``i`` with ``c*(x, V[i]) < r`` (forward) or
    ``c*(V[i], x) < r`` (backward), in ascending order.

    ``x`` is a state, or an integer index into ``V`` (that vertex is then
    excluded). A `NeighborCache` built for ``V`` and a radius ``>= r``
    answers index queries without steering.
    """
    V = np.asarray(V, dtype=float)
    if direction not in ('forward', 'backward'):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    idx = None
    if isinstance(x, (int, np.integer)):
        idx = int(x)
        x = V[idx]
    if cache is not None:
        if idx is None:
            raise ValueError("cache lookups need a vertex index")
        nb, c = cache.neighbors(idx, direction)
        return nb[c < r]
    if steerer is None:
        raise ValueError("either a steerer or a cache is required")
    x = np.asarray(x, dtype=float)
    if direction == 'forward':
        mask = steerer.within(x, V, r, prune=prune)
    else:
        mask = steerer.within(V, x, r, prune=prune)
    if idx is not None:
        mask[idx] = False
    return np.flatnonzero(mask)


class PairCosts:
    """Row-wise pair costs ``c*(V[y], V[xs])`` for one vertex set.

    ``row`` returns, per target, either an upper bound from the coarse grid
    with its grid index, or an exact value flagged by index -1. ``refine``
    turns selected grid entries into exact costs. With a `NeighborCache`
    every value is exact and no steering happens.
    """

    def __init__(self, V, steerer, r, prune=True, cache=None):
        self.V = V
        self.st = steerer
        self.r = r
        self.prune = prune
        self.cache = cache
        self.jmap = {}
        self.refined = 0
        if steerer.lattice is not None:
            g = steerer.lattice.grid
            self._lb = np.concatenate([[0.0], g[:-1]])
        else:
            self._lb = None

    def row(self, y, xs):
        xs = np.asarray(xs, dtype=np.int64)
        if self.cache is not None:
            U, J = self.cache.row(y, xs)
            for x, j in zip(xs[J >= 0], J[J >= 0]):
                self.jmap[(y, int(x))] = int(j)
            return U, np.full(len(xs), -1, dtype=np.int8)
        U = np.full(len(xs), np.inf)
        kb = np.full(len(xs), -1, dtype=np.int8)
        if not xs.size:
            return U, kb
        keep = np.ones(len(xs), dtype=bool)
        if self.prune and np.isfinite(self.r):
            keep = ~self.st.prune_mask(self.V[y], self.V[xs], self.r)
        if keep.any():
            u, k = self.st.grid(self.V[y], self.V[xs[keep]])
            U[keep] = u
            kb[keep] = k
        return U, kb

    def lower(self, U, kb):
        """Lower bound on the exact cost (exact where ``kb < 0``)."""
        if self._lb is None:
            return U
        lb = self._lb[np.maximum(kb, 0)]
        return np.where(kb < 0, U, lb)

    def refine(self, y, xs, U, kb):
        """Exact costs for targets ``xs`` of source ``y`` (``kb >= 0``)."""
        xs = np.asarray(xs, dtype=np.int64)
        c, j = self.st.refine(self.V[y], self.V[xs], U, kb)
        self.refined += len(xs)
        for x, jj in zip(xs.tolist(), j.tolist()):
            self.jmap[(y, x)] = jj
        return c

    def refine_pairs(self, ys, xs, U, kb):
        """Exact costs for arbitrary pairs ``(ys[i], xs[i])``."""
        ys = np.asarray(ys, dtype=np.int64)
        xs = np.asarray(xs, dtype=np.int64)
        c, j = self.st.refine(self.V[ys], self.V[xs], U, kb)
        self.refined += len(xs)
        for a, b, jj in zip(ys.tolist(), xs.tolist(), j.tolist()):
            self.jmap[(a, b)] = jj
        return c

    def result(self, y, x, cost):
        return self.st.result(self.V[y], self.V[x],
                              self.jmap.get((y, x), -1), cost)


# -- neighbor cache -------------------------------------------------------

def _digest(arr):
    import hashlib
    return hashlib.sha256(np.ascontiguousarray(arr, dtype='<f8').tobytes()).hexdigest()[:16]


class NeighborCache:
    """Directed neighbor lists with exact costs for a fixed vertex set.

    Forward lists are stored in CSR form (sorted targets per source); the
    backward lists are their transpose. The header identifies the run the
    cache belongs to and is checked on load.
    """

    def __init__(self, header, indptr, indices, costs, lattice_idx):
        self.header = dict(header)
        self.indptr = indptr
        self.indices = indices
        self.costs = costs
        self.lattice_idx = lattice_idx
        n = len(indptr) - 1
        src = np.repeat(np.arange(n), np.diff(indptr))
        order = np.lexsort((src, indices))
        self._b_src = src[order]
        self._b_cost = costs[order]
        self._b_ptr = np.searchsorted(indices[order], np.arange(n + 1))

    @property
    def radius(self):
        return self.header['r_N']

    @classmethod
    def build(cls, V, steerer, r, header, prune=True):
        """Exact costs of every pair ``(i, j)``, ``i != j``, with
        ``c* < r``."""
        V = np.asarray(V, dtype=float)
        n = len(V)
        pc = PairCosts(V, steerer, r, prune=prune)
        indptr = [0]
        indices, costs, lidx = [], [], []
        for i in range(n):
            xs = np.delete(np.arange(n), i)
            U, kb = pc.row(i, xs)
            lb = pc.lower(U, kb)
            todo = (kb >= 0) & (lb < r)
            c = U.copy()
            if todo.any():
                c[todo] = pc.refine(i, xs[todo], U[todo], kb[todo])
            m = c < r
            sel = xs[m]
            indices.append(sel)
            costs.append(c[m])
            lidx.append(np.array([pc.jmap.get((i, int(x)), -1) for x in sel],
                                 dtype=np.int64))
            indptr.append(indptr[-1] + len(sel))
        header = dict(header)
        header.update(version=CACHE_VERSION, r_N=float(r), vertices=_digest(V),
                      n_vertices=n)
        cat = (lambda a, dt: np.concatenate(a).astype(dt) if a else np.zeros(0, dt))
        return cls(header, np.array(indptr, dtype=np.int64),
                   cat(indices, np.int64), cat(costs, float),
                   cat(lidx, np.int64))

    def neighbors(self, i, direction='forward'):
        if direction == 'forward':
            a, b = self.indptr[i], self.indptr[i + 1]
            return self.indices[a:b], self.costs[a:b]
        a, b = self._b_ptr[i], self._b_ptr[i + 1]
        return self._b_src[a:b], self._b_cost[a:b]

    def row(self, y, xs):
        """Exact costs ``c*(y, xs)`` (inf outside the radius) and lattice
        indices (-1 where unknown)."""
        a, b = self.indptr[y], self.indptr[y + 1]
        nb = self.indices[a:b]
        pos = np.searchsorted(nb, xs)
        pos_c = np.minimum(pos, max(len(nb) - 1, 0))
        hit = (pos < len(nb)) & (nb[pos_c] == xs) if len(nb) else np.zeros(len(xs), bool)
        U = np.full(len(xs), np.inf)
        J = np.full(len(xs), -1, dtype=np.int64)
        U[hit] = self.costs[a:b][pos_c[hit]]
        J[hit] = self.lattice_idx[a:b][pos_c[hit]]
        return U, J

    def save(self, path):
        path = Path(path)
        with open(path, 'wb') as fh:
            np.savez_compressed(fh, header=np.array(json.dumps(self.header, sort_keys=True)),
                                indptr=self.indptr, indices=self.indices,
                                costs=self.costs, lattice_idx=self.lattice_idx)

    @classmethod
    def load(cls, path, expect=None):
        """Load a cache; raise `CacheMismatch` if any key of ``expect``
        differs from the stored header."""
        try:
            with np.load(path, allow_pickle=False) as z:
                header = json.loads(str(z['header']))
                obj = cls(header, z['indptr'], z['indices'], z['costs'],
                          z['lattice_idx'])
        except (OSError, KeyError, ValueError) as exc:
            raise CacheMismatch(f"unreadable neighbor cache {path}: {exc}") from None
        if header.get('version') != CACHE_VERSION:
            raise CacheMismatch(f"cache version {header.get('version')} != {CACHE_VERSION}")
        for k, v in (expect or {}).items():
            have = header.get(k)
            same = (math.isclose(have, v, rel_tol=1e-12, abs_tol=0)
                    if isinstance(v, float) and isinstance(have, (int, float))
                    else have == v)
            if not same:
                raise CacheMismatch(f"cache header field {k!r} is {have!r}, expected {v!r}")
        return obj


def cache_header(p, cfg, seed, V, r):
    if not isinstance(seed, (int, np.integer)):
        seed = None  # generators carry no stable identity
    return {'system': p.sys.digest(), 'N': int(cfg.N),
            'seed': None if seed is None else int(seed), 'r_N': float(r),
            'variant': cfg.variant,
            'tau_max': float(cfg.tau_max if cfg.tau_max is not None else p.tau_max),
            'vertices': _digest(V), 'version': CACHE_VERSION}


def get_cache(p, cfg, seed, V, r, steerer, path=None):
    """Load the cache at ``path`` if it matches, else build (and save).

    Returns ``(cache, hit)``.
    """
    expect = cache_header(p, cfg, seed, V, r)
    if path is not None and Path(path).exists():
        return NeighborCache.load(path, expect), True
    cache = NeighborCache.build(V, steerer, r, expect, prune=cfg.prune)
    if path is not None:
        cache.save(path)
    return cache, False


# -- results --------------------------------------------------------------

@dataclass
class PlanGraph:
    """Planner output graph.

    ``parent`` and ``cost_to_come`` describe the tree (DFMT*) or the
    shortest-path tree (DPRM*); ``edges`` lists every stored directed edge
    as ``(u, v, weight)``. ``expansions`` records the cost-to-come of the
    vertices in the order they were expanded.
    """

    vertices: np.ndarray
    parent: np.ndarray
    cost_to_come: np.ndarray
    edges: list = field(default_factory=list)
    expansions: list = field(default_factory=list)
    mode: str = 'tree'

    def path_to(self, v):
        out = [v]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return out[::-1]


@dataclass
class Plan:
    """Result of a planner run; ``success`` False is a normal outcome."""

    success: bool
    waypoints: list
    trajectory: Trajectory
    cost: float
    stats: dict
    graph: PlanGraph = None
    planner: str = ''
    radius: float = math.nan

    def to_dict(self, timing=False):
        stats = {k: v for k, v in self.stats.items() if timing or k != 'wall_ms'}
        return {
            'planner': self.planner,
            'success': bool(self.success),
            'cost': float(self.cost) if self.success else None,
            'radius': float(self.radius),
            'waypoints': [int(w) for w in self.waypoints],
            'states': [self.graph.vertices[w].tolist() for w in self.waypoints]
                      if self.graph is not None else [],
            'segments': [{'tau_star': s.tau_star, 'cost': s.cost, 'kind': s.kind}
                         for s in self.trajectory.segments],
            'stats': stats,
        }

    def to_json(self, timing=False):
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + '\n'


# -- DFMT* ----------------------------------------------------------------

W_SET, H_SET, CLOSED, PENDING = 0, 1, 2, 3


def dfmt_star(p, cfg, seed, V=None, cache=None, steerer=None):
    """Differential fast marching tree.

    Parameters
    ----------
    p : ProblemInstance
    cfg : PlannerConfig
    seed : int or numpy.random.Generator
        Seeds the vertex sampling (ignored when ``V`` is given).
    V : (N_v, n) array, optional
        Vertex set with ``V[0] = x_init``; sampled when omitted.
    cache : NeighborCache, optional
        Precomputed neighbor lists for ``V`` at radius ``>= r_N``.

    Returns
    -------
    Plan
        ``success`` is False when the wavefront empties before reaching
        the goal. A returned path is re-checked at half the collision
        resolution; a segment failing that check is treated as colliding
        and the search is repeated.
    """
    return _certified(_dfmt_search, 'dfmt*', p, cfg, seed, V, cache, steerer)


def _setup(p, cfg, seed, V, cache, steerer):
    if V is None:
        V = sample_vertices(p, cfg.N, seed, cfg.n_goal())
    V = np.asarray(V, dtype=float)
    r = _resolve_radius(p, cfg)
    st = steerer or make_steerer(p, cfg)
    if cache is None and cfg.cache_neighbors:
        cache = NeighborCache.build(V, st, r, cache_header(p, cfg, seed, V, r),
                                    prune=cfg.prune)
    return V, r, st, cache


def _half_resolution_failures(p, cfg, plan):
    """Edges of ``plan`` that collide when sampled at half the planning
    resolution."""
    bad = []
    for a, b, seg in zip(plan.waypoints[:-1], plan.waypoints[1:],
                         plan.trajectory.segments):
        dt = cfg.collision_dt if cfg.collision_dt is not None else default_dt(seg.tau_star)
        if not collision_free(p, p.sys, seg, dt / 2):
            bad.append((a, b))
    return bad


def _certified(search, name, p, cfg, seed, V, cache, steerer):
    t0 = time.perf_counter()
    V, r, st, cache = _setup(p, cfg, seed, V, cache, steerer)
    pc = PairCosts(V, st, r, prune=cfg.prune, cache=cache)
    banned = set()
    checks = failures = 0
    while True:
        plan = search(p, cfg, V, r, pc, banned)
        checks += plan.stats['collision_checks']
        failures += plan.stats['collision_failures']
        bad = _half_resolution_failures(p, cfg, plan) if plan.success else []
        if not bad:
            break
        banned.update(bad)
    plan.planner = name
    plan.stats.update(collision_checks=checks, collision_failures=failures,
                      revalidation_bans=len(banned), refined_pairs=pc.refined,
                      grid_pairs=st.grid_pairs, steer_calls=st.grid_pairs,
                      wall_ms=(time.perf_counter() - t0) * 1e3)
    return plan


def _dfmt_search(p, cfg, V, r, pc, banned):
    nv = len(V)
    status = np.full(nv, W_SET, dtype=np.int8)
    g = np.full(nv, np.inf)
    parent = np.full(nv, -1, dtype=np.int64)
    S = np.full((nv, nv), np.inf)
    KB = np.full((nv, nv), -1, dtype=np.int8)
    best = np.full(nv, np.inf)
    best_y = np.full(nv, -1, dtype=np.int64)
    stale = np.zeros(nv, dtype=bool)
    tried = np.full(nv, -1, dtype=np.int64)
    graph = PlanGraph(V, parent, g, mode='tree')
    stats = {'vertices': nv, 'collision_checks': 0, 'collision_failures': 0,
             'iterations': 0}

    def fill(ys, block=256):
        """Grid rows of new wavefront members against W, folded into the
        running best parent of every non-stale unexplored vertex."""
        xs = np.flatnonzero(status == W_SET)
        if not xs.size:
            return
        live = ~stale[xs]
        for s0 in range(0, len(ys), block):
            yb = np.asarray(ys[s0:s0 + block], dtype=np.int64)
            Ub = np.empty((len(yb), len(xs)))
            Kb = np.empty((len(yb), len(xs)), dtype=np.int8)
            for i, y in enumerate(yb):
                Ub[i], Kb[i] = pc.row(int(y), xs)
            gy = g[yb][:, None]
            lb = pc.lower(Ub, Kb)
            bar = np.minimum(best[xs], np.where(Ub < r, gy + Ub, np.inf).min(axis=0))
            cont = live & (lb < r) & (gy + lb <= bar)
            ii, jj = np.nonzero(cont & (Kb >= 0))
            if ii.size:
                Ub[ii, jj] = pc.refine_pairs(yb[ii], xs[jj], Ub[ii, jj], Kb[ii, jj])
                Kb[ii, jj] = -1
            S[np.ix_(yb, xs)] = Ub
            KB[np.ix_(yb, xs)] = Kb
            val = np.where(cont & (Ub < r), gy + Ub, np.inf)
            k = np.argmin(val, axis=0)
            v = val[k, np.arange(len(xs))]
            yk = yb[k]
            cur = best[xs]
            better = (v < cur) | ((v == cur) & np.isfinite(v) & (yk < best_y[xs]))
            best[xs[better]] = v[better]
            best_y[xs[better]] = yk[better]

    def exact_entries(ys, xs, sub_U, sub_kb, mask):
        """Refine the grid entries of ``mask`` in the submatrix ``S[ys, xs]``."""
        ii, jj = np.nonzero(mask & (sub_kb >= 0))
        if not ii.size:
            return
        c = pc.refine_pairs(ys[ii], xs[jj], sub_U[ii, jj], sub_kb[ii, jj])
        sub_U[ii, jj] = c
        sub_kb[ii, jj] = -1
        S[ys[ii], xs[jj]] = c
        KB[ys[ii], xs[jj]] = -1

    def recompute(xs):
        """Exact best parent over the current wavefront for ``xs``."""
        ys = np.flatnonzero(status == H_SET)
        sub_U = S[np.ix_(ys, xs)]
        sub_kb = KB[np.ix_(ys, xs)]
        gy = g[ys][:, None]
        lb = pc.lower(sub_U, sub_kb)
        sure = np.where(sub_U < r, gy + sub_U, np.inf).min(axis=0)
        exact_entries(ys, xs, sub_U, sub_kb, (lb < r) & (gy + lb <= sure))
        val = np.where(sub_U < r, gy + sub_U, np.inf)
        k = np.argmin(val, axis=0)
        best[xs] = val[k, np.arange(len(xs))]
        best_y[xs] = np.where(np.isfinite(best[xs]), ys[k], -1)
        stale[xs] = False

    status[0] = H_SET
    g[0] = 0.0
    heap = [(0.0, 0)]
    fill([0])
    z = heapq.heappop(heap)[1]
    goal_v = -1
    while True:
        graph.expansions.append(float(g[z]))
        if in_goal(p, V[z]):
            goal_v = z
            break
        stats['iterations'] += 1
        # X_near: unexplored vertices reachable from z below the radius
        xs = np.flatnonzero(status == W_SET)
        u = S[z, xs]
        kb = KB[z, xs]
        nearm = u < r
        und = ~nearm & (kb >= 0) & (pc.lower(u, kb) < r)
        if und.any():
            c = pc.refine(z, xs[und], u[und], kb[und])
            S[z, xs[und]] = c
            KB[z, xs[und]] = -1
            nearm[und] = c < r
        X = xs[nearm]
        if stale[X].any():
            recompute(X[stale[X]])
        new = []
        for x in X.tolist():
            y = int(best_y[x])
            if y < 0 or tried[x] == y:
                continue
            res = pc.result(y, x, S[y, x])
            stats['collision_checks'] += 1
            if (y, x) not in banned and collision_free(p, p.sys, res, cfg.collision_dt):
                parent[x] = y
                g[x] = best[x]
                status[x] = PENDING
                graph.edges.append((y, x, float(S[y, x])))
                new.append(x)
            else:
                stats['collision_failures'] += 1
                tried[x] = y
        status[z] = CLOSED
        stale |= (status == W_SET) & (best_y == z)
        for x in new:
            status[x] = H_SET
            heapq.heappush(heap, (float(g[x]), x))
        fill(new)
        if not heap:
            break
        z = heapq.heappop(heap)[1]
    stats['tree_size'] = int(np.count_nonzero(parent >= 0)) + 1
    if goal_v < 0:
        return Plan(False, [], Trajectory([]), math.inf, stats, graph, 'dfmt*', r)
    wp = graph.path_to(goal_v)
    segs = [pc.result(a, b, float(S[a, b])) for a, b in zip(wp[:-1], wp[1:])]
    return Plan(True, wp, Trajectory(segs), float(g[goal_v]), stats, graph, 'dfmt*', r)


# -- DPRM* ----------------------------------------------------------------

def dprm_star(p, cfg, seed, V=None, cache=None, steerer=None):
    """Shortest path over all collision-free connections with
    ``c* < r_N``.

    Dijkstra's search from ``x_init``; edge costs are refined and edges
    collision checked only when they would improve a tentative distance,
    which leaves the result equal to a search over the full graph. The
    first goal vertex settled is returned. Parameters and the
    half-resolution re-check are as in `dfmt_star`.
    """
    return _certified(_dprm_search, 'dprm*', p, cfg, seed, V, cache, steerer)


def _dprm_search(p, cfg, V, r, pc, banned):
    nv = len(V)
    dist = np.full(nv, np.inf)
    parent = np.full(nv, -1, dtype=np.int64)
    settled = np.zeros(nv, dtype=bool)
    weight = {}
    graph = PlanGraph(V, parent, dist, mode='graph')
    stats = {'vertices': nv, 'collision_checks': 0, 'collision_failures': 0,
             'iterations': 0}
    dist[0] = 0.0
    heap = [(0.0, 0)]
    goal_v = -1
    while heap:
        d, u = heapq.heappop(heap)
        if settled[u] or d > dist[u]:
            continue
        settled[u] = True
        graph.expansions.append(float(d))
        if in_goal(p, V[u]):
            goal_v = u
            break
        stats['iterations'] += 1
        xs = np.flatnonzero(~settled)
        if not xs.size:
            continue
        U, kb = pc.row(u, xs)
        lb = pc.lower(U, kb)
        cont = (lb < r) & (d + lb < dist[xs])
        ref = cont & (kb >= 0)
        if ref.any():
            U[ref] = pc.refine(u, xs[ref], U[ref], kb[ref])
        val = d + U
        imp = cont & (U < r) & (val < dist[xs])
        for v, c, dv in zip(xs[imp].tolist(), U[imp].tolist(), val[imp].tolist()):
            res = pc.result(u, v, c)
            stats['collision_checks'] += 1
            if (u, v) not in banned and collision_free(p, p.sys, res, cfg.collision_dt):
                dist[v] = dv
                parent[v] = u
                weight[(u, v)] = c
                graph.edges.append((u, v, c))
                heapq.heappush(heap, (dv, v))
            else:
                stats['collision_failures'] += 1
    stats['tree_size'] = int(np.count_nonzero(settled))
    if goal_v < 0:
        return Plan(False, [], Trajectory([]), math.inf, stats, graph, 'dprm*', r)
    wp = graph.path_to(goal_v)
    segs = [pc.result(a, b, weight[(a, b)]) for a, b in zip(wp[:-1], wp[1:])]
    return Plan(True, wp, Trajectory(segs), float(dist[goal_v]), stats, graph,
                'dprm*', r)


# -- tracing probe --------------------------------------------------------

@dataclass
class TraceResult:
    """Outcome of one tracing search: ``success`` when a waypoint sequence
    from the sample set satisfies all three tracing conditions."""

    success: bool
    cost: float
    waypoints: list
    r: float
    p: float
    tube_size: int


def _polyline_distance(X, P):
    """Euclidean distance from each row of ``X`` to the polyline ``P``."""
    X = np.atleast_2d(X)
    a, b = P[:-1], P[1:]
    ab = b - a
    den = np.maximum(np.einsum('ij,ij->i', ab, ab), 1e-300)
    s = np.einsum('kij,ij->ki', X[:, None, :] - a[None], ab) / den
    s = np.clip(s, 0.0, 1.0)
    proj = a[None] + s[..., None] * ab[None]
    return np.sqrt(((X[:, None, :] - proj) ** 2).sum(-1)).min(axis=1)


def tracing_probe(p, reference, ref_cost, N, seed, eps=0.5, C_p=0.03,
                  eta=0.5, r=None, steerer=None):
    """Look for waypoints among ``N`` free samples that trace a reference.

    The reference is a state polyline starting at ``p.x_init``, with cost
    ``ref_cost``. Waypoints ``y_0 = x_init, y_1, ..., y_K`` trace it when
    every connection has ``c* <= r_N``, the concatenated cost is at most
    ``(1 + eps) ref_cost``, every state along the connections lies within
    ``p_N = C_p r_N`` of the reference, and ``y_K`` lies within ``p_N`` of
    the reference's end point. The search is a shortest-path computation
    over the samples inside the ``p_N`` tube.
    """
    from .world import MAX_DT, _sampler, states_free

    P = np.asarray(reference, dtype=float)
    if r is None:
        r = theorem_radius(p, max(N, 2), eta)
    pN = C_p * r
    rng = make_rng(seed)
    V = np.vstack([p.x_init[None], sample_free(p, N, rng)])
    tube = np.flatnonzero(_polyline_distance(V, P) <= pN)
    if tube.size == 0 or tube[0] != 0:
        tube = np.concatenate([[0], tube[tube != 0]])
    T = V[tube]
    end = np.linalg.norm(T - P[-1], axis=1) <= pN
    st = steerer or Steerer(p.sys, p.tau_max, tol=PLAN_TOL)
    k = len(T)
    i0, i1 = np.nonzero(~np.eye(k, dtype=bool))
    C, _ = st.costs(T[i0], T[i1])
    W = np.full((k, k), np.inf)
    W[i0, i1] = C
    sampler = _sampler(p, MAX_DT)
    budget = (1 + eps) * ref_cost

    def admissible(a, b):
        if not W[a, b] <= r:
            return False
        res = st.steer(T[a], T[b])
        count = max(1, int(np.ceil(res.tau_star / MAX_DT)))
        X = np.vstack([sampler.states(res, count), T[b][None]])
        return bool(_polyline_distance(X, P).max() <= pN
                    and states_free(p, X).all())

    # Dijkstra restricted to the tube; edges checked lazily
    dist = np.full(k, np.inf)
    parent = np.full(k, -1)
    done = np.zeros(k, dtype=bool)
    dist[0] = 0.0
    heap = [(0.0, 0)]
    while heap:
        d, a = heapq.heappop(heap)
        if done[a] or d > dist[a]:
            continue
        done[a] = True
        if end[a]:
            wp = [a]
            while parent[wp[-1]] >= 0:
                wp.append(int(parent[wp[-1]]))
            wp = [int(tube[i]) for i in wp[::-1]]
            return TraceResult(d <= budget, float(d), wp, float(r), float(pN), k)
        for b in np.flatnonzero(~done & (d + W[a] < dist)):
            if d + W[a, b] <= budget and admissible(a, b):
                dist[b] = d + W[a, b]
                parent[b] = a
                heapq.heappush(heap, (float(dist[b]), int(b)))
    return TraceResult(False, math.inf, [], float(r), float(pN), k)
