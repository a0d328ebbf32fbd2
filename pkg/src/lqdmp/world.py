"""Problem instances: state bounds, box obstacles over the position
coordinates, uniform free-space sampling, goal membership and
sampled-trajectory collision checking.

Free space is closed: a state on a bounds face or on an obstacle face is
free, only obstacle interiors are forbidden. The goal region is open.
"""

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DimensionMismatch, RejectionStall, ScenarioError
from .gramian import _drift_blocks, _van_loan_blocks, matrix_exponential
from .system import LinearAffineSystem, validate

__all__ = ['Box', 'ProblemInstance', 'make_rng', 'sample_free',
           'sample_goal', 'state_free', 'states_free', 'in_goal',
           'collision_free', 'default_dt', 'free_volume', 'load_scenario',
           'parse_scenario', 'save_scenario', 'scenario_to_dict',
           'builtin_scenario', 'BUILTIN_SCENARIOS']

MAX_DT = 5e-3
COARSE_STRIDE = 8
STALL_DRAWS = 1_000_000
STALL_RATE = 1e-4


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``[lo, hi]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).ravel()
        hi = np.array(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise DimensionMismatch(
                f"box corners have different lengths {lo.size} and {hi.size}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DimensionMismatch("box corners must be finite")
        if np.any(lo >= hi):
            raise DimensionMismatch(f"box needs lo < hi componentwise, got {lo}, {hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @property
    def dim(self):
        return self.lo.size

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, X):
        """Closed membership, vectorized over leading axes."""
        X = np.asarray(X, dtype=float)
        return np.all((X >= self.lo) & (X <= self.hi), axis=-1)

    def interior(self, X):
        """Open membership."""
        X = np.asarray(X, dtype=float)
        return np.all((X > self.lo) & (X < self.hi), axis=-1)

    def to_dict(self):
        return {'lo': self.lo.tolist(), 'hi': self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Planning problem: system, state bounds, obstacles, start and goal.

    Obstacles are boxes over ``position_dims`` only, i.e. cylinders in the
    full state space. ``tau_max`` is the scenario's arrival-time horizon
    for single connections.
    """

    sys: LinearAffineSystem
    bounds: Box
    obstacles: tuple
    x_init: np.ndarray
    goal: Box
    position_dims: tuple
    tau_max: float = 5.0
    name: str = ''
    description: str = ''
    _collision_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = self.sys.n
        object.__setattr__(self, 'obstacles', tuple(self.obstacles))
        object.__setattr__(self, 'position_dims',
                           tuple(int(i) for i in self.position_dims))
        x0 = np.array(self.x_init, dtype=float).ravel()
        x0.setflags(write=False)
        object.__setattr__(self, 'x_init', x0)
        if self.bounds.dim != n or self.goal.dim != n or x0.size != n:
            raise DimensionMismatch(
                f"bounds, goal and x_init must have length n = {n}")
        pd = self.position_dims
        if len(set(pd)) != len(pd) or any(not 0 <= i < n for i in pd):
            raise DimensionMismatch(f"bad position_dims {pd} for n = {n}")
        for ob in self.obstacles:
            if ob.dim != len(pd):
                raise DimensionMismatch(
                    f"obstacle has {ob.dim} coordinates, expected {len(pd)}")
        k = len(pd)
        object.__setattr__(self, '_ob_lo', np.array([o.lo for o in self.obstacles]).reshape(-1, k))
        object.__setattr__(self, '_ob_hi', np.array([o.hi for o in self.obstacles]).reshape(-1, k))
        if not self.tau_max > 0:
            raise ValueError("tau_max must be positive")
        if not state_free(self, x0):
            raise ScenarioError("x_init is not in free space")
        if np.any(self.goal.lo < self.bounds.lo) or np.any(self.goal.hi > self.bounds.hi):
            raise ScenarioError("goal box must lie inside the bounds")

    def with_obstacles(self, obstacles):
        return ProblemInstance(self.sys, self.bounds, tuple(obstacles),
                               self.x_init, self.goal, self.position_dims,
                               self.tau_max, self.name, self.description)


def make_rng(seed):
    """Seeded generator; an existing Generator is passed through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def states_free(p, X):
    """Vectorized `state_free` over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ok = ((X >= p.bounds.lo) & (X <= p.bounds.hi)).all(axis=1)
    if p.obstacles and ok.any():
        pos = X[:, p.position_dims][:, None, :]
        inside = ((pos > p._ob_lo) & (pos < p._ob_hi)).all(axis=2)
        ok &= ~inside.any(axis=1)
    return ok


def state_free(p, x):
    """True iff ``x`` lies in the (closed) bounds and in no obstacle interior."""
    return bool(states_free(p, x)[0])


def in_goal(p, x):
    """Strict interior membership of the goal box."""
    return bool(p.goal.interior(np.asarray(x, dtype=float)))


def _rejection(p, box, N, rng, what):
    out = []
    have = draws = 0
    lo, hi = box.lo, box.hi
    batch = max(1024, 2 * N)
    while have < N:
        X = rng.uniform(lo, hi, size=(batch, lo.size))
        draws += batch
        X = X[states_free(p, X)]
        out.append(X)
        have += len(X)
        if draws >= STALL_DRAWS and have < STALL_RATE * draws:
            raise RejectionStall(
                f"{what}: acceptance rate {have / draws:.2e} after {draws} draws")
    return np.concatenate(out)[:N]


def sample_free(p, N, seed):
    """``N`` i.i.d. uniform samples of the free space (rejection on bounds).

    ``seed`` may be an integer or a ``numpy.random.Generator``.

    Raises
    ------
    RejectionStall
        Acceptance rate below 1e-4 after 1e6 draws.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    return _rejection(p, p.bounds, int(N), make_rng(seed), 'sample_free')


def sample_goal(p, N, seed):
    """``N`` uniform samples of goal-interior free states."""
    if N < 1:
        return np.zeros((0, p.sys.n))
    return _rejection(p, p.goal, int(N), make_rng(seed), 'sample_goal')


def default_dt(tau):
    """Collision-check resolution ``min(tau / 32, 5e-3)``."""
    return min(tau / 32.0, MAX_DT)


class _TimeGridSampler:
    """Kernels on the uniform time grid ``k dt`` for state evaluation.

    Along a connection, ``x(t) = Phi(t) x0 + h(t) + K(t) w`` with
    ``K(t) = G(t) exp(-A' t)`` and ``w = exp(A' tau) d``; the three kernels
    depend only on ``t`` and are shared by every connection.
    """

    def __init__(self, sys, dt):
        self.sys = sys
        self.dt = dt
        self.size = 0
        self._lock = threading.Lock()
        n = sys.n
        self.Phi = np.zeros((0, n, n))
        self.h = np.zeros((0, n))
        self.K = np.zeros((0, n, n))
        self._w = {}

    def _grow(self, size):
        with self._lock:
            if size <= self.size:
                return
            size = max(size, 2 * self.size)
            t = np.arange(self.size, size) * self.dt
            Phi, G = _van_loan_blocks(self.sys, t)
            h = _drift_blocks(self.sys, t)
            Em = matrix_exponential(-self.sys.A.T[None] * t[:, None, None])
            self.Phi = np.concatenate([self.Phi, Phi])
            self.h = np.concatenate([self.h, h])
            self.K = np.concatenate([self.K, G @ Em])
            self.size = size

    def states(self, r, count, stride=1):
        """States at ``k dt`` for ``k = 0, stride, 2 stride, ... < count``."""
        if count > self.size:
            self._grow(count)
        E = self._w.get(r.tau_star)
        if E is None:
            if len(self._w) > 65536:
                self._w.clear()
            E = self._w[r.tau_star] = matrix_exponential(self.sys.A.T, r.tau_star)
        w = E @ r.d
        sl = slice(0, count, stride)
        return self.Phi[sl] @ r.x0 + self.h[sl] + self.K[sl] @ w


def _sampler(p, dt):
    key = (p.sys.digest(), float(dt))
    cache = p._collision_cache
    s = cache.get(key)
    if s is None:
        s = cache[key] = _TimeGridSampler(p.sys, dt)
    return s


def collision_free(p, sys, r, dt=None):
    """Whether the sampled connection ``r`` stays in free space.

    States are checked at ``0, dt, 2 dt, ...`` below ``tau*`` and at
    ``tau*`` itself. ``dt`` defaults to ``min(tau*/32, 5e-3)``.
    """
    from .steering import states_at

    tau = r.tau_star
    if tau == 0:
        return state_free(p, r.x0)
    if dt is None:
        dt = default_dt(tau)
    if not dt > 0:
        raise ValueError("dt must be positive")
    # grid points k dt strictly below tau*; tau* itself is the endpoint x1
    count = max(1, int(np.ceil(tau / dt)))
    if dt == MAX_DT and sys is p.sys:
        smp = _sampler(p, dt)
        # a strided pass first: most colliding connections fail it cheaply
        if count > 4 * COARSE_STRIDE and not states_free(
                p, smp.states(r, count, COARSE_STRIDE)).all():
            return False
        X = smp.states(r, count)
    else:
        X = states_at(sys, r, np.arange(count) * dt)
    return bool(states_free(p, np.vstack([r.x1[None], X])).all())


def _union_volume(boxes):
    """Exact volume of a union of boxes by coordinate compression."""
    if not boxes:
        return 0.0
    k = boxes[0][0].size
    edges = [np.unique(np.concatenate([[b[0][i], b[1][i]] for b in boxes]))
             for i in range(k)]
    widths = [np.diff(e) for e in edges]
    mids = [0.5 * (e[1:] + e[:-1]) for e in edges]
    covered = np.zeros([len(m) for m in mids], dtype=bool)
    grids = np.meshgrid(*mids, indexing='ij')
    for lo, hi in boxes:
        inside = np.ones_like(covered)
        for i in range(k):
            inside &= (grids[i] > lo[i]) & (grids[i] < hi[i])
        covered |= inside
    cell = widths[0]
    for w in widths[1:]:
        cell = np.multiply.outer(cell, w)
    return float((cell * covered).sum())


def free_volume(p):
    """Lebesgue measure of the free space (bounds minus obstacle cylinders)."""
    pd = list(p.position_dims)
    lo_b, hi_b = p.bounds.lo[pd], p.bounds.hi[pd]
    clipped = []
    for ob in p.obstacles:
        lo = np.maximum(ob.lo, lo_b)
        hi = np.minimum(ob.hi, hi_b)
        if np.all(lo < hi):
            clipped.append((lo, hi))
    other = [i for i in range(p.sys.n) if i not in set(pd)]
    rest = float(np.prod(p.bounds.hi[other] - p.bounds.lo[other]))
    pos_free = float(np.prod(hi_b - lo_b)) - _union_volume(clipped)
    return pos_free * rest


# -- scenario files ------------------------------------------------------

def scenario_to_dict(p):
    d = {'system': p.sys.to_dict(), 'bounds': p.bounds.to_dict(),
         'position_dims': list(p.position_dims),
         'obstacles': [ob.to_dict() for ob in p.obstacles],
         'x_init': p.x_init.tolist(), 'goal': p.goal.to_dict(),
         'tau_max': p.tau_max}
    if p.name:
        d['name'] = p.name
    if p.description:
        d['description'] = p.description
    return d


def _box(d, what):
    if not isinstance(d, dict) or 'lo' not in d or 'hi' not in d:
        raise ScenarioError(f"{what} must be an object with 'lo' and 'hi'")
    return Box(d['lo'], d['hi'])


def parse_scenario(text, source='<string>'):
    """Build a `ProblemInstance` from scenario JSON text.

    Raises
    ------
    ScenarioError
        Malformed JSON (with line and column), missing fields, or a
        system/instance that fails validation.
    """
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise ScenarioError(f"{source}: top level must be a JSON object")
    missing = [k for k in ('system', 'bounds', 'position_dims', 'x_init', 'goal')
               if k not in d]
    if missing:
        raise ScenarioError(f"{source}: missing field(s) {', '.join(missing)}")
    try:
        sys = validate(LinearAffineSystem.from_dict(d['system']))
        obstacles = tuple(_box(o, 'obstacle') for o in d.get('obstacles', []))
        return ProblemInstance(
            sys, _box(d['bounds'], 'bounds'), obstacles, d['x_init'],
            _box(d['goal'], 'goal'), d['position_dims'],
            float(d.get('tau_max', 5.0)), str(d.get('name', '')),
            str(d.get('description', '')))
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    except Exception as exc:  # validation errors from the system or boxes
        raise ScenarioError(f"{source}: {type(exc).__name__}: {exc}") from None


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))


def save_scenario(p, path):
    Path(path).write_text(json.dumps(scenario_to_dict(p), indent=2) + '\n')


BUILTIN_SCENARIOS = ('free', 'wall', 'maze')


def builtin_scenario(name):
    """One of the bundled scenarios: ``free``, ``wall`` or ``maze``."""
    if name not in BUILTIN_SCENARIOS:
        raise ScenarioError(f"unknown scenario {name!r}; "
                            f"choose from {', '.join(BUILTIN_SCENARIOS)}")
    path = Path(__file__).with_name('scenarios') / f'{name}.json'
    return load_scenario(path)

