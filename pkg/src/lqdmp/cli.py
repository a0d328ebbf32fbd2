"""Command-line harness: single plans, Monte-Carlo sweeps, SVG output and
the property suites.

Usage::

    lqdmp plan maze --n 1000 --seed 3 --svg maze.svg
    lqdmp sweep experiment.json
    lqdmp verify spectral

Exit codes: 0 success, 1 planner failure (or failed suite), 2 invalid
input. Output files go to ``--out`` (plan) or the experiment's
``output_dir`` (sweep); the environment variable ``LQDMP_OUTPUT_DIR``
overrides both.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import CacheMismatch, DimensionError, LQDMPError, ScenarioError
from .gramian import gramian, gramian_matrix, zero_input_response
from .planner import (PLAN_TOL, PlannerConfig, dfmt_star, dprm_star,
                      get_cache, make_steerer, sample_vertices,
                      tracing_probe, _resolve_radius)
from .steering import (Steerer, control_at, controls_at, optimal_steer,
                       states_at)
from .system import double_integrator
from .world import (BUILTIN_SCENARIOS, ProblemInstance, builtin_scenario,
                    load_scenario, make_rng)

__all__ = ['ExperimentSpec', 'RunRecord', 'CSV_COLUMNS', 'OUTPUT_ENV',
           'parse_variant', 'resolve_scenario', 'run_single', 'run_sweep',
           'emit_svg', 'run_property_suite', 'SUITES', 'main']

OUTPUT_ENV = 'LQDMP_OUTPUT_DIR'
CSV_COLUMNS = ('variant', 'N', 'seed', 'success', 'cost', 'wall_ms',
               'steer_calls', 'collision_checks', 'cache_hit', 'cost_sem')
PLANNERS = {'dfmt': dfmt_star, 'dprm': dprm_star}


def _fmt(x):
    """Round-trip float formatting (17 significant digits)."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ''
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), '.17g')


def output_dir(default):
    """``LQDMP_OUTPUT_DIR`` when set, else ``default``."""
    return Path(os.environ.get(OUTPUT_ENV) or default)


# -- variants and scenarios ----------------------------------------------

def parse_variant(text):
    """Parse ``optimal``, ``fixed:TAU`` (or ``optimal-tau``,
    ``fixed-tau(TAU)``), optionally suffixed with ``+cache``.

    Returns ``(fixed_tau, cache)``.
    """
    s = text.strip().lower()
    cache = s.endswith('+cache')
    if cache:
        s = s[:-len('+cache')]
    if s in ('optimal', 'optimal-tau'):
        return None, cache
    for prefix in ('fixed:', 'fixed-tau('):
        if s.startswith(prefix):
            body = s[len(prefix):].rstrip(')')
            try:
                tau = float(body)
            except ValueError:
                break
            if tau > 0:
                return tau, cache
    raise ValueError(f"unknown variant {text!r}; use 'optimal' or 'fixed:TAU'")


def variant_name(fixed_tau, cache):
    base = 'optimal-tau' if fixed_tau is None else f'fixed-tau({fixed_tau:g})'
    return base + ('+cache' if cache else '')


def resolve_scenario(ref):
    """A `ProblemInstance` from a file path or a built-in scenario name."""
    if isinstance(ref, ProblemInstance):
        return ref
    path = Path(ref)
    if not path.exists() and str(ref) in BUILTIN_SCENARIOS:
        return builtin_scenario(str(ref))
    return load_scenario(path)


# -- records ---------------------------------------------------------------

@dataclass
class RunRecord:
    """One planner run as a CSV row; ``cost`` is None unless successful."""

    variant: str
    N: int
    seed: int
    success: bool
    cost: float = None
    wall_ms: float = None
    steer_calls: int = 0
    collision_checks: int = 0
    cache_hit: bool = False

    def __post_init__(self):
        if (self.cost is not None) != bool(self.success):
            raise ValueError("cost must be present exactly when success is true")

    def row(self, timing=True):
        return [self.variant, _fmt(self.N), _fmt(self.seed),
                _fmt(bool(self.success)), _fmt(self.cost),
                _fmt(self.wall_ms) if timing else '',
                _fmt(self.steer_calls), _fmt(self.collision_checks),
                _fmt(bool(self.cache_hit)), '']


def _plan_name(p, cfg, seed, planner):
    scen = p.name or 'scenario'
    var = cfg.variant.replace('(', '').replace(')', '')
    return f'{scen}_{planner}_{var}_N{cfg.N}_s{seed}'


def run_single(scenario, cfg, seed, planner='dfmt', out_dir=None, svg=None,
               cache_path=None, timing=False):
    """Run one planner and write its plan JSON (and optionally an SVG).

    Parameters
    ----------
    scenario : ProblemInstance, path or built-in name
    cfg : PlannerConfig
    seed : int
    planner : {'dfmt', 'dprm'}
    out_dir : path, optional
        Where the plan JSON goes; nothing is written when None.
    svg : path, optional
    cache_path : path, optional
        Neighbor cache file, loaded when present and matching, else built
        and saved.
    timing : bool
        Include wall time in the JSON (makes it nondeterministic).

    Returns
    -------
    plan : Plan
    record : RunRecord
    """
    p = resolve_scenario(scenario)
    try:
        run = PLANNERS[planner]
    except KeyError:
        raise ValueError(f"planner must be one of {sorted(PLANNERS)}") from None
    t0 = time.perf_counter()
    cache, hit = None, False
    V = None
    if cache_path is not None or cfg.cache_neighbors:
        V = sample_vertices(p, cfg.N, seed, cfg.n_goal())
        st = make_steerer(p, cfg)
        cache, hit = get_cache(p, cfg, seed, V, _resolve_radius(p, cfg), st,
                               cache_path)
    plan = run(p, cfg, seed, V=V, cache=cache)
    wall = (time.perf_counter() - t0) * 1e3
    plan.stats['wall_ms'] = wall
    plan.stats['cache_hit'] = bool(hit)
    rec = RunRecord(variant_name(cfg.fixed_tau, cfg.cache_neighbors or cache is not None),
                    cfg.N, seed, plan.success,
                    plan.cost if plan.success else None, wall,
                    plan.stats['steer_calls'], plan.stats['collision_checks'], hit)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        doc = plan.to_dict(timing)
        doc['scenario'] = p.name
        doc['seed'] = seed
        doc['config'] = cfg.to_dict()
        (out / (_plan_name(p, cfg, seed, planner) + '.json')).write_text(
            json.dumps(doc, indent=2, sort_keys=True) + '\n')
    if svg is not None:
        Path(svg).write_text(emit_svg(plan, p))
    return plan, rec


# -- sweeps -----------------------------------------------------------------

@dataclass
class ExperimentSpec:
    """A Monte-Carlo grid over sample counts, seeds and variants.

    ``variants`` holds strings accepted by `parse_variant`. ``timing``
    controls whether wall times are written; they are left blank by
    default so that repeated sweeps produce identical files.
    """

    scenario: str
    N: list
    seeds: list
    variants: list = field(default_factory=lambda: ['optimal'])
    planner: str = 'dfmt'
    eta: float = 0.5
    radius_override: float = None
    output_dir: str = 'lqdmp_out'
    timing: bool = False
    csv_name: str = 'sweep.csv'
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.seeds, int):
            self.seeds = list(range(self.seeds))
        self.N = [int(n) for n in self.N]
        self.seeds = [int(s) for s in self.seeds]
        if not self.N or not self.seeds:
            raise ValueError("N and seeds must be nonempty")
        if not self.variants:
            raise ValueError("variants must be nonempty")
        for v in self.variants:
            parse_variant(v)
        if self.planner not in PLANNERS:
            raise ValueError(f"planner must be one of {sorted(PLANNERS)}")

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown experiment fields {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return cls.from_dict(d)

    def cells(self):
        """``(N, variant, seed)`` in the order rows are written."""
        return [(n, v, s) for n in self.N for v in self.variants for s in self.seeds]


def _aggregate(recs):
    costs = np.array([r.cost for r in recs if r.success], dtype=float)
    rate = len(costs) / len(recs)
    mean = float(costs.mean()) if costs.size else None
    sem = float(costs.std(ddof=1) / math.sqrt(costs.size)) if costs.size > 1 else None
    r0 = recs[0]
    return [r0.variant, _fmt(r0.N), '*', _fmt(rate), _fmt(mean), '',
            _fmt(float(np.mean([r.steer_calls for r in recs]))),
            _fmt(float(np.mean([r.collision_checks for r in recs]))),
            _fmt(float(np.mean([r.cache_hit for r in recs]))), _fmt(sem)]


def sweep_csv(records, timing=False):
    """CSV text: one row per record, then one aggregate row (seed ``*``)
    per (N, variant) with success rate, mean cost and its standard
    error."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(CSV_COLUMNS)
    groups = {}
    for r in records:
        w.writerow(r.row(timing))
        groups.setdefault((r.N, r.variant), []).append(r)
    for key in groups:
        w.writerow(_aggregate(groups[key]))
    return buf.getvalue()


def _run_cell(args):
    scenario, n, v, s, eta, radius_override, planner = args
    tau, cache = parse_variant(v)
    cfg = PlannerConfig(N=n, eta=eta, radius_override=radius_override,
                        fixed_tau=tau, cache_neighbors=cache)
    try:
        return run_single(resolve_scenario(scenario), cfg, s, planner=planner)[1], None
    except LQDMPError as exc:
        return RunRecord(variant_name(tau, cache), n, s, False), str(exc)


def run_sweep(spec, log=None):
    """Run every cell of ``spec`` and write the CSV.

    A cell that raises is recorded as a failure and the sweep continues.
    Each cell samples its vertices from its own seed, so results do not
    depend on execution order; with ``spec.workers > 1`` cells run in
    worker processes and rows are still written in cell order. Returns
    ``(csv_path, records)``.
    """
    resolve_scenario(spec.scenario)
    out = output_dir(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(spec.scenario, n, v, s, spec.eta, spec.radius_override, spec.planner)
            for n, v, s in spec.cells()]
    if spec.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(spec.workers) as ex:
            results = ex.map(_run_cell, jobs)
            records = _collect(results, log)
    else:
        records = _collect(map(_run_cell, jobs), log)
    path = out / spec.csv_name
    path.write_text(sweep_csv(records, spec.timing))
    return path, records


def _collect(results, log):
    records = []
    for rec, err in results:
        records.append(rec)
        if log:
            msg = (f"cost {rec.cost:.4f}" if rec.success
                   else f"failed: {err}" if err else "no path")
            log(f"N={rec.N} {rec.variant} seed={rec.seed}: {msg}")
    return records


# -- SVG ------------------------------------------------------------------

def _attrs(attrs):
    # keyword names to SVG attributes: class_ -> class, stroke_width -> stroke-width
    return ' '.join(f'{k.rstrip("_").replace("_", "-")}="{escape(str(v))}"'
                    for k, v in attrs.items())


def emit_svg(plan, p, dims=None, size=600, samples=32):
    """Standalone SVG of the position projection of a plan.

    Draws the bounds, obstacles, goal box, every tree edge (each
    connection sampled at ``samples`` points), the solution and the start
    and end markers.

    Raises
    ------
    DimensionError
        If fewer than two position dimensions are available.
    """
    dims = tuple(p.position_dims if dims is None else dims)
    if len(dims) < 2:
        raise DimensionError("an SVG needs two position dimensions")
    i, j = dims[:2]
    lo = p.bounds.lo[[i, j]]
    hi = p.bounds.hi[[i, j]]
    scale = size / max(hi - lo)
    W, H = (hi - lo) * scale

    def pt(X):
        X = np.atleast_2d(X)
        return np.column_stack([(X[:, i] - lo[0]) * scale,
                                H - (X[:, j] - lo[1]) * scale])

    def poly(X, **attrs):
        pts = ' '.join(f'{a:.2f},{b:.2f}' for a, b in pt(X))
        extra = _attrs(attrs)
        return f'<polyline points="{pts}" fill="none" {extra}/>'

    def rect(blo, bhi, **attrs):
        (x0, y1), (x1, y0) = pt(np.array([blo, bhi]))
        extra = _attrs(attrs)
        return (f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" '
                f'height="{y1 - y0:.2f}" {extra}/>')

    def lift(b):
        # 2-D box -> full state corners for `pt`
        z = np.zeros((2, p.sys.n))
        z[0, [i, j]] = b[0]
        z[1, [i, j]] = b[1]
        return z

    k = list(p.position_dims)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{W:.0f}" height="{H:.0f}" viewBox="0 0 {W:.2f} {H:.2f}">',
           f'<title>{escape(p.name or "plan")}</title>',
           rect(*lift((lo, hi)), fill='white', stroke='black')]
    for ob in p.obstacles:
        blo = np.array([ob.lo[k.index(i)] if i in k else lo[0],
                        ob.lo[k.index(j)] if j in k else lo[1]])
        bhi = np.array([ob.hi[k.index(i)] if i in k else hi[0],
                        ob.hi[k.index(j)] if j in k else hi[1]])
        out.append(rect(*lift((blo, bhi)), fill='#555555', class_='obstacle'))
    out.append(rect(*lift((p.goal.lo[[i, j]], p.goal.hi[[i, j]])),
                    fill='#b6e3b6', stroke='#2a7a2a', class_='goal'))
    g = plan.graph
    if g is not None and g.edges:
        st = Steerer(p.sys, p.tau_max, tol=PLAN_TOL)
        out.append('<g class="tree" stroke="#8fa8c8" stroke-width="0.6">')
        for u, v, _ in g.edges:
            if g.mode == 'graph' and g.parent[v] != u:
                continue
            res = st.steer(g.vertices[u], g.vertices[v])
            X = states_at(p.sys, res, np.linspace(0, res.tau_star, samples))
            out.append(poly(X))
        out.append('</g>')
    if plan.success and plan.trajectory.segments:
        X = np.vstack([states_at(p.sys, s, np.linspace(0, s.tau_star, samples))
                       for s in plan.trajectory.segments])
        out.append(poly(X, stroke='#c0392b', stroke_width=2.5, class_='solution'))
        (ex, ey), = pt(X[-1])
        out.append(f'<circle class="end" cx="{ex:.2f}" cy="{ey:.2f}" r="5" fill="#2a7a2a"/>')
    (sx, sy), = pt(p.x_init)
    out.append(f'<circle class="start" cx="{sx:.2f}" cy="{sy:.2f}" r="5" fill="#1f4e9a"/>')
    out.append('</svg>')
    return '\n'.join(out) + '\n'


# -- property suites ------------------------------------------------------

def _check(name, passed, **measured):
    return {'name': name, 'passed': bool(passed),
            **{k: (float(v) if isinstance(v, (np.floating, float)) else v)
               for k, v in measured.items()}}


def spectral_battery(points=8, t_lo=1e-3, t_hi=1e-2):
    """Log-log slopes of the Gramian spectrum of the 2-D double integrator
    over small times."""
    sys_ = double_integrator(2)
    ts = np.geomspace(t_lo, t_hi, points)
    lam = np.array([np.sort(np.linalg.eigvalsh(gramian_matrix(sys_, t))) for t in ts])
    logt = np.log(ts)
    slopes = np.polyfit(logt, np.log(lam), 1)[0]
    det = np.polyfit(logt, np.log(lam).sum(axis=1), 1)[0]
    # eigenvalues ascending: the two smallest shrink like t^3, the others like t
    want = np.array([3, 3, 1, 1])
    return [
        _check('eigenvalue slopes', np.all(np.abs(slopes - want) <= 0.05),
               slopes=slopes.tolist(), expected=want.tolist()),
        _check('log det slope', abs(det - 8) <= 0.1, slope=det, expected=8),
        _check('smallest eigenvalue slope', abs(slopes[0] - 3) <= 0.05,
               slope=slopes[0], expected=3),
    ]


def analytic_steering_battery():
    """1-D double integrator (0,0) -> (1,0): ``tau* = sqrt 6`` and
    ``c* = (4/3) sqrt 6``, plus endpoint, quadrature and dynamics checks."""
    import scipy.integrate
    sys_ = double_integrator(1)
    r = optimal_steer(sys_, [0, 0], [1, 0], tau_max=10.0)
    ts = np.linspace(0, r.tau_star, 2001)
    U = controls_at(sys_, r, ts)
    energy = scipy.integrate.simpson((U @ sys_.R * U).sum(axis=1), x=ts)
    quad = r.tau_star + energy
    X = states_at(sys_, r, ts)
    h = 1e-5
    resid = 0.0
    for t in np.linspace(0.1, r.tau_star - 0.1, 25):
        xp, xm = states_at(sys_, r, np.array([t + h, t - h]))
        dx = (xp - xm) / (2 * h)
        u = control_at(sys_, r, t)
        resid = max(resid, np.abs(dx - (sys_.A @ states_at(sys_, r, [t])[0]
                                         + sys_.B @ u + sys_.c)).max())
    end = max(np.abs(X[0] - r.x0).max(), np.abs(X[-1] - r.x1).max())
    return [
        _check('tau* = sqrt(6)', abs(r.tau_star - math.sqrt(6)) <= 1e-5,
               tau_star=r.tau_star, expected=math.sqrt(6)),
        _check('c* = 4 sqrt(6) / 3', abs(r.cost - 4 * math.sqrt(6) / 3) <= 1e-5,
               cost=r.cost, expected=4 * math.sqrt(6) / 3),
        _check('endpoint reproduction', end <= 1e-8, error=end),
        _check('quadrature cost', abs(quad - r.cost) / r.cost <= 1e-6,
               rel_error=abs(quad - r.cost) / r.cost),
        _check('dynamics residual', resid <= 1e-5, residual=resid),
    ]


def near_pairs(sys_, count, c_lo, c_hi, seed, steerer=None, box=1.0):
    """Random pairs with optimal cost in ``[c_lo, c_hi]``.

    A start is drawn uniformly from ``[-box, box]^n``; the end is placed at
    ``xbar(tau) + L(tau) w`` for a log-uniform ``tau`` and a random ``w``,
    and the pair is kept when its optimal cost lands in the range.
    Returns ``(X0, X1, cost, tau)``.
    """
    rng = make_rng(seed)
    st = steerer or Steerer(sys_, 1.0, tol=1e-6)
    n = sys_.n
    X0s, X1s = [], []
    got = 0
    while got < count:
        m = 4 * (count - got) + 16
        X0 = rng.uniform(-box, box, (m, n))
        tau = np.exp(rng.uniform(np.log(c_lo / 3), np.log(c_hi), m))
        w = rng.normal(size=(m, n))
        w *= np.sqrt(rng.uniform(0, 2, m) * tau)[:, None] / np.linalg.norm(w, axis=1)[:, None]
        X1 = np.empty_like(X0)
        for k in range(m):
            g = gramian(sys_, tau[k])
            X1[k] = zero_input_response(sys_, X0[k], tau[k]) + g.L @ w[k]
        c, _ = st.costs(X0, X1)
        keep = np.flatnonzero((c >= c_lo) & (c <= c_hi))[:count - got]
        X0s.append(X0[keep])
        X1s.append(X1[keep])
        got += keep.size
    X0, X1 = np.vstack(X0s), np.vstack(X1s)
    c, tau = st.costs(X0, X1)
    return X0, X1, c, tau


def breakdown_battery(count=500, c_max=0.2, seed=0):
    """Optimal time is at least a third of the optimal cost on near pairs."""
    sys_ = double_integrator(2)
    _, _, c, tau = near_pairs(sys_, count, 1e-3, c_max, seed)
    ratio = tau / c
    return [_check('tau*/c* >= 1/3', np.all(ratio >= 1 / 3 - 1e-9),
                   min_ratio=float(ratio.min()), pairs=int(count))]


def perturbation_battery(etas=(0.01, 0.05), trials=200, seed=0, bound=5.0):
    """Cost growth under endpoint perturbations of Gramian size at most
    ``eta sqrt(c*)``: ``(c[sigma]/c[pi] - 1)/eta`` stays below ``bound``.

    The bound is statistical, not a worst case: for the double integrator
    ``||L^-1 e^{A tau} L|| = 2 + sqrt(3)`` and adversarial perturbations
    reach a leading-order ratio of about 7.
    """
    sys_ = double_integrator(2)
    st = Steerer(sys_, 1.0, tol=1e-6)
    rng = make_rng(seed)
    out = []
    for k, eta in enumerate(etas):
        X0, X1, c, tau = near_pairs(sys_, trials, 1e-3, 1e-1, seed * 100 + k, st)
        D0, D1 = np.empty_like(X0), np.empty_like(X1)
        for i in range(trials):
            L = gramian(sys_, tau[i]).L
            for D in (D0, D1):
                # uniform in the ball ||dx||_{G^-1} <= eta sqrt(c*)
                v = rng.normal(size=sys_.n)
                v *= rng.uniform() ** (1 / sys_.n) / np.linalg.norm(v)
                D[i] = L @ v * eta * math.sqrt(c[i])
        cs, _ = st.costs(X0 + D0, X1 + D1)
        worst = float(np.max((cs / c - 1) / eta))
        out.append(_check(f'perturbation eta={eta:g}', worst <= bound,
                          worst_ratio=worst, bound=bound, trials=trials))
    return out


def straight_reference(T=2.0, x0=(0.1, 0.5), speed=0.4):
    """Problem and reference for the tracing probe: constant-velocity
    motion along the first axis in the obstacle-free unit square
    (zero control, so its cost is its duration)."""
    free = builtin_scenario('free')
    xi = np.array([x0[0], x0[1], speed, 0.0])
    p = ProblemInstance(free.sys, free.bounds, (), xi, free.goal,
                        free.position_dims, free.tau_max, name='tracing')
    ref = np.array([xi, [x0[0] + speed * T, x0[1], speed, 0.0]])
    return p, ref, T


def exhaustivity_battery(Ns=(1000, 4000, 16000), trials=50, eps=0.5, C_p=0.03,
                         eta=0.5, seed=0):
    """Monte-Carlo probability that the samples trace a clear reference
    trajectory, for increasing sample counts."""
    p, ref, cost = straight_reference()
    rates = []
    for N in Ns:
        ok = [tracing_probe(p, ref, cost, N, seed * 1_000_003 + t, eps=eps,
                            C_p=C_p, eta=eta).success for t in range(trials)]
        rates.append(float(np.mean(ok)))
    inc = all(b >= a for a, b in zip(rates, rates[1:])) and rates[-1] > rates[0]
    return [_check('tracing rate increases with N', inc, N=list(Ns), rates=rates),
            _check('tracing rate at largest N > 0.9', rates[-1] > 0.9,
                   rate=rates[-1])]


SUITES = {
    'spectral': lambda: spectral_battery(),
    'steering': lambda: (analytic_steering_battery() + breakdown_battery()
                         + perturbation_battery()),
    'exhaustivity': lambda: exhaustivity_battery(),
}


def run_property_suite(name):
    """Run a named battery; returns a report with one entry per check."""
    try:
        checks = SUITES[name]()
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}") from None
    return {'suite': name, 'passed': all(c['passed'] for c in checks),
            'checks': checks}


# -- entry point -----------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog='lqdmp', description=__doc__.split('\n')[0])
    sub = ap.add_subparsers(dest='cmd', required=True)
    pl = sub.add_parser('plan', help='run one planner on a scenario')
    pl.add_argument('scenario', help='scenario JSON file or built-in name')
    pl.add_argument('--n', type=int, default=1000)
    pl.add_argument('--seed', type=int, default=0)
    pl.add_argument('--variant', default='optimal',
                    help="'optimal' or 'fixed:TAU'")
    pl.add_argument('--planner', choices=sorted(PLANNERS), default='dfmt')
    pl.add_argument('--eta', type=float, default=0.5)
    pl.add_argument('--radius', type=float, default=None)
    pl.add_argument('--cache', default=None, help='neighbor cache file')
    pl.add_argument('--svg', default=None)
    pl.add_argument('--out', default='.', help='directory for the plan JSON')
    sw = sub.add_parser('sweep', help='run a Monte-Carlo experiment')
    sw.add_argument('experiment', help='experiment JSON file')
    vf = sub.add_parser('verify', help='run a property suite')
    vf.add_argument('suite', choices=sorted(SUITES))
    return ap


def _err(msg):
    print(f"lqdmp: error: {msg}", file=sys.stderr)


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.cmd == 'plan':
        try:
            p = resolve_scenario(args.scenario)
            tau, cache = parse_variant(args.variant)
            cfg = PlannerConfig(N=args.n, eta=args.eta, radius_override=args.radius,
                                fixed_tau=tau, cache_neighbors=cache)
        except (LQDMPError, ValueError, OSError) as exc:
            _err(exc)
            return 2
        out = output_dir(args.out)
        try:
            plan, rec = run_single(p, cfg, args.seed, planner=args.planner,
                                   out_dir=out, svg=args.svg, cache_path=args.cache)
        except CacheMismatch as exc:
            _err(exc)
            return 2
        r = plan.radius
        if plan.success:
            print(f"{p.name}: {args.planner} N={args.n} seed={args.seed} "
                  f"r_N={r:.4g}: cost {plan.cost:.6g} over "
                  f"{len(plan.waypoints) - 1} segments ({rec.wall_ms:.0f} ms)")
            return 0
        print(f"{p.name}: {args.planner} N={args.n} seed={args.seed} "
              f"r_N={r:.4g}: no path found ({rec.wall_ms:.0f} ms)")
        return 1
    if args.cmd == 'sweep':
        try:
            spec = ExperimentSpec.load(args.experiment)
            resolve_scenario(spec.scenario)
        except (LQDMPError, ValueError, TypeError, OSError) as exc:
            _err(exc)
            return 2
        path, recs = run_sweep(spec, log=lambda m: print(m, file=sys.stderr))
        print(path)
        return 0
    report = run_property_suite(args.suite)
    for c in report['checks']:
        extra = {k: v for k, v in c.items() if k not in ('name', 'passed')}
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {json.dumps(extra)}")
    return 0 if report['passed'] else 1


if __name__ == '__main__':
    sys.exit(main())
