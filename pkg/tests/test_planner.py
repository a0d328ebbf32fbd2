import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lqdmp import (CacheMismatch, LinearAffineSystem, Steerer,
                   controllability_info, double_integrator, gramian)
from lqdmp.planner import (NeighborCache, PlannerConfig, cache_header,
                           dfmt_star, dprm_star, estimate_C_mu, get_cache,
                           near, radius, sample_vertices, theorem_radius,
                           unit_ball_volume)
from lqdmp.world import (Box, ProblemInstance, builtin_scenario,
                         collision_free, default_dt, free_volume, in_goal)
from oracles import di_cost_table, di_optimal, enumerate_best_path

DI2 = double_integrator(2)


def free_world(goal=((0.8, 0.8, -1, -1), (0.95, 0.95, 1, 1)), x_init=(0.1, 0.1, 0, 0)):
    return ProblemInstance(DI2, Box([0, 0, -1, -1], [1, 1, 1, 1]), (), x_init,
                           Box(*goal), (0, 1))


def blocked_world():
    wall = Box([0.45, -1], [0.55, 2])
    return free_world().with_obstacles([wall])


# -- connection radius --------------------------------------------------------

def test_radius_dtilde_double_integrator():
    info = controllability_info(DI2)
    assert float(info.Dtilde) == 6.0


def test_radius_doubling_ratio():
    info = controllability_info(DI2)
    N = 1000
    r1 = radius(info, 1.0, 0.5, 0.3, N)
    r2 = radius(info, 1.0, 0.5, 0.3, 2 * N)
    assert r2 / r1 == pytest.approx((math.log(2 * N) / (2 * math.log(N))) ** (1 / 6), rel=1e-12)


def test_radius_unit_constants():
    info = controllability_info(DI2)
    n, D, Dt = info.n, info.D, float(info.Dtilde)
    C_mu = 0.7
    # choose mu_free so the constant factor is exactly one
    mu = C_mu * Dt / (6.0 ** (n + D / 2) * 2.0 ** (n / 2))
    r = radius(info, mu, C_mu, 0.0, math.e**2)
    assert r == pytest.approx((2 / math.e**2) ** (1 / Dt), rel=1e-12)


def test_radius_explicit_formula():
    info = controllability_info(DI2)
    r = radius(info, 2.0, 0.9, 0.5, 500)
    want = (1.5 * 6.0**8 * 4.0 * 2.0 / (0.9 * 6) * math.log(500) / 500) ** (1 / 6)
    assert r == pytest.approx(want, rel=1e-12)


def test_radius_needs_two_samples():
    with pytest.raises(ValueError):
        radius(controllability_info(DI2), 1.0, 1.0, 0.0, 1)


def test_radius_decreases_with_N():
    p = builtin_scenario('maze')
    rs = [theorem_radius(p, N, 0.5) for N in (500, 1000, 2000, 4000, 8000)]
    assert all(a > b for a, b in zip(rs, rs[1:]))


# -- C_mu -------------------------------------------------------------------

def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(4) == pytest.approx(math.pi**2 / 2)


def test_C_mu_double_integrator_1d():
    assert estimate_C_mu(double_integrator(1), 1.0) == pytest.approx(math.pi / math.sqrt(12), rel=1e-9)
    assert math.pi / math.sqrt(12) == pytest.approx(0.9069, abs=1e-4)


def test_C_mu_scalar_integrator():
    sys = LinearAffineSystem([[0.0]], [[1.0]])
    assert estimate_C_mu(sys, 0.5) == pytest.approx(2.0, rel=1e-12)


def test_C_mu_ratio_flat_for_nilpotent():
    sys = LinearAffineSystem(np.diag([1.0, 1.0], k=1), [0, 0, 1])
    info = controllability_info(sys)
    ts = np.arange(1, 33) / 32 * 1.0
    ratio = [unit_ball_volume(3) * math.sqrt(np.linalg.det(gramian(sys, t).G)) / t ** (info.D / 2)
             for t in ts]
    assert (max(ratio) - min(ratio)) / min(ratio) < 0.01
    assert estimate_C_mu(sys, 1.0) == pytest.approx(min(ratio), rel=1e-9)


def test_C_mu_rejects_nonpositive():
    with pytest.raises(ValueError):
        estimate_C_mu(DI2, 0.0)


# -- near sets ------------------------------------------------------------------

@pytest.fixture(scope='module')
def near_table():
    rng = np.random.default_rng(50)
    V = rng.uniform([0, 0, -1, -1], [1, 1, 1, 1], size=(50, 4))
    return V, di_cost_table(V, 5.0)


def gap_radius(C, q):
    """A radius in the middle of the widest gap near quantile ``q`` of the
    finite costs, so no cost sits within rounding of the boundary."""
    c = np.sort(C[np.isfinite(C)])
    k = int(q * len(c))
    window = range(max(k - 20, 0), min(k + 20, len(c) - 1))
    i = max(window, key=lambda i: c[i + 1] - c[i])
    assert (c[i + 1] - c[i]) / c[i] > 1e-4
    return 0.5 * (c[i] + c[i + 1])


@pytest.mark.parametrize("prune", [True, False])
@pytest.mark.parametrize("q", [0.05, 0.3])
def test_near_matches_bruteforce_table(near_table, prune, q):
    V, C = near_table
    r = gap_radius(C, q)
    st_ = Steerer(DI2, 5.0, tol=1e-6)
    for i in range(len(V)):
        fwd = near(V, i, r, 'forward', steerer=st_, prune=prune)
        bwd = near(V, i, r, 'backward', steerer=st_, prune=prune)
        np.testing.assert_array_equal(fwd, np.flatnonzero(C[i] < r))
        np.testing.assert_array_equal(bwd, np.flatnonzero(C[:, i] < r))


def test_near_below_min_cost_is_empty(near_table):
    V, C = near_table
    st_ = Steerer(DI2, 5.0, tol=1e-6)
    r = 0.5 * C.min()
    assert all(near(V, i, r, steerer=st_).size == 0 for i in range(len(V)))


def test_near_with_state_query(near_table):
    V, C = near_table
    st_ = Steerer(DI2, 5.0, tol=1e-6)
    r = gap_radius(C, 0.2)
    # a free-standing state (not an index) is not excluded from V
    got = near(V[1:], V[0], r, steerer=st_)
    np.testing.assert_array_equal(got, np.flatnonzero(C[0, 1:] < r))


def test_near_cache_transparent(near_table):
    V, C = near_table
    st_ = Steerer(DI2, 5.0, tol=1e-6)
    r = gap_radius(C, 0.3)
    cache = NeighborCache.build(V, st_, r, {'test': True})
    for i in range(len(V)):
        for d in ('forward', 'backward'):
            np.testing.assert_array_equal(near(V, i, r, d, cache=cache),
                                          near(V, i, r, d, steerer=st_))
    # a smaller radius is answered from the same cache
    r2 = gap_radius(C, 0.1)
    for i in range(len(V)):
        np.testing.assert_array_equal(near(V, i, r2, cache=cache), np.flatnonzero(C[i] < r2))


def test_near_argument_errors(near_table):
    V, _ = near_table
    with pytest.raises(ValueError):
        near(V, 0, 1.0, 'sideways', steerer=Steerer(DI2, 5.0))
    with pytest.raises(ValueError):
        near(V, 0, 1.0)


# -- DFMT* ----------------------------------------------------------------------

def check_tree(plan, p, cfg):
    g = plan.graph
    r = plan.radius
    targets = [v for _, v, _ in g.edges]
    assert len(targets) == len(set(targets))           # enters the tree at most once
    assert 0 not in targets
    for u, v, w in g.edges:
        assert g.parent[v] == u
        assert w < r
        assert g.cost_to_come[v] == pytest.approx(g.cost_to_come[u] + w, abs=1e-9)
    for v in targets:                                    # acyclic, rooted at x_init
        seen = set()
        while v != 0:
            assert v not in seen
            seen.add(v)
            v = int(g.parent[v])
    exp = np.array(g.expansions)
    assert np.all(np.diff(exp) >= -1e-12)               # wavefront monotonicity


def revalidate(plan, p):
    segs = plan.trajectory.segments
    np.testing.assert_array_equal(segs[0].x0, p.x_init)
    for a, b in zip(segs[:-1], segs[1:]):
        np.testing.assert_array_equal(a.x1, b.x0)
    assert in_goal(p, segs[-1].x1)
    for s in segs:
        assert collision_free(p, p.sys, s, default_dt(s.tau_star) / 2)
    assert plan.cost == pytest.approx(sum(s.cost for s in segs), rel=1e-12)


def test_dfmt_goal_contains_start():
    p = free_world(goal=((0.05, 0.05, -1, -1), (0.2, 0.2, 1, 1)))
    plan = dfmt_star(p, PlannerConfig(N=20), seed=0)
    assert plan.success and plan.cost == 0.0
    assert plan.waypoints == [0] and plan.trajectory.segments == []


def test_dfmt_blocked_world_fails():
    p = blocked_world()
    plan = dfmt_star(p, PlannerConfig(N=150), seed=1)
    assert not plan.success and math.isinf(plan.cost)
    assert plan.stats['iterations'] > 0
    assert dprm_star(p, PlannerConfig(N=150), seed=1).success is False


@pytest.fixture(scope='module')
def free_runs():
    p = free_world()
    cfg = PlannerConfig(N=200)
    V = sample_vertices(p, cfg.N, 7, cfg.n_goal())
    return p, cfg, V, dfmt_star(p, cfg, 7, V=V), dprm_star(p, cfg, 7, V=V)


def test_dfmt_free_world_bounds(free_runs):
    p, cfg, V, fm, pr = free_runs
    assert fm.success and pr.success
    goals = [v for v in V if in_goal(p, v)]
    direct_best = min(di_optimal(p.x_init, g, p.tau_max)[0] for g in goals)
    direct_end = di_optimal(p.x_init, V[fm.waypoints[-1]], p.tau_max)[0]
    assert fm.cost >= direct_best * (1 - 1e-6)
    assert fm.cost >= direct_end * (1 - 1e-6)
    assert pr.cost <= fm.cost + 1e-9
    # without obstacles the tree search and the graph search coincide
    assert fm.cost <= pr.cost + 1e-9


def test_dfmt_tree_invariants(free_runs):
    p, cfg, V, fm, _ = free_runs
    check_tree(fm, p, cfg)
    revalidate(fm, p)
    assert fm.stats['steer_calls'] > 0


def test_dfmt_maze_invariants():
    p = builtin_scenario('maze')
    cfg = PlannerConfig(N=300)
    plan = dfmt_star(p, cfg, seed=3)
    check_tree(plan, p, cfg)
    if plan.success:
        revalidate(plan, p)
    # stored weights are lattice values: never below the optimum, close to it
    u, v, w = map(np.array, zip(*plan.graph.edges))
    Vx = plan.graph.vertices
    exact, _ = Steerer(p.sys, p.tau_max, tol=1e-6).costs(Vx[u], Vx[v])
    assert np.all(w >= exact * (1 - 1e-6))
    np.testing.assert_allclose(w, exact, rtol=1e-2)


def test_dfmt_deterministic():
    p = builtin_scenario('wall')
    a = dfmt_star(p, PlannerConfig(N=150), seed=11)
    b = dfmt_star(p, PlannerConfig(N=150), seed=11)
    assert a.to_json() == b.to_json()


def test_dfmt_fixed_time_variant():
    p = free_world()
    cfg = PlannerConfig(N=150, fixed_tau=0.5)
    plan = dfmt_star(p, cfg, seed=2)
    assert cfg.variant == 'fixed-tau(0.5)'
    if plan.success:
        assert all(s.tau_star == 0.5 and s.kind == 'fixed-time' for s in plan.trajectory.segments)
        assert plan.trajectory.duration == pytest.approx(0.5 * len(plan.trajectory.segments))


# -- DPRM* ----------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_dprm_not_worse_than_dfmt_maze(seed):
    p = builtin_scenario('maze')
    cfg = PlannerConfig(N=250)
    V = sample_vertices(p, cfg.N, seed, cfg.n_goal())
    fm = dfmt_star(p, cfg, seed, V=V)
    pr = dprm_star(p, cfg, seed, V=V)
    assert fm.radius == pr.radius
    if fm.success:
        assert pr.success and pr.cost <= fm.cost + 1e-9
        revalidate(pr, p)


@pytest.mark.parametrize("seed, N", [(0, 4), (1, 5), (2, 6), (3, 7)])
def test_dprm_matches_enumeration(seed, N):
    p = free_world()
    cfg = PlannerConfig(N=N, steer_tol=1e-6, radius_override=3.0)
    V = sample_vertices(p, N, seed, cfg.n_goal())
    lo, hi = p.bounds.lo, p.bounds.hi
    C = di_cost_table(V, p.tau_max, free=lambda X: np.all((X >= lo) & (X <= hi), axis=1))
    goal = np.array([in_goal(p, v) for v in V])
    want, path = enumerate_best_path(C, 3.0, goal)
    plan = dprm_star(p, cfg, seed, V=V)
    if path is None:
        assert not plan.success
    else:
        assert plan.success
        assert plan.cost == pytest.approx(want, rel=1e-6)


def test_dprm_infinite_radius_equals_direct():
    p = free_world()
    cfg = PlannerConfig(N=60, steer_tol=1e-6, radius_override=math.inf)
    V = sample_vertices(p, cfg.N, 4, goal_samples=3)
    plan = dprm_star(p, cfg, 4, V=V)
    goals = [v for v in V if in_goal(p, v)]
    direct = min(di_optimal(p.x_init, g, p.tau_max)[0] for g in goals)
    assert plan.success
    assert plan.cost == pytest.approx(direct, rel=1e-6)


# -- neighbor cache ---------------------------------------------------------------

def test_cache_roundtrip_and_planner_transparency(tmp_path):
    p = builtin_scenario('maze')
    cfg = PlannerConfig(N=150)
    V = sample_vertices(p, cfg.N, 5, cfg.n_goal())
    r = theorem_radius(p, cfg.N, cfg.eta)
    st_ = Steerer(p.sys, p.tau_max, tol=cfg.steer_tol)
    path = tmp_path / 'nb.npz'
    c1, hit1 = get_cache(p, cfg, 5, V, r, st_, path)
    c2, hit2 = get_cache(p, cfg, 5, V, r, st_, path)
    assert (hit1, hit2) == (False, True)
    for name in ('indptr', 'indices', 'costs', 'lattice_idx'):
        np.testing.assert_array_equal(getattr(c1, name), getattr(c2, name))
    plain = dfmt_star(p, cfg, 5, V=V)
    cached = dfmt_star(p, cfg, 5, V=V, cache=c2)
    assert plain.success == cached.success
    assert plain.waypoints == cached.waypoints
    assert plain.cost == pytest.approx(cached.cost, abs=1e-9)
    assert dprm_star(p, cfg, 5, V=V, cache=c2).cost == pytest.approx(
        dprm_star(p, cfg, 5, V=V).cost, abs=1e-9)


def test_cache_is_obstacle_independent(tmp_path):
    p = builtin_scenario('free')
    q = builtin_scenario('wall')
    cfg = PlannerConfig(N=80)
    V = sample_vertices(p, cfg.N, 1, cfg.n_goal())
    r = theorem_radius(p, cfg.N, cfg.eta)
    assert cache_header(p, cfg, 1, V, r) == cache_header(q, cfg, 1, V, r)


def test_cache_mismatch(tmp_path):
    p = builtin_scenario('free')
    cfg = PlannerConfig(N=60)
    V = sample_vertices(p, cfg.N, 1, cfg.n_goal())
    r = theorem_radius(p, cfg.N, cfg.eta)
    st_ = Steerer(p.sys, p.tau_max, tol=cfg.steer_tol)
    path = tmp_path / 'nb.npz'
    get_cache(p, cfg, 1, V, r, st_, path)
    with pytest.raises(CacheMismatch, match='seed'):
        get_cache(p, cfg, 2, V, r, st_, path)
    with pytest.raises(CacheMismatch, match='r_N'):
        NeighborCache.load(path, {'r_N': r * 1.01})
    with pytest.raises(CacheMismatch, match='variant'):
        get_cache(p, PlannerConfig(N=60, fixed_tau=0.3), 1, V, r, st_, path)
    (tmp_path / 'junk.npz').write_bytes(b'not a cache')
    with pytest.raises(CacheMismatch):
        NeighborCache.load(tmp_path / 'junk.npz')


# -- configuration ---------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [dict(N=0), dict(eta=-1), dict(radius_override=0.0),
                                    dict(fixed_tau=-1.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        PlannerConfig(**kwargs)


def test_config_goal_samples_default():
    assert PlannerConfig(N=50).n_goal() == 1
    assert PlannerConfig(N=1234).n_goal() == 12


def test_sample_vertices_layout():
    p = builtin_scenario('maze')
    V = sample_vertices(p, 300, 0)
    assert V.shape == (304, 4)
    np.testing.assert_array_equal(V[0], p.x_init)
    assert all(in_goal(p, v) for v in V[-3:])


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_dprm_le_dfmt_property(seed):
    p = builtin_scenario('wall')
    cfg = PlannerConfig(N=120)
    V = sample_vertices(p, cfg.N, seed, cfg.n_goal())
    fm = dfmt_star(p, cfg, seed, V=V)
    pr = dprm_star(p, cfg, seed, V=V)
    if fm.success:
        assert pr.cost <= fm.cost + 1e-9
    check_tree(fm, p, cfg)


def test_free_volume_used_in_radius():
    p = builtin_scenario('maze')
    info = controllability_info(p.sys)
    r = theorem_radius(p, 1000, 0.5)
    assert r == pytest.approx(radius(info, free_volume(p), estimate_C_mu(p.sys, 1.0), 0.5, 1000))
