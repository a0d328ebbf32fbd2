"""Independent reference computations shared by the test modules.

Everything here uses closed forms for the double integrator instead of the
package's Gramian/lattice machinery.
"""

import numpy as np
from scipy.optimize import minimize_scalar


def di_cost(x0, x1, tau):
    """Fixed-time cost of the k-axis double integrator (state ``[p, v]``,
    unit input weight), broadcast over leading axes of ``x0``, ``x1`` and
    ``tau``.

    Per axis ``G(t)^-1 = [[12/t^3, -6/t^2], [-6/t^2, 4/t]]``.
    """
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    t = np.asarray(tau, dtype=float)
    k = x0.shape[-1] // 2
    p0, v0 = x0[..., :k], x0[..., k:]
    p1, v1 = x1[..., :k], x1[..., k:]
    tt = t[..., None]
    ep = p1 - p0 - v0 * tt
    ev = v1 - v0
    q = 12 * ep**2 / tt**3 - 12 * ep * ev / tt**2 + 4 * ev**2 / tt
    return t + q.sum(axis=-1)


def di_optimal(x0, x1, tau_max, tau_min=1e-4, points=4000):
    """``(c*, tau*)`` by a dense log grid followed by bounded Brent
    refinement around the best grid point."""
    ts = np.geomspace(tau_min, tau_max, points)
    c = di_cost(x0, x1, ts)
    k = int(np.argmin(c))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, points - 1)]
    res = minimize_scalar(lambda t: float(di_cost(x0, x1, t)), bounds=(lo, hi),
                          method='bounded', options={'xatol': 1e-12 * hi})
    if res.fun < c[k]:
        return float(res.fun), float(res.x)
    return float(c[k]), float(ts[k])


def di_states(x0, x1, tau, t):
    """States of the fixed-time optimal connection at times ``t``.

    Per axis, with ``d = G(tau)^-1 (x1 - e^{A tau} x0)``, the control is
    ``u(t) = (tau - t) d_p + d_v`` and position/velocity are its integrals.
    """
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    k = x0.size // 2
    p0, v0, p1, v1 = x0[:k], x0[k:], x1[:k], x1[k:]
    ep = p1 - p0 - v0 * tau
    ev = v1 - v0
    dp = 12 * ep / tau**3 - 6 * ev / tau**2
    dv = -6 * ep / tau**2 + 4 * ev / tau
    t = np.asarray(t, dtype=float)[:, None]
    v = v0 + dp * (tau * t - t**2 / 2) + dv * t
    p = p0 + v0 * t + dp * (tau * t**2 / 2 - t**3 / 6) + dv * t**2 / 2
    return np.hstack([p, v])


def di_free(x0, x1, tau, free):
    """Whether the connection passes ``free`` (a vectorized state
    predicate) at ``k dt / 2`` below ``tau`` and at ``tau``, with
    ``dt = min(tau / 32, 5e-3)``."""
    h = min(tau / 32, 5e-3) / 2
    t = np.arange(int(np.ceil(tau / h))) * h
    return bool(np.all(free(di_states(x0, x1, tau, t))) and np.all(free(np.atleast_2d(x1))))


def di_cost_table(V, tau_max, free=None):
    """All-pairs ``c*(V[i], V[j])`` (inf on the diagonal). With a state
    predicate ``free``, pairs whose optimal connection leaves free space
    get cost inf."""
    n = len(V)
    C = np.full((n, n), np.inf)
    for i in range(n):
        for j in range(n):
            if i != j:
                c, tau = di_optimal(V[i], V[j], tau_max)
                if free is None or di_free(V[i], V[j], tau, free):
                    C[i, j] = c
    return C


def enumerate_best_path(C, r, goal_mask):
    """Cheapest waypoint sequence from vertex 0 to any goal vertex, every
    edge cost ``< r``, by visiting every simple path (depth-first, no
    pruning). Returns ``(cost, path)``; ``(inf, None)`` when none exists."""
    n = len(C)
    adj = [[j for j in range(n) if j != i and C[i, j] < r] for i in range(n)]
    best = [np.inf, None]
    path = [0]
    on = [False] * n
    on[0] = True

    def visit(u, cost):
        if goal_mask[u] and cost < best[0]:
            best[0], best[1] = cost, list(path)
        for v in adj[u]:
            if not on[v]:
                on[v] = True
                path.append(v)
                visit(v, cost + C[u, v])
                path.pop()
                on[v] = False

    visit(0, 0.0)
    return best[0], best[1]
